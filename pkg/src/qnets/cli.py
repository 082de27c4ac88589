"""Batch scenario runner.

Usage::

    qnets --scenario bb84 --n 100000 --lambda 0.1 --trials 10 --seed 7
    qnets --config run.cfg --lambda 1 --format csv --out bb84.csv
    qnets --list

Config files are flat ``key = value`` lines; ``#`` starts a comment.
``scenario``, ``trials`` and ``seed`` are reserved keys, everything else is
a scenario parameter. Command-line flags override file values. Trial ``i``
draws from the random stream derived from ``(seed, i)``, so a report can be
reproduced exactly from its echoed seed.

Reports are JSON (one document, sorted keys) or CSV (header row, one row per
trial, LF endings). Floats are written with 12 significant digits.

QKD transcripts (``transcript = path`` for ``bb84``/``b92``) hold one pulse
per line: ``index,alice_basis,alice_bit,eve_action,bob_basis,bob_bit`` with
bases written ``+``/``x`` and ``eve_action`` either ``-`` (idle) or the basis
Eve measured in. With several trials, ``.<trial>`` is appended to the path.

Exit status: 0 success, 1 if any trial aborted, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import algorithms, byzantine, fingerprint, games, netsim, protocols, qkd, qsim
from .errors import QnetsError, ResourceExhausted, UsageError
from .resources import ResourceLedger

RESERVED = ("scenario", "trials", "seed")


@dataclass
class Scenario:
    defaults: dict
    run: Callable[[dict, np.random.Generator, int], tuple[dict, ResourceLedger | None]]
    help: str


def _qkd_params(p: dict) -> qkd.QkdParams:
    return qkd.QkdParams(
        n_pulses=p["n"],
        eve_lambda=p["lambda"],
        channel_flip=p["flip"],
        sample_fraction=p["sample_fraction"],
        e_max=p["e_max"],
        security_s=p["security"],
        passes=p["passes"],
        statevector=p["statevector"],
    )


def _transcript_path(p: dict, trial: int) -> str | None:
    if not p["transcript"]:
        return None
    return p["transcript"] if p["_trials"] == 1 else f"{p['transcript']}.{trial}"


def _qkd_record(report: qkd.SessionReport) -> dict:
    rec = report.reconciliation
    return {
        "sifted_fraction": report.sifted_fraction,
        "pre_sift_agreement": report.pre_sift_agreement,
        "qber": report.qber,
        "true_qber": report.true_qber,
        "eve_info_estimate": report.eve_info_estimate,
        "eve_known_fraction": report.eve_known_fraction,
        "revealed_R": report.revealed,
        "disclosed_K": rec.get("disclosed_parities", 0),
        "leak_L": report.leak_L,
        "security_S": report.security_S,
        "sifted_len": report.sifted_len,
        "final_key_len": report.final_key_len,
        "keys_equal": report.keys_equal,
        "aborted": report.aborted,
        "abort_reason": report.abort_reason or "",
    }


def _run_qkd(session):
    def run(p, rng, trial):
        path = _transcript_path(p, trial)
        report = session(_qkd_params(p), rng, keep_transcript=path is not None)
        if path is not None:
            qkd.write_transcript(report.transcript, path)
        return _qkd_record(report), None

    return run


def _run_interferometer(p, rng, trial):
    stats = protocols.interferometer(protocols.InterferometerConfig(p["splitters"], p["obstacle"]))
    probs = [stats.p_A, stats.p_B, stats.p_absorbed]
    detector = ("A", "B", "absorbed")[int(rng.choice(3, p=np.array(probs) / sum(probs)))]
    return {"p_A": stats.p_A, "p_B": stats.p_B, "p_absorbed": stats.p_absorbed, "detector": detector, "aborted": False}, None


def _run_superdense(p, rng, trial):
    msg = p["message"]
    if msg == "random":
        msg = format(int(rng.integers(4)), "02b")
    decoded = protocols.superdense_decode(protocols.superdense_encode(msg))
    ledger = ResourceLedger(epr_consumed=1, classical_bits_sent=0)
    return {"sent": msg, "decoded": decoded, "correct": decoded == msg, "aborted": False}, ledger


def _run_teleport(p, rng, trial):
    ledger = ResourceLedger()
    psi = qsim.random_state([2], rng)
    (l1, l2), out = protocols.teleport(psi, None, rng)
    ledger.record_teleport()
    return {"l1": l1, "l2": l2, "fidelity": qsim.fidelity(psi, out), "aborted": False}, ledger


def _run_byzantine(p, rng, trial):
    x = int(rng.integers(2)) if p["x"] == "random" else int(p["x"])
    out = byzantine.run_broadcast(p["m"], x, p["adversary"], rng)

    def show(d):
        return "bot" if d is None else str(d)

    return {
        "sender_bit": x,
        "decision_R0": show(out.decisions["R0"]),
        "decision_R1": show(out.decisions["R1"]),
        "detected_cheater": out.detected_cheater or "",
        "consistent": out.consistent,
        "aborted": False,
    }, None


def _run_fingerprint(p, rng, trial):
    code = fingerprint.hadamard_code(p["n"])
    x = rng.integers(0, 2, p["n"], dtype=np.uint8)
    y = x.copy()
    if not p["equal"]:
        while np.array_equal(x, y):
            y = rng.integers(0, 2, p["n"], dtype=np.uint8)
    declared = fingerprint.referee_compare(x, y, code, p["repetitions"], rng)
    return {
        "x": "".join(map(str, x)),
        "y": "".join(map(str, y)),
        "declared_equal": declared,
        "correct": declared == bool(np.array_equal(x, y)),
        "aborted": False,
    }, None


def _strategy(name: str) -> np.ndarray:
    named = {"C": games.COOPERATE, "D": games.DEFECT, "Q": games.QUANTUM}
    if name in named:
        return named[name]
    try:
        theta, phi = (float(v) for v in name.split(":"))
    except ValueError as exc:
        raise UsageError(f"strategy must be C, D, Q or theta:phi, got {name!r}") from exc
    return games.ewl_strategy(theta, phi)


def _run_ewl(p, rng, trial):
    config = games.GameConfig(gamma=p["gamma"], entangler=p["entangler"])
    ua, ub = _strategy(p["alice"]), _strategy(p["bob"])
    pa, pb = games.ewl_play(ua, ub, config)
    dist = games.ewl_distribution(ua, ub, config)
    keys = sorted(dist)
    i, j = keys[int(rng.choice(len(keys), p=np.array([dist[k] for k in keys]) / sum(dist.values())))]
    moves = "CD"
    return {
        "payoff_alice": pa,
        "payoff_bob": pb,
        "sampled_outcome": moves[i] + moves[j],
        "sampled_payoff_alice": config.payoffs.row(i, j),
        "sampled_payoff_bob": config.payoffs.col(i, j),
        "aborted": False,
    }, None


def _run_contract(p, rng, trial):
    if p["mode"] == "revoke":
        psi = qsim.random_state([2], rng)
        revoked = games.contract_revoke(games.contract_commit([psi]), rng)
        a, b = psi.amplitudes
        return {
            "fidelity_after_revoke": revoked.bob_fidelities()[0],
            "expected_fidelity": abs(a) ** 4 + abs(b) ** 4,
            "aborted": False,
        }, None
    if p["mode"] != "hostage":
        raise UsageError(f"contract mode must be 'revoke' or 'hostage', got {p['mode']!r}")
    alice = [qsim.random_state([2], rng) for _ in range(p["data_qubits"])]
    bob = [qsim.random_state([2], rng) for _ in range(p["data_qubits"])]
    res = games.hostage_exchange(alice, bob, p["decoys"], p["adversary"], rng)
    return {
        "outcome": res.outcome,
        "side": res.side or "",
        "alice_caught": res.caught["Alice"],
        "bob_caught": res.caught["Bob"],
        "mean_fidelity_alice": float(np.mean(res.fidelities["Alice"])) if alice else 1.0,
        "mean_fidelity_bob": float(np.mean(res.fidelities["Bob"])) if bob else 1.0,
        "aborted": False,
    }, None


def _run_grover(p, rng, trial):
    marked = rng.choice(2 ** p["n"], size=p["k"], replace=False) if p["k"] else []
    inst = algorithms.GroverInstance(p["n"], frozenset(int(v) for v in marked))
    iterations = None if p["iterations"] < 0 else p["iterations"]
    res = algorithms.grover_search(inst, rng, iterations, k_known=p["k_known"])
    return {
        "found": -1 if res.x is None else res.x,
        "success": res.success,
        "success_probability": res.success_probability,
        "iterations": res.iterations[0],
        "restarts": res.restarts,
        "aborted": False,
    }, None


def _run_shor(p, rng, trial):
    res = algorithms.shor_factor(p["M"], rng, p["max_attempts"])
    last = res.attempts[-1] if res.attempts else None
    return {
        "factor": res.factor or 0,
        "cofactor": res.cofactor or 0,
        "attempts": len(res.attempts),
        "last_y": last.y if last else 0,
        "last_r": (last.r or 0) if last else 0,
        "success": res.success,
        "aborted": not res.success,
        "abort_reason": "" if res.success else "attempts_exhausted",
    }, None


def _run_netsim(p, rng, trial):
    topo = netsim.build_topology(p["levels"], p["fanout"], p["hosts"])
    store = netsim.EntanglementStore.provisioned(topo, p["pairs_per_edge"])
    ledger = ResourceLedger()
    hops = len(netsim.route_path(topo, p["src"], p["dst"])) - 1
    record = {"hops": hops, "fidelity": 0.0, "aborted": False, "abort_reason": ""}
    try:
        if p["mode"] == "relay":
            key = rng.integers(0, 2, p["key_bits"], dtype=np.uint8)
            path = netsim.route_path(topo, p["src"], p["dst"])
            res = netsim.trusted_relay_key_transport(
                topo, key, p["src"], p["dst"], netsim.generate_hop_keys(path, p["key_bits"], rng), ledger
            )
            record["fidelity"] = float(np.array_equal(res.delivered, key))
        elif p["mode"] in ("teleport", "virtual"):
            psi = qsim.random_state([2], rng)
            if p["mode"] == "teleport":
                out = netsim.teleport_route(topo, psi, p["src"], p["dst"], store, ledger, rng)
            else:
                netsim.virtual_link(topo, p["src"], p["dst"], store, ledger, rng)
                out = netsim.teleport_virtual(psi, p["src"], p["dst"], store, ledger, rng)
            record["fidelity"] = qsim.fidelity(psi, out)
        else:
            raise UsageError(f"netsim mode must be teleport, virtual or relay, got {p['mode']!r}")
    except ResourceExhausted as exc:
        record.update(aborted=True, abort_reason=str(exc))
    return record, ledger


_QKD_DEFAULTS = {
    "n": 100_000,
    "lambda": 0.0,
    "flip": 0.0,
    "sample_fraction": 0.1,
    "e_max": 0.11,
    "security": 30,
    "passes": 2,
    "statevector": False,
    "transcript": "",
}

SCENARIOS: dict[str, Scenario] = {
    "interferometer": Scenario({"splitters": 2, "obstacle": False}, _run_interferometer, "beam-splitter detector statistics"),
    "superdense": Scenario({"message": "random"}, _run_superdense, "two bits through one qubit"),
    "teleport": Scenario({}, _run_teleport, "teleport a random qubit"),
    "bb84": Scenario(dict(_QKD_DEFAULTS), _run_qkd(qkd.run_bb84_session), "BB84 session with optional eavesdropper"),
    "b92": Scenario(dict(_QKD_DEFAULTS), _run_qkd(qkd.b92_session), "B92 session with optional eavesdropper"),
    "byzantine": Scenario({"m": 30, "x": "random", "adversary": "all_honest"}, _run_byzantine, "three-player detectable broadcast"),
    "fingerprint": Scenario({"n": 3, "repetitions": 1, "equal": False}, _run_fingerprint, "SWAP-test equality referee"),
    "ewl": Scenario(
        {"gamma": math.pi / 2, "alice": "Q", "bob": "Q", "entangler": "DD"}, _run_ewl, "quantized Prisoner's Dilemma"
    ),
    "contract": Scenario(
        {"mode": "hostage", "decoys": 4, "adversary": "none", "data_qubits": 1}, _run_contract, "quantum contracts"
    ),
    "grover": Scenario({"n": 10, "k": 1, "iterations": -1, "k_known": True}, _run_grover, "Grover search"),
    "shor": Scenario({"M": 15, "max_attempts": 10}, _run_shor, "Shor factoring"),
    "netsim": Scenario(
        {
            "levels": 2,
            "fanout": 2,
            "hosts": 2,
            "src": "H0",
            "dst": "H3",
            "mode": "teleport",
            "pairs_per_edge": 1,
            "key_bits": 128,
        },
        _run_netsim,
        "quantum internet routing",
    ),
}


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    trials: int = 1
    seed: int | None = None
    seed_source: str = "config"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        defaults = SCENARIOS[self.scenario].defaults
        unknown = sorted(set(self.params) - set(defaults))
        if unknown:
            raise UsageError(f"unknown parameter(s) for {self.scenario}: {', '.join(unknown)}")
        self.params = {k: _coerce(k, self.params.get(k, v), v) for k, v in defaults.items()}
        if self.seed is None:
            self.seed = int(np.random.SeedSequence().entropy % 2**63)
            self.seed_source = "entropy"


def _coerce(key: str, value, default):
    if not isinstance(value, str) or isinstance(default, str):
        return value if not isinstance(default, str) else str(value)
    try:
        if isinstance(default, bool):
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise UsageError(f"parameter {key!r}: cannot parse {value!r} as {type(default).__name__}") from exc
    return value


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}, line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise UsageError(f"{source}, line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _parse_overrides(extra: list[str]) -> dict[str, str]:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            value = extra[i + 1]
            i += 2
        else:
            raise UsageError(f"flag {tok!r} needs a value")
        out[key.replace("-", "_")] = value
    return out


def _arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qnets",
        allow_abbrev=False,
        description="Run quantum-network scenarios and write machine-readable reports.",
        epilog="Any other --key value pair sets a scenario parameter; see --list.",
    )
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--scenario", help="scenario name")
    ap.add_argument("--trials", help="number of independent trials")
    ap.add_argument("--seed", help="master seed (drawn from entropy if omitted)")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--list", action="store_true", help="list scenarios and their defaults")
    return ap


def parse_config(argv: list[str]) -> tuple[ScenarioConfig | None, argparse.Namespace]:
    ap = _arg_parser()
    ns, extra = ap.parse_known_args(argv)
    if ns.list:
        return None, ns
    values: dict[str, str] = {}
    if ns.config:
        try:
            text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc.strerror}") from exc
        values.update(parse_config_text(text, ns.config))
    values.update(_parse_overrides(extra))
    for key in RESERVED:
        flag = getattr(ns, key)
        if flag is not None:
            values[key] = flag
    if "scenario" not in values:
        raise UsageError("no scenario given (use --scenario or a config file)")
    try:
        trials = int(values.pop("trials", 1))
        seed = values.pop("seed", None)
        seed = None if seed is None else int(seed)
    except ValueError as exc:
        raise UsageError(f"trials and seed must be integers: {exc}") from exc
    return ScenarioConfig(values.pop("scenario"), values, trials, seed), ns


# --------------------------------------------------------------------------
# Running and reporting
# --------------------------------------------------------------------------


def _sig12(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    return x


def _aggregate(records: list[dict]) -> dict:
    agg = {}
    keys = sorted({k for r in records for k in r})
    for key in keys:
        vals = [r.get(key) for r in records]
        if not all(isinstance(v, (bool, int, float)) for v in vals):
            continue
        arr = np.array(vals, dtype=float)
        if not np.all(np.isfinite(arr)):
            continue
        half = 1.96 * arr.std(ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
        agg[key] = {"mean": _sig12(arr.mean()), "half_width": _sig12(half)}
    return agg


def run_scenario(config: ScenarioConfig) -> dict:
    """Run every trial and assemble the report; trial ``i`` uses stream ``(seed, i)``."""
    scenario = SCENARIOS[config.scenario]
    params = dict(config.params, _trials=config.trials)
    records, total = [], ResourceLedger()
    for i in range(config.trials):
        rng = qsim.make_rng(config.seed, i)
        try:
            rec, ledger = scenario.run(params, rng, i)
        except UsageError:
            raise
        except QnetsError as exc:
            raise UsageError(f"{config.scenario}: {exc}") from exc
        rec = {k: _sig12(v) for k, v in rec.items()}
        if ledger is not None:
            rec["epr_consumed"] = ledger.epr_consumed
            rec["classical_bits_sent"] = ledger.classical_bits_sent
            rec["exposure"] = ";".join(ledger.exposure)
            total.epr_consumed += ledger.epr_consumed
            total.classical_bits_sent += ledger.classical_bits_sent
            total.teleports += ledger.teleports
            total.exposure.extend(ledger.exposure)
        records.append({"trial": i, **rec})
    return {
        "scenario": config.scenario,
        "seed": config.seed,
        "seed_source": config.seed_source,
        "config": {"params": {k: _sig12(v) for k, v in config.params.items()}, "trials": config.trials},
        "trials": records,
        "aggregates": _aggregate([{k: v for k, v in r.items() if k != "trial"} for r in records]),
        "ledger": total.as_dict(),
        "aborted_trials": sum(1 for r in records if r.get("aborted")),
    }


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise UsageError(f"unknown format {fmt!r}")
    rows = report["trials"]
    cols = ["trial"] + sorted({k for r in rows for k in r} - {"trial"})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_csv_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def emit_report(report: dict, fmt: str, path) -> Path:
    """Write atomically: a temporary file in the target directory, then rename."""
    path = Path(path)
    text = render_report(report, fmt)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return path


def _list_scenarios() -> str:
    lines = []
    for name, sc in SCENARIOS.items():
        params = ", ".join(f"{k}={v}" for k, v in sc.defaults.items()) or "(no parameters)"
        lines.append(f"{name:15s} {sc.help}\n{'':15s} {params}")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config, ns = parse_config(argv)
        if config is None:
            sys.stdout.write(_list_scenarios())
            return 0
        report = run_scenario(config)
    except UsageError as exc:
        print(f"qnets: error: {exc}", file=sys.stderr)
        return 2
    if ns.out:
        try:
            emit_report(report, ns.format, ns.out)
        except OSError as exc:
            print(f"qnets: error: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(render_report(report, ns.format))
    return 1 if report["aborted_trials"] else 0


__all__ = [
    "SCENARIOS",
    "ScenarioConfig",
    "emit_report",
    "main",
    "parse_config",
    "parse_config_text",
    "render_report",
    "run_scenario",
]
