"""Quantum communication and computation at desk scale.

Submodules
----------
qsim        state-vector simulator (qubits and qutrits)
protocols   interferometry, superdense coding, teleportation
qkd         BB84 / B92 key distribution with reconciliation and privacy amplification
byzantine   detectable broadcast with qutrit triplets
fingerprint quantum fingerprinting and the SWAP test
games       quantized Prisoner's Dilemma and quantum contracts
algorithms  Shor order finding and Grover search
netsim      hierarchical quantum internet simulator
cli         batch scenario runner
"""

from . import algorithms, byzantine, fingerprint, games, netsim, protocols, qkd, qsim
from .errors import (
    AmbiguityError,
    DomainError,
    NoCloningError,
    PreconditionError,
    QnetsError,
    ResourceExhausted,
    StateError,
    UnknownNameError,
    UsageError,
)
from .resources import ResourceLedger

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError",
    "DomainError",
    "NoCloningError",
    "PreconditionError",
    "QnetsError",
    "ResourceExhausted",
    "ResourceLedger",
    "StateError",
    "UnknownNameError",
    "UsageError",
    "algorithms",
    "byzantine",
    "fingerprint",
    "games",
    "netsim",
    "protocols",
    "qkd",
    "qsim",
]
