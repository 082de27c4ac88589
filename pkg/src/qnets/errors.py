"""Exception hierarchy shared by every qnets module."""


class QnetsError(Exception):
    """Base class for all library errors."""


class DomainError(QnetsError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnknownNameError(QnetsError, LookupError):
    """A gate, state, or scenario name is not registered."""


class PreconditionError(DomainError):
    """An input state does not satisfy a protocol's entry condition."""


class AmbiguityError(DomainError):
    """A measurement cannot be decoded to a unique message."""


class ResourceExhausted(QnetsError, RuntimeError):
    """A pre-provisioned entanglement pool ran dry.

    ``holder`` and ``state`` record where the payload qubit was when the
    failure happened, so callers can resume or inspect it.
    """

    def __init__(self, message, holder=None, state=None):
        super().__init__(message)
        self.holder = holder
        self.state = state


class StateError(QnetsError, RuntimeError):
    """An object was used in a lifecycle state that forbids the call."""


class NoCloningError(StateError):
    """Attempt to duplicate a stored quantum state."""


class UsageError(QnetsError, ValueError):
    """Invalid scenario configuration or command-line usage."""
