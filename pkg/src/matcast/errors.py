"""Exception hierarchy shared across the engine.

The service layer maps these onto HTTP status codes and the CLI maps them
onto exit codes, so new error conditions should reuse one of the existing
classes where possible.
"""


class MatcastError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(MatcastError):
    """Caller-supplied data violates a precondition (bad extent, channels, range)."""


class EmptyMaskError(InvalidInputError):
    """A transfer was requested with a mask that selects no pixels."""


class ContractError(MatcastError):
    """Two components were combined in a way their contracts forbid."""


class BackendError(MatcastError):
    """A model backend failed or cannot satisfy the request."""

    def __init__(self, message: str, backend_id: str | None = None, stage: str | None = None):
        super().__init__(message)
        self.backend_id = backend_id
        self.stage = stage


class BackendUnavailableError(BackendError):
    """The requested backend is not registered or cannot be loaded."""


class InferenceError(BackendError):
    """A registered backend raised during inference."""


class PlanError(MatcastError):
    """An edit plan references assets or steps that cannot be executed."""


class InvalidReorderError(PlanError):
    """A reorder would move a step that is already done."""


class ManifestError(MatcastError):
    """A dataset manifest is malformed or references missing assets."""


class StorageError(MatcastError):
    """The content-addressed store could not read or write an asset."""
