"""Exception hierarchy for the eta-hardy toolkit.

Every operation raises one of these; the CLI maps them to exit code 2 and the
HTTP service maps them to 4xx responses.
"""

from typing import Optional, Sequence


class EtaHardyError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 2
    status_code: int = 400
    kind: str = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message}


class InvalidArgument(EtaHardyError):
    kind = "invalid-argument"


class NotFiniteOrTooLarge(EtaHardyError):
    """Closure did not terminate below the configured element cap."""

    kind = "not-finite-or-too-large"
    status_code = 422


class DegenerateBasepoint(EtaHardyError):
    kind = "degenerate-basepoint"


class NotAHomomorphism(EtaHardyError):
    """Wall signs are incompatible with the group relations."""

    kind = "not-a-homomorphism"
    status_code = 422

    def __init__(self, message: str, words: Optional[Sequence[Sequence[int]]] = None):
        super().__init__(message)
        self.words = [list(w) for w in words] if words else []

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["words"] = self.words
        return data


class UnsupportedGeometry(EtaHardyError):
    kind = "unsupported-geometry"
    status_code = 422


class InvalidSupport(EtaHardyError):
    kind = "invalid-support"


class InvalidInput(EtaHardyError):
    kind = "invalid-input"

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message if index is None else f"{message} (index {index})")
        self.index = index

    def to_dict(self) -> dict:
        data = super().to_dict()
        if self.index is not None:
            data["index"] = self.index
        return data


class InvalidGeometry(EtaHardyError):
    kind = "invalid-geometry"


class EmptyCube(EtaHardyError):
    kind = "empty-cube"


class ConfigError(EtaHardyError):
    kind = "config-error"
    status_code = 422
