"""Exception types shared across the package."""


class MedmatchError(Exception):
    """Base class for all medmatch errors."""


class CorpusFormatError(MedmatchError):
    """A corpus file could not be parsed; carries the offending line number."""

    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class DanglingReferenceError(MedmatchError):
    """Mapping pairs reference masterlist ids that do not exist."""

    def __init__(self, missing_ids: list[str]):
        self.missing_ids = sorted(set(missing_ids))
        super().__init__(
            "pairs reference unknown masterlist ids: " + ", ".join(self.missing_ids)
        )


class UnembeddableError(MedmatchError):
    """Text produced no features, so no meaningful vector exists for it."""


class DimensionMismatchError(MedmatchError):
    """Vector dimension does not match what the store or adapter expects."""
