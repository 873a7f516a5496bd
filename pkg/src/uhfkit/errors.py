"""Exception hierarchy shared by all uhfkit modules."""


class UhfError(ValueError):
    """Base class for every error raised by uhfkit."""


class InvalidInput(UhfError):
    pass


class StageMismatch(UhfError):
    pass


class StageCapExceeded(UhfError):
    pass


class NotUnitary(UhfError):
    pass


class RelationViolation(UhfError):
    """A defining relation does not evaluate to the identity."""

    def __init__(self, relation, detail=""):
        self.relation = relation
        msg = f"relation {relation!r} violated"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InconsistentCocycle(UhfError):
    pass


class CertificateFailure(UhfError):
    """A requested certificate could not be produced within the horizon."""

    def __init__(self, message, missing=()):
        self.missing = tuple(missing)
        super().__init__(message)


class InconsistencyError(UhfError):
    """An exact computation produced a value that no valid input can produce."""
