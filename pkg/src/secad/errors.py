"""Exception types shared across the toolkit.

Every error carries a short machine-readable ``code`` so the CLI and the
HTTP service can surface failures uniformly.
"""


class SecadError(Exception):
    code = "Error"

    def to_json(self):
        return {"error": self.code, "message": str(self)}


class ParseError(SecadError):
    """Sequence parser failure; points at the first offending token."""

    def __init__(self, message, token_index=0):
        super().__init__(message)
        self.token_index = token_index

    def to_json(self):
        out = super().to_json()
        out["token_index"] = self.token_index
        return out


class UnknownKeyword(ParseError):
    code = "UnknownKeyword"


class OutOfRangeNumber(ParseError):
    code = "OutOfRangeNumber"


class TruncatedSequence(ParseError):
    code = "TruncatedSequence"


class EmptyLoop(ParseError):
    code = "EmptyLoop"


class BadEnumLiteral(ParseError):
    code = "BadEnumLiteral"


class GeometryError(SecadError):
    pass


class DegenerateLoop(GeometryError):
    code = "DegenerateLoop"


class SelfIntersecting(GeometryError):
    code = "SelfIntersecting"


class DegenerateExtrusion(GeometryError):
    code = "DegenerateExtrusion"


class EmptySolid(GeometryError):
    code = "EmptySolid"


class ZeroAreaViewport(GeometryError):
    code = "ZeroAreaViewport"


class FillArityMismatch(SecadError):
    code = "FillArityMismatch"


class InconsistentMask(SecadError):
    code = "InconsistentMask"


class NoApplicableEdit(SecadError):
    code = "NoApplicableEdit"


class NotEnoughVariants(SecadError):
    code = "NotEnoughVariants"


class BackendUnavailable(SecadError):
    code = "BackendUnavailable"


class EmptyCompletion(SecadError):
    code = "EmptyCompletion"


class LocatingFailed(SecadError):
    code = "LocatingFailed"


class InvalidInput(SecadError):
    code = "InvalidInput"


class InvalidModel(SecadError):
    code = "InvalidModel"

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause

    def to_json(self):
        out = super().to_json()
        if isinstance(self.cause, SecadError):
            out["cause"] = self.cause.to_json()
        return out


class InvalidCandidate(SecadError):
    code = "InvalidCandidate"


class UnknownSession(SecadError):
    code = "UnknownSession"


class DuplicateTriplet(SecadError):
    code = "DuplicateTriplet"


class ArityMismatch(SecadError):
    code = "ArityMismatch"


class EmptyInput(SecadError):
    code = "EmptyInput"


class ZeroDelta(SecadError):
    code = "ZeroDelta"
