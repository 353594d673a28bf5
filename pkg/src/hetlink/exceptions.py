class HetlinkError(Exception):
    """Base class for all errors raised by hetlink.

    Keyword arguments are kept as machine-readable context and included in
    to_dict(), which the command line prints as its error JSON.
    """

    kind = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self):
        out = {"error": self.kind, "message": str(self)}
        if self.context:
            out["context"] = self.context
        return out


class InputError(HetlinkError, ValueError):
    kind = "input_error"


class DomainError(HetlinkError, ValueError):
    kind = "domain_error"


class ResourceError(HetlinkError, RuntimeError):
    kind = "resource_error"


class NumericError(HetlinkError, ArithmeticError):
    kind = "numeric_error"


class NotFittedError(HetlinkError, AttributeError):
    kind = "not_fitted"
