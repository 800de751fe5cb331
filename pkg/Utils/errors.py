class FrechetFlowError(Exception):
    """Base class for every error raised by the library."""


class GridError(FrechetFlowError):
    pass


class DimensionMismatchError(FrechetFlowError):
    pass


class SymbolSyntaxError(FrechetFlowError):
    def __init__(self, msg: str, offset: int = 0):
        super().__init__(f"{msg} (at byte {offset})")
        self.offset = offset


class UnknownIdentifierError(SymbolSyntaxError):
    pass


class NonPolynomialError(FrechetFlowError):
    def __init__(self, msg: str, offset: int | None = None):
        if offset is not None:
            msg = f"{msg} (at byte {offset})"
        super().__init__(msg)
        self.offset = offset


class SeriesCapError(FrechetFlowError):
    def __init__(self, msg: str, required_terms: int):
        super().__init__(f"{msg} (requires {required_terms} terms)")
        self.required_terms = required_terms


class PreconditionError(FrechetFlowError):
    pass


class UncertifiedFunctionError(FrechetFlowError):
    pass


class FieldError(FrechetFlowError):
    """A field holds non-finite samples."""


class FieldFormatError(FieldError):
    pass


class ConfigError(FrechetFlowError):
    def __init__(self, msg: str, line: int | None = None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class RunawayRunError(FrechetFlowError):
    pass
