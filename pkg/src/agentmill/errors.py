"""Exception types shared across the package."""


class AgentmillError(Exception):
    """Base class for all package errors."""


class LexError(AgentmillError):
    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class ParseError(AgentmillError):
    def __init__(self, message, line, col, expected=()):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col
        self.expected = tuple(expected)


class SemanticError(AgentmillError):
    """Raised when a script fails semantic analysis; carries all diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"semantic analysis failed: {lines}")


class LoweringError(AgentmillError):
    pass


class EvalTypeError(AgentmillError):
    """An operator met a structurally incompatible value (distinct from NIL)."""


class InversionUnsupported(AgentmillError):
    pass


class OutOfBounds(AgentmillError):
    pass


class ConfigError(AgentmillError):
    pass


class ChecksumMismatch(AgentmillError):
    pass


class VersionMismatch(AgentmillError):
    pass
