"""Exception types shared across the package.

Both subclass ``ValueError`` so callers that only care about bad input can
catch one thing; the CLI maps them onto distinct exit codes.
"""


class DomainError(ValueError):
    """A numeric argument is outside the domain an operation is defined on."""


class ParseError(ValueError):
    """An input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
