"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`FLDAError`
and carries a short ``category`` that the CLI prints and maps to an exit code.
"""


class FLDAError(Exception):
    category = "error"
    exit_code = 1


class ParseError(FLDAError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    category = "parse"
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ConfigError(FLDAError, ValueError):
    category = "config"
    exit_code = 2


class DataError(FLDAError, ValueError):
    """Inconsistent or degenerate data (empty sets, dimension mismatches)."""

    category = "data"
    exit_code = 4


class ModelError(FLDAError, ArithmeticError):
    """Numerical failure: singular systems, impossible observations, divergence."""

    category = "model"
    exit_code = 5


class OutputError(FLDAError, OSError):
    category = "io"
    exit_code = 6
