"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (GOP, ladder, link, scenario)."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class TraceFormatError(ValueError):
    """A trace file line could not be parsed or violates a record invariant."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{':'.join(where)}: {message}"
        super().__init__(message)


class InputError(ValueError):
    """Inconsistent inputs handed to a processing step."""
