"""Exception hierarchy shared across the pipeline stages."""


class SqlRefineError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SqlRefineError):
    pass


class DataError(SqlRefineError):
    """Bad input data or environment (CLI exit code 2)."""


class MalformedDataset(DataError):
    pass


class MissingDatabase(DataError):
    def __init__(self, db_id, path=None):
        self.db_id = db_id
        self.path = path
        msg = f"no database found for db_id {db_id!r}"
        if path is not None:
            msg += f" (expected {path})"
        super().__init__(msg)


class UnreadableDatabase(DataError):
    pass


class CorruptCatalog(DataError):
    pass


class MalformedTablesJson(DataError):
    pass


class InvalidSchema(SqlRefineError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid schema: " + "; ".join(self.violations))


class EmptyFeedback(SqlRefineError):
    pass


class GenerationError(SqlRefineError):
    pass


class NetworkFailure(GenerationError):
    pass


class RateLimited(GenerationError):
    pass


class MissingFixture(GenerationError):
    def __init__(self, digest):
        self.digest = digest
        super().__init__(f"no replay fixture for prompt digest {digest}")


class ScriptExhausted(GenerationError):
    pass


class FixtureWriteFailure(GenerationError):
    pass


class NoSqlFound(SqlRefineError):
    pass


class ParseFailure(SqlRefineError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class AmbiguousColumn(ParseFailure):
    def __init__(self, column, tables, position=None):
        self.column = column
        self.tables = sorted(tables)
        super().__init__(
            f"column {column!r} is ambiguous between tables {', '.join(self.tables)}",
            position,
        )
