"""Exception hierarchy shared by the library and the CLI."""


class ConvexTokError(Exception):
    """Base class; the CLI maps these to exit code 1."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class FormatError(ConvexTokError):
    code = "format-error"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PatternCompileError(ConvexTokError):
    code = "pattern-compile-error"


class InvalidUtf8Error(ConvexTokError):
    code = "invalid-utf8-error"


class DimensionMismatchError(ConvexTokError):
    code = "dimension-mismatch"


class TooLargeError(ConvexTokError):
    code = "too-large-error"


class DuplicateSpecialTokenError(ConvexTokError):
    code = "duplicate-special-token"


class UnknownTokenError(ConvexTokError):
    code = "unknown-token"


class InvalidIdError(ConvexTokError):
    code = "invalid-id"


class SchemaVersionError(ConvexTokError):
    code = "schema-version-error"


class ChecksumError(ConvexTokError):
    code = "checksum-error"


class InvalidDistributionError(ConvexTokError):
    code = "invalid-distribution"


class ConfigMismatchError(ConvexTokError):
    code = "config-mismatch"
