class GruAeError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class MissingFile(GruAeError):
    pass


class SchemaError(GruAeError):
    pass


class EmptySequence(GruAeError):
    pass


class ShapeMismatch(GruAeError):
    pass


class ConfigMismatch(GruAeError):
    pass


class EmptyGroup(GruAeError):
    pass
