"""Error taxonomy shared by every module in the package."""


class EodsError(Exception):
    """Base class for all package errors."""


class DomainError(EodsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateInput(EodsError, ValueError):
    """Data that is structurally valid but carries no usable information,
    e.g. a predictor with zero sample variance."""


class InsufficientData(EodsError, ValueError):
    """Too few observations for the requested inference."""


class Infeasible(EodsError, ValueError):
    """A search target cannot be met anywhere in the allowed range."""


class FileError(EodsError, OSError):
    """An input or output file cannot be read or written."""


class SchemaError(EodsError, ValueError):
    """A table violates the expected layout (missing column, bad cell)."""


class ConfigError(EodsError, ValueError):
    """A declarative configuration file is malformed."""
