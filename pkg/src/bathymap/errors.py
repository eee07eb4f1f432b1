"""Exception hierarchy shared across the toolkit.

Each category maps to a process exit code so the command line tool can
report failures consistently (see cli.py).
"""


class BathymapError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(BathymapError):
    """Invalid or incomplete pipeline configuration."""

    exit_code = 2


class FormatError(BathymapError):
    """Malformed or unsupported file content (headers, payloads, schemas)."""

    exit_code = 3


class DataError(BathymapError):
    """Inputs that are structurally valid but unusable: empty sets,
    geometry mismatches, missing lakes, out-of-range values."""

    exit_code = 4


class GeometryMismatchError(DataError):
    """Two rasters that must share a grid do not."""


class NumericError(BathymapError):
    """Numerically undefined results: singular fits, undefined features,
    non-finite model inputs."""

    exit_code = 5


class SingularFitError(NumericError):
    """Regression design matrix has no usable variance."""


class UndefinedFeatureError(NumericError):
    """A spectral feature is undefined for the given reflectances."""
