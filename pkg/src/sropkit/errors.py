"""Exception hierarchy shared across the toolkit."""


class SropkitError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(SropkitError):
    """An argument is outside its documented domain."""


class TooSmallError(ParameterError):
    """Spatial size below the minimum the radial mapping supports (n >= 3)."""


class ZeroEnergyError(SropkitError):
    """A spectrum has no energy in the requested band; roll-off is undefined."""


class DegenerateSampleError(SropkitError):
    """A statistic needs more sample variety than the input provides."""


class FormatError(SropkitError):
    """A binary or JSON container violates its format contract."""


class BadMagicError(FormatError):
    """Leading magic bytes do not identify the expected container."""


class UnsupportedDtypeError(FormatError):
    """Container declares an element type this toolkit does not handle."""


class ShapeMismatchError(FormatError):
    """Declared shape disagrees with the payload byte count."""


class ManifestError(FormatError):
    """Run manifest fails schema or cross-file validation."""


class ArchitectureError(SropkitError):
    """Architecture config fails validation (ops, shapes, references)."""
