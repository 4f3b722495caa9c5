"""Error types shared across the simulator."""


class DegenerateGeometryError(ValueError):
    """Scene geometry is degenerate (e.g. coincident endpoints of a path)."""


class SingularChannelError(ValueError):
    """Channel estimate is identically zero; combiner cannot be formed."""


class EqualizationSingularityError(ValueError):
    """Combined channel gain too small to equalize against."""


class ConfigError(ValueError):
    """Invalid or unparseable simulation configuration."""
