"""Exception types shared across the package."""


class HoloError(Exception):
    """Base class for all holofield errors."""


class ConfigError(HoloError):
    """Invalid or inconsistent configuration."""


class DataError(HoloError):
    """Missing, malformed, or mismatched input data."""


class ZeroBackgroundError(DataError):
    """Ensemble-mean background contains a zero pixel."""
