"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value or operation parameter is out of contract."""
