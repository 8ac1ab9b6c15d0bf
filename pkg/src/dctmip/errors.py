"""Exception types shared across the library and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """A configuration or usage-contract violation (CLI exit code 2)."""


class NumericError(RuntimeError):
    """A numerical failure such as a NaN gradient or non-finite loss (CLI exit code 3)."""


class CheckpointError(ConfigError):
    """A checkpoint file that cannot be read or has an unsupported version."""


class DatasetError(ConfigError):
    """A dataset directory or camera file that violates the expected layout."""
