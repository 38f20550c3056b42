"""Exception hierarchy shared across the pipeline.

Exit-code mapping for the CLI: usage errors exit 1, DataError exits 2,
NumericError exits 3.
"""


class DDPError(Exception):
    """Base class for all pipeline errors."""


class DataError(DDPError):
    """Invalid or unusable input data (bad manifest, undecodable media,
    degenerate training set, ...)."""


class ConfigError(DDPError):
    """Invalid experiment configuration; treated as a usage error by the CLI."""


class ContractError(DDPError):
    """An internal calling contract was violated; indicates a bug in the
    caller, not bad data."""


class NumericError(DDPError):
    """A numeric computation produced non-finite values."""


class ComponentError(DDPError):
    """A pluggable component (decoder, face detector) failed. Carries the
    unit it failed on."""

    def __init__(self, message: str, *, unit_id: str | None = None):
        super().__init__(message if unit_id is None else f"{message} [unit={unit_id}]")
        self.unit_id = unit_id
