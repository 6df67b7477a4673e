"""Exception types shared across the simulator modules."""


class NvmRlSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(NvmRlSimError):
    """Bad network/hardware description or inconsistent shape chain."""


class CapacityError(NvmRlSimError):
    """A placement does not fit the available memory budget."""


class UnmappableError(NvmRlSimError):
    """A layer cannot be mapped onto the PE array."""


class PolicyViolationError(NvmRlSimError):
    """An operation was requested that the training policy forbids."""


class DataIntegrityError(NvmRlSimError):
    """A reference data file failed its internal consistency checks."""


class ParameterError(NvmRlSimError):
    """Missing or invalid cost-model parameters."""


class DomainError(NvmRlSimError):
    """An argument is outside the mathematical domain of an operation."""


class DivergenceError(NvmRlSimError):
    """Training produced a non-finite loss."""


class MetricError(NvmRlSimError):
    """A metric is undefined for the given inputs (e.g. zero episodes)."""
