"""Exception types shared across the package."""


class SlotbenchError(Exception):
    """Base class for all slotbench errors."""


class ConfigurationError(SlotbenchError, ValueError):
    """A config value is out of range or inconsistent."""


class ShapeError(SlotbenchError, ValueError):
    """An array/tensor has an incompatible shape."""


class FormatError(SlotbenchError, ValueError):
    """An on-disk artifact does not conform to the container layout."""


class StorageError(SlotbenchError, OSError):
    """Reading or writing a dataset artifact failed."""


class OptimizationError(SlotbenchError, RuntimeError):
    """An optimization loop produced a non-finite loss."""


class NumericalError(SlotbenchError, RuntimeError):
    """A forward pass or loss term became non-finite."""


class InputError(SlotbenchError, ValueError):
    """An operation received invalid inputs."""


class UndefinedResultError(SlotbenchError, ValueError):
    """The requested statistic is undefined for the given data."""
