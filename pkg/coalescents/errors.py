"""
Exception hierarchy shared by the coalescent, measure and flow modules
"""


class CoalescentError(Exception):
    """Base class for every error raised by the coalescents package"""


class InvalidInputError(CoalescentError, ValueError):
    """Input rejected before any computation started"""


class ConfigurationError(CoalescentError):
    """Inputs parsed but describe an unusable model (e.g. non-finite jump rate)"""


class NumericalCapExceeded(CoalescentError, RuntimeError):
    """A numerical routine hit its hard cap instead of reaching its tolerance"""
