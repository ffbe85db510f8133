class UsageError(ValueError):
    """An API was called with arguments that violate its preconditions."""


class ConfigError(ValueError):
    """A run or instance configuration is invalid."""


class EvaluationError(RuntimeError):
    """Objective evaluation failed for one or more genomes."""
