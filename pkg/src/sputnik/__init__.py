"""Sputnik: adaptive mutation-operator selection for multi-objective
evolutionary algorithms, with a hybrid-cloud placement case study."""
from .core import (EpsilonState, EvolutionConfig, Individual, OperatorHandle, Population,
                   crowding_distance, dominates, epsilon_archive_insert, epsilon_moea_generation,
                   fast_nondominated_sort, nsga2_generation)
from .errors import ConfigError, EvaluationError, UsageError
from .indicators import (ObjectiveBounds, generations_to_threshold, hypervolume_2d,
                         normalize_front)
from .kernels import BACKEND
from .selector import STRATEGIES, SputnikSelector, UniformSelector, score_of

__version__ = "0.1.0"
