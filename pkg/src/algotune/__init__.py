"""Learning parameters of algorithm families from samples or streams of instances."""

from .errors import AlgotuneError, DomainError, InternalError, ParseError, ResourceError, UnsupportedKindError
from .instances import (
    ClusteringInstance,
    GraphInstance,
    IqpInstance,
    KnapsackInstance,
    RandomTape,
    gen_clustering_smooth,
    gen_knapsack_smooth,
    gen_maxcut,
    maxcut_to_iqp,
    read_instances,
    write_instances,
)
from .piecewise import PiecewiseConstant, argmax, discontinuities, evaluate, exp_mass, exp_sample, merge_sum

__version__ = "0.1.0"
