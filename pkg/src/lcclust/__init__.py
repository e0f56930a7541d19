"""Label-consistent clustering: k-center and k-median under switching budgets."""

from .core import (
    Clustering,
    ConsistentProblem,
    InstanceError,
    MetricInstance,
    SolutionReport,
    cost_kcenter,
    cost_kmedian,
    euclidean_instance,
    load_instance,
    save_instance,
    swcost,
    table_instance,
)
from .embedding import TreeEmbedding, WeightedInstance, embed, reduce_points, tree_distance
from .kcenter import NoFeasibleRadius, solve as solve_kcenter
from .lpround import gap_instance, round_solution, solve_lp
from .oracle import OracleResult, brute_force, brute_tree
from .treedp import exact_tree_dp, rounded_tree_dp, solve_pipeline

__version__ = "0.1.0"
