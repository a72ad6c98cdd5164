"""(alpha, beta)-Lloyds++ clustering with exact breakpoint-based alpha tuning."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .breakpoints import (AlphaInterval, BreakpointSet, ExecutionTree, enumerate_execution_tree,
                          count_intervals_vs_n, breakpoint_histogram)
from .core import (Clustering, ClusteringInstance, InstanceError, hamming_distance, lp_cost,
                   optimal_matching)
from .datagen import DistributionConfig, LabeledDataset, draw_sample, load_labeled_csv, seed_vector
from .lloyds import LloydsConfig, lloyds_iterate, clus_cost
from .seeding import SeedVector, seed, DAlphaFamily
from .tuner import (TunerConfig, CostSurface, empirical_cost, sweep_surface, tune_alpha,
                    discretized_baseline, train_test_report)

__all__ = [
    "BACKEND", "AlphaInterval", "BreakpointSet", "ExecutionTree", "enumerate_execution_tree",
    "count_intervals_vs_n", "breakpoint_histogram", "Clustering", "ClusteringInstance",
    "InstanceError", "hamming_distance", "lp_cost", "optimal_matching", "DistributionConfig",
    "LabeledDataset", "draw_sample", "load_labeled_csv", "seed_vector", "LloydsConfig",
    "lloyds_iterate", "clus_cost", "SeedVector", "seed", "DAlphaFamily", "TunerConfig",
    "CostSurface", "empirical_cost", "sweep_surface", "tune_alpha", "discretized_baseline",
    "train_test_report",
]
