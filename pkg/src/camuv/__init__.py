"""Causal discovery for nonlinear additive models with unobserved variables,
prior knowledge of forbidden causes, and lag-embedded time series."""

from .discovery import DiscoveryConfig, discover
from .graph import CausalGraph, DataError, Dataset, GroundTruth, PriorKnowledge
from .kernel_stats import hsic_pvalue_gamma, hsic_pvalue_permutation, p_hsic_set
from .simulate import ScmConfig, TsScmConfig, gen_camuv_instance, gen_ts_instance
from .timeseries import LagGraph, discover_ts, embed

__version__ = "0.1.0"

__all__ = [
    "CausalGraph", "DataError", "Dataset", "DiscoveryConfig", "GroundTruth", "LagGraph", "PriorKnowledge",
    "ScmConfig", "TsScmConfig", "discover", "discover_ts", "embed", "gen_camuv_instance", "gen_ts_instance",
    "hsic_pvalue_gamma", "hsic_pvalue_permutation", "p_hsic_set",
]
