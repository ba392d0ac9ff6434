"""Constrained-entropy optimizers, phase scans, and finite-size
cross-validation for graph limits (graphons) and permutation limits
(permutons)."""

__version__ = "0.1.0"

from .graphon import (
    ConstraintVector,
    FiniteGraph,
    PatternTooLargeError,
    StepGraphon,
    SubgraphPattern,
    blowup,
    canonicalize,
    empirical_graphon,
    finite_density,
    graphon_entropy,
    kstar_density,
    subgraph_density,
)
from .metrics import DbarResult, connected_patterns, cut_distance_upper, dbar_distance
from .optimizer import (
    OptimizerOptions,
    OptimizerResult,
    SignedMaxResult,
    bounded_signed_max,
    constrained_entropy,
    maximize_entropy,
    reference_construction,
    staircase_graphon,
)
from .permuton import (
    GridPermuton,
    PermCountReport,
    Permutation,
    PermutonOptimizerOptions,
    PermutonOptimizerResult,
    StarPattern,
    count_constrained_perms,
    maximize_permuton_entropy,
    perm_pattern_density,
    perm_to_permuton,
    permuton_entropy,
    permuton_pattern_density,
    project_uniform_marginals,
)
from .sampler import (
    BlockEstimate,
    ChainConfig,
    EnumerationReport,
    SampleRun,
    SamplerInitError,
    enumerate_Z,
    estimate_block_structure,
    sample_constrained,
)
from .scan import PhaseMap, ScanCell, phase_scan

__all__ = [
    "ConstraintVector",
    "FiniteGraph",
    "PatternTooLargeError",
    "StepGraphon",
    "SubgraphPattern",
    "blowup",
    "canonicalize",
    "empirical_graphon",
    "finite_density",
    "graphon_entropy",
    "kstar_density",
    "subgraph_density",
    "DbarResult",
    "connected_patterns",
    "cut_distance_upper",
    "dbar_distance",
    "OptimizerOptions",
    "OptimizerResult",
    "SignedMaxResult",
    "bounded_signed_max",
    "constrained_entropy",
    "maximize_entropy",
    "reference_construction",
    "staircase_graphon",
    "GridPermuton",
    "PermCountReport",
    "Permutation",
    "PermutonOptimizerOptions",
    "PermutonOptimizerResult",
    "StarPattern",
    "count_constrained_perms",
    "maximize_permuton_entropy",
    "perm_pattern_density",
    "perm_to_permuton",
    "permuton_entropy",
    "permuton_pattern_density",
    "project_uniform_marginals",
    "BlockEstimate",
    "ChainConfig",
    "EnumerationReport",
    "SampleRun",
    "SamplerInitError",
    "enumerate_Z",
    "estimate_block_structure",
    "sample_constrained",
    "PhaseMap",
    "ScanCell",
    "phase_scan",
]
