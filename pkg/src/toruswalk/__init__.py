"""Random-walk hitting times and coalescing walkers on the 2D discrete torus.

Exact computations (FFT spectral transforms, dense Markov oracles),
asymptotic targets, proven-inequality audits, and reproducible Monte
Carlo, plus a batch CLI (`toruswalk`).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .kernels import (
    JumpKernel,
    KernelDensity,
    QuadratureError,
    density_kernel,
    meanfield_kernel,
    mixture_kernel,
    sample_jump,
    sample_jumps,
    uniform_kernel,
)
from .limits import (
    AuditError,
    Beta0Result,
    QuadratureSpec,
    RegimeParams,
    alpha_prime,
    beta,
    beta0,
    death_process_dist,
    exponential_sum_audit,
    lemma21_audit,
    t_scale,
    target_laplace,
    target_mean,
)
from .mc import (
    CoalescenceTrace,
    HitBatch,
    HitSample,
    LineageCountLaw,
    MergeEvent,
    SeedSpec,
    StepCapExceeded,
    estimate_laplace,
    lineage_count_at,
    lineage_count_law,
    simulate_coalescent,
    simulate_hit,
    simulate_hits,
)
from .oracle import DenseChain, dense_chain, dense_green, dense_heat, dense_laplace_hit
from .spectral import (
    GreenField,
    HeatGrid,
    LaplaceField,
    SpectralGrid,
    build_grid,
    char_fn,
    condition_report,
    green,
    heat,
    laplace_hit,
    orthogonality_gap,
    uniformity_gap,
)
from .torus import (
    Annulus,
    Box,
    Disc,
    TorusSpec,
    TorusSquare,
    contains,
    enumerate_region,
    frequencies,
    from_fft_layout,
    index_of,
    point_grid,
    point_of,
    to_fft_layout,
    wrap,
)

__all__ = [
    "__version__",
    "Annulus",
    "AuditError",
    "Beta0Result",
    "Box",
    "CoalescenceTrace",
    "DenseChain",
    "Disc",
    "GreenField",
    "HeatGrid",
    "HitBatch",
    "HitSample",
    "JumpKernel",
    "KernelDensity",
    "LaplaceField",
    "LineageCountLaw",
    "MergeEvent",
    "QuadratureError",
    "QuadratureSpec",
    "RegimeParams",
    "SeedSpec",
    "SpectralGrid",
    "StepCapExceeded",
    "TorusSpec",
    "TorusSquare",
    "alpha_prime",
    "beta",
    "beta0",
    "build_grid",
    "char_fn",
    "condition_report",
    "contains",
    "death_process_dist",
    "dense_chain",
    "dense_green",
    "dense_heat",
    "dense_laplace_hit",
    "density_kernel",
    "enumerate_region",
    "estimate_laplace",
    "exponential_sum_audit",
    "frequencies",
    "from_fft_layout",
    "green",
    "heat",
    "index_of",
    "laplace_hit",
    "lemma21_audit",
    "lineage_count_at",
    "lineage_count_law",
    "meanfield_kernel",
    "mixture_kernel",
    "orthogonality_gap",
    "point_grid",
    "point_of",
    "sample_jump",
    "sample_jumps",
    "simulate_coalescent",
    "simulate_hit",
    "simulate_hits",
    "t_scale",
    "target_laplace",
    "target_mean",
    "to_fft_layout",
    "uniform_kernel",
    "uniformity_gap",
    "wrap",
]
