"""Langevin sampling on the modern Hopfield energy.

Construct a memory matrix, then sample from the Boltzmann distribution
of its log-sum-exp energy at any inverse temperature: high beta gives
retrieval of stored patterns, low beta gives open-ended generation, and
the entropy-inflection utilities locate the boundary between the two.
"""

__version__ = "0.1.0"

from .memory import (MemoryMatrix, PcaModel, fit_pca, make_random_sphere_memory,
                     memory_from_columns, normalize_columns, pca_project,
                     pca_reconstruct)
from .energy import (AttentionState, EnergyValue, RegularityConstants, attention,
                     energy, energy_gradient, entropy_derivative, lse,
                     regularity_constants, retrieval_map)
from .sampler import (SampleSet, SamplerConfig, Trajectory, mala_step, run_mala,
                      run_multihead, run_ula, run_warm_start_sequential, ula_step)
from .temperature import (EntropyCurve, beta_for_snr, default_probes,
                          entropy_curve, find_beta_star, snr, snr_star)

__all__ = [
    "MemoryMatrix", "PcaModel", "fit_pca", "make_random_sphere_memory",
    "memory_from_columns", "normalize_columns", "pca_project", "pca_reconstruct",
    "AttentionState", "EnergyValue", "RegularityConstants", "attention", "energy",
    "energy_gradient", "entropy_derivative", "lse", "regularity_constants",
    "retrieval_map",
    "SampleSet", "SamplerConfig", "Trajectory", "mala_step", "run_mala",
    "run_multihead", "run_ula", "run_warm_start_sequential", "ula_step",
    "EntropyCurve", "beta_for_snr", "default_probes", "entropy_curve",
    "find_beta_star", "snr", "snr_star",
    "__version__",
]
