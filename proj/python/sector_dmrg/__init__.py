"""Sector-sparse DMRG: models, sweeps, kernels and scaling fits."""

from ._core import (
    BenchError,
    CheckpointError,
    DimensionError,
    DmrgEngine,
    DmrgError,
    IntegralsError,
    Model,
    ModelError,
    PowerLawFit,
    SweepRecord,
    dense_ground_energy,
    fit_power_law,
    heisenberg_chain,
    hilbert_dimension,
    hubbard_chain,
    integral_model,
    run_checks,
    sbmm4s_accumulate,
    solve,
)

__all__ = [
    "BenchError",
    "CheckpointError",
    "DimensionError",
    "DmrgEngine",
    "DmrgError",
    "IntegralsError",
    "Model",
    "ModelError",
    "PowerLawFit",
    "SweepRecord",
    "dense_ground_energy",
    "fit_power_law",
    "heisenberg_chain",
    "hilbert_dimension",
    "hubbard_chain",
    "integral_model",
    "run_checks",
    "sbmm4s_accumulate",
    "solve",
]
