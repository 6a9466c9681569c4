"""Synthetic multi-fidelity dataset generation.

Fit a multi-output GP (coregionalization kernel) to data from a ground
truth function and optional lower-fidelity proxies, then draw synthetic
fidelity columns whose Pearson correlations to each existing fidelity
match requested targets exactly.

Typical flow::

    from synthfid import benchmarks, corrbounds, mogp, sampler

    data = benchmarks.grid(benchmarks.get_pair("liu"), 50)
    model = mogp.fit(data, mogp.FitConfig(kernel="rbf", restarts=2))
    basis = sampler.build_basis(model, seed=0)
    spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), seed=0)
    sample = sampler.draw_from_basis(model, basis, spec)
"""

from . import errors
from .archive import load_model, save_model
from .benchmarks import PAIR_NAMES, BenchmarkPair, evaluate, get_pair, grid
from .corrbounds import BoundsSession, CorrelationSpec, begin, sample_random
from .data import FidelityDataset, read_csv, write_csv
from .kernels import (
    RbfKernel,
    SpectralMixtureKernel,
    TaskMatrix,
    chol_with_jitter,
    eval_core,
    eval_coreg,
)
from .mogp import (
    FitConfig,
    MogpModel,
    PosteriorResult,
    SyntheticTaskPosterior,
    fit,
    log_marginal_likelihood,
    posterior,
    synthetic_task_posterior,
)
from .sampler import (
    CovarianceTargets,
    SampleBasis,
    SyntheticSample,
    build_basis,
    draw,
    draw_from_basis,
    heuristic_variance,
    solve_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "load_model",
    "save_model",
    "PAIR_NAMES",
    "BenchmarkPair",
    "evaluate",
    "get_pair",
    "grid",
    "BoundsSession",
    "CorrelationSpec",
    "begin",
    "sample_random",
    "FidelityDataset",
    "read_csv",
    "write_csv",
    "RbfKernel",
    "SpectralMixtureKernel",
    "TaskMatrix",
    "chol_with_jitter",
    "eval_core",
    "eval_coreg",
    "FitConfig",
    "MogpModel",
    "PosteriorResult",
    "SyntheticTaskPosterior",
    "fit",
    "log_marginal_likelihood",
    "posterior",
    "synthetic_task_posterior",
    "CovarianceTargets",
    "SampleBasis",
    "SyntheticSample",
    "build_basis",
    "draw",
    "draw_from_basis",
    "heuristic_variance",
    "solve_coefficients",
    "__version__",
]
