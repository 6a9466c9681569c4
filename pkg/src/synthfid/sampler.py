"""Synthetic fidelity samples with exactly targeted Pearson correlations.

A synthetic sample is a linear combination ``s = Y' c`` of basis columns:
the existing fidelity columns plus one draw from the task-independent
kernel prior. Requested correlations are turned into covariances using a
heuristic sample variance (an overlap-weighted mean of the basis
variances) and the coefficients come from one symmetric linear solve
against the basis covariance.

Because the sample lives in the span of the basis, its correlation vector
always sits on the boundary of the valid region: requested vectors
produced by :mod:`synthfid.corrbounds` with a saturating final entry are
reproduced exactly (up to conditioning); strictly interior vectors get
uniformly rescaled by ``1/sqrt(pc' inv(C) pc)``. The ``boundary_gap`` of a
spec says which case applies.

All covariances here use the population (1/n) convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BasisMismatchError,
    DegenerateBasisError,
    HeuristicVarianceError,
    IllConditionedBasisError,
    ShapeError,
)
from .kernels import chol_with_jitter, eval_core

__all__ = [
    "SampleBasis",
    "CovarianceTargets",
    "SyntheticSample",
    "build_basis",
    "heuristic_variance",
    "solve_coefficients",
    "draw",
    "draw_from_basis",
]

PRIOR_LABEL = "prior"
CONDITION_LIMIT = 1e12


def _pearson(a, b):
    a0 = a - a.mean()
    b0 = b - b.mean()
    denom = np.sqrt((a0 @ a0) * (b0 @ b0))
    if denom == 0:
        raise DegenerateBasisError("cannot correlate against a constant vector")
    return float((a0 @ b0) / denom)


@dataclass(frozen=True)
class SampleBasis:
    """Fidelity columns plus one prior draw, with their second moments.

    ``expanded`` is the n_x-by-(n_t+1) matrix Y' whose first n_t columns
    are the fidelity data and whose last column is the rescaled prior
    draw; ``centered`` subtracts the per-column means. The basis never
    depends on the task matrix, so it can be built once per seed and
    reused for any correlation target.
    """

    expanded: np.ndarray      # (n_x, n_t + 1)
    means: np.ndarray         # column means of expanded
    centered: np.ndarray      # expanded - means
    covariance: np.ndarray    # centered' centered / n_x
    stds: np.ndarray          # sqrt(diag(covariance))
    correlation: np.ndarray   # unit-diagonal correlation matrix
    noise_draw: np.ndarray    # the white-noise vector r behind the prior column
    seed: int
    prior_draw: str           # "matrix" or "cholesky"
    labels: tuple

    @property
    def n_columns(self):
        return self.expanded.shape[1]


def build_basis(model, seed, prior_draw="matrix"):
    """Assemble the sample basis for a model and a prior-draw seed.

    The prior column is ``K_core @ r`` with ``r ~ N(0, I)`` drawn from
    ``seed`` (``prior_draw="cholesky"`` uses ``chol(K_core) @ r``, an
    exact prior draw), then rescaled so its standard deviation equals the
    mean of the per-fidelity standard deviations.

    Raises
    ------
    DegenerateBasisError
        If any fidelity column or the prior draw is constant.
    """
    if prior_draw not in ("matrix", "cholesky"):
        raise ValueError(f"unknown prior_draw mode: {prior_draw!r}")
    y = model.dataset.y
    fid_stds = y.std(axis=0)
    for k, s in enumerate(fid_stds):
        if s == 0:
            raise DegenerateBasisError(
                f"fidelity {model.dataset.labels[k]!r} is constant; it cannot "
                "anchor a correlation target"
            )
    core = eval_core(model.kernel, model.dataset.x, model.dataset.x)
    rng = np.random.default_rng(seed)
    r = rng.standard_normal(model.dataset.n_points)
    if prior_draw == "matrix":
        prior = core @ r
    else:
        chol, _ = chol_with_jitter(core)
        prior = chol @ r
    prior_std = prior.std()
    if prior_std <= 0 or not np.isfinite(prior_std):
        raise DegenerateBasisError(
            "prior draw is constant (near-singular core kernel); try a "
            "different seed"
        )
    prior = prior * (fid_stds.mean() / prior_std)

    expanded = np.column_stack([y, prior])
    means = expanded.mean(axis=0)
    centered = expanded - means
    covariance = centered.T @ centered / expanded.shape[0]
    stds = np.sqrt(np.diag(covariance))
    correlation = covariance / np.outer(stds, stds)
    np.fill_diagonal(correlation, 1.0)

    for arr in (expanded, means, centered, covariance, stds, correlation, r):
        arr.flags.writeable = False
    return SampleBasis(
        expanded=expanded,
        means=means,
        centered=centered,
        covariance=covariance,
        stds=stds,
        correlation=correlation,
        noise_draw=r,
        seed=int(seed),
        prior_draw=prior_draw,
        labels=model.dataset.labels + (PRIOR_LABEL,),
    )


@dataclass(frozen=True)
class CovarianceTargets:
    """Requested correlations converted to covariance targets.

    ``covariances[i] = sqrt(variance) * std_i * correlations[i]``, where
    ``variance`` is the (positive) heuristic sample variance.
    """

    correlations: np.ndarray
    weights: np.ndarray
    variance: float
    covariances: np.ndarray

    def __post_init__(self):
        if not self.variance > 0:
            raise HeuristicVarianceError(
                "heuristic sample variance must be positive"
            )


def heuristic_variance(basis, pc):
    """Overlap weights and heuristic sample variance for a correlation target.

    Iteratively picks the correlation-matrix row with the largest overlap
    against the (progressively deflated) target vector, accumulating the
    overlap as the weight of the selected basis column; ties break toward
    the lowest index. The variance is the weighted sum of basis column
    variances. It reduces to the matching column's variance when the
    target is a coordinate vector and the basis is orthogonal.

    The returned value is signed: strongly anticorrelated targets can
    produce a non-positive variance, which the draw path maps to its
    magnitude (sample correlations are invariant to this scale).
    """
    pc = np.asarray(pc, dtype=float).reshape(-1)
    m = basis.n_columns
    if pc.size != m:
        raise ShapeError(f"correlation vector must have {m} entries")
    corr = basis.correlation
    weights = np.zeros(m)
    residual = pc.copy()
    v = np.zeros(m)
    for _ in range(m):
        residual = residual - (residual @ v) * v
        overlaps = corr @ residual
        i = int(np.argmax(overlaps))
        weights[i] += overlaps[i]
        v = corr[i]
    variance = float(weights @ np.diag(basis.covariance))
    return weights, variance


def make_targets(basis, pc):
    """Build :class:`CovarianceTargets` from a requested correlation vector."""
    pc = np.asarray(pc, dtype=float).reshape(-1)
    weights, variance = heuristic_variance(basis, pc)
    magnitude = abs(variance)
    if magnitude == 0:
        raise HeuristicVarianceError(
            "correlation targets have zero overlap with the basis; "
            "the heuristic sample variance is 0"
        )
    covariances = np.sqrt(magnitude) * basis.stds * pc
    return CovarianceTargets(
        correlations=pc,
        weights=weights,
        variance=magnitude,
        covariances=covariances,
    )


def solve_coefficients(basis, targets):
    """Solve ``covariance @ c = target_covariances`` for the coefficients.

    Uses a symmetric (Cholesky) factorization solve, never an explicit
    inverse.

    Raises
    ------
    IllConditionedBasisError
        When the basis covariance condition number exceeds 1e12 (no
        regularization is applied: ridging would bias the achieved
        correlations).
    """
    cov = basis.covariance
    condition = float(np.linalg.cond(cov))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise IllConditionedBasisError(condition, CONDITION_LIMIT)
    try:
        factor = scipy.linalg.cho_factor(cov, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise IllConditionedBasisError(condition, CONDITION_LIMIT) from exc
    return scipy.linalg.cho_solve(factor, targets.covariances, check_finite=False)


@dataclass(frozen=True)
class SyntheticSample:
    """A generated fidelity column with its provenance."""

    values: np.ndarray              # (n_x,)
    coefficients: np.ndarray        # (n_t + 1,)
    requested: np.ndarray           # correlation targets, (n_t + 1,)
    achieved: np.ndarray            # measured correlations, (n_t + 1,)
    task_covariances: np.ndarray    # implied cross-task covariances, (n_t,)
    heuristic_weights: np.ndarray
    heuristic_variance: float
    realized_variance: float
    seed: int
    basis: SampleBasis


def draw_from_basis(model, basis, spec):
    """Draw a synthetic sample from an already-built basis."""
    reference = getattr(spec, "reference_correlation", None)
    if reference is not None and not np.allclose(
        reference, basis.correlation, atol=1e-8, rtol=0.0
    ):
        raise BasisMismatchError(
            "correlation spec was validated against a different basis "
            "(seed or data mismatch)"
        )
    pc = np.asarray(getattr(spec, "values", spec), dtype=float).reshape(-1)
    targets = make_targets(basis, pc)
    c = solve_coefficients(basis, targets)
    values = basis.expanded @ c
    achieved = np.array(
        [_pearson(values, basis.expanded[:, i]) for i in range(basis.n_columns)]
    )
    n_t = basis.n_columns - 1
    task_cov = model.task.matrix @ c[:n_t]
    values.flags.writeable = False
    return SyntheticSample(
        values=values,
        coefficients=c,
        requested=pc,
        achieved=achieved,
        task_covariances=task_cov,
        heuristic_weights=targets.weights,
        heuristic_variance=targets.variance,
        realized_variance=float(values.var()),
        seed=basis.seed,
        basis=basis,
    )


def draw(model, spec, seed, prior_draw="matrix"):
    """Generate a synthetic fidelity sample.

    Composes basis construction, the variance heuristic, the covariance
    targets and the coefficient solve; the result reconstructs as
    ``basis.expanded @ coefficients`` and carries the achieved
    correlations and the implied cross-task covariances
    ``task_matrix @ c[:n_t]``. Deterministic given (model, spec, seed).
    """
    basis = build_basis(model, seed, prior_draw=prior_draw)
    return draw_from_basis(model, basis, spec)
