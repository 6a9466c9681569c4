"""Sequential feasibility bounds for requested correlation vectors.

Appending a new column ``pc`` (with unit self-correlation) to a correlation
matrix ``C`` keeps it positive semi-definite iff the corresponding new row
of the Cholesky factor has norm at most one. Choosing the entries of ``pc``
one at a time, the factor entries fixed so far pin each next value to a
closed interval:

    partial - width  <=  pc[i]  <=  partial + width,

where ``partial = L[i,:i] @ row[:i]`` and ``width = L[i,i] *
sqrt(1 - row[:i] @ row[:i])`` with ``L`` the factor of ``C`` and ``row``
the new factor row built from previous choices. The first entry is always
free in [-1, 1].

A finalized vector is *saturating* when the new row has unit norm, i.e.
the expanded matrix is singular: the final entry sits at an endpoint of
its interval. Saturating vectors are exactly the correlation profiles a
basis-spanned sample can realize, so :func:`sample_random` picks the last
entry (the correlation to the prior draw) at a random endpoint rather
than uniformly inside. For parity with a formulation that bounds the
final entry by the squared width, pass ``final_bound="squared"``; those
intervals are narrower than the feasible set, so completeness of the
bounds holds only in the default ``"exact"`` mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundsRangeError,
    CorrelationMatrixError,
    SessionError,
)
from .kernels import chol_with_jitter

__all__ = ["BoundsSession", "CorrelationSpec", "begin", "sample_random"]

_SLACK = 1e-12


@dataclass(frozen=True)
class CorrelationSpec:
    """A validated correlation vector with its factor-expansion state.

    ``boundary_gap`` is ``1 - row @ row`` for the new factor row: zero
    means the expanded correlation matrix is singular and a basis-spanned
    sample reproduces ``values`` exactly.
    """

    values: np.ndarray                 # (m,) chosen correlations
    bounds: np.ndarray                 # (m, 2) interval at each choice
    factor_row: np.ndarray             # (m,) new Cholesky row (without corner)
    reference_correlation: np.ndarray  # the (m, m) basis correlation matrix
    boundary_gap: float

    @property
    def is_exact(self):
        """True when a basis-spanned sample can realize these correlations."""
        return self.boundary_gap <= 1e-9

    def expanded_matrix(self):
        """The (m+1, m+1) correlation matrix including the new column."""
        m = self.values.size
        out = np.empty((m + 1, m + 1))
        out[:m, :m] = self.reference_correlation
        out[:m, m] = self.values
        out[m, :m] = self.values
        out[m, m] = 1.0
        return out

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.expanded_matrix())[0])


def begin(correlation, final_bound="exact"):
    """Open a bounds session for a basis correlation matrix.

    Raises
    ------
    CorrelationMatrixError
        If the matrix is not symmetric unit-diagonal PSD (within 1e-8).
    """
    return BoundsSession(correlation, final_bound=final_bound)


class BoundsSession:
    """Sequential chooser for the entries of one correlation vector.

    Sessions are single-owner and order-dependent: call
    :meth:`bounds_for_next`, then :meth:`choose`, repeatedly; call
    :meth:`finalize` after all entries are chosen.
    """

    def __init__(self, correlation, final_bound="exact"):
        if final_bound not in ("exact", "squared"):
            raise ValueError(f"unknown final_bound mode: {final_bound!r}")
        c = np.atleast_2d(np.asarray(correlation, dtype=float))
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise CorrelationMatrixError("correlation matrix must be square")
        if not np.allclose(c, c.T, atol=1e-10):
            raise CorrelationMatrixError("correlation matrix must be symmetric")
        if np.any(np.abs(c) > 1.0 + 1e-8):
            raise CorrelationMatrixError(
                "correlation entries must lie in [-1, 1]"
            )
        if not np.allclose(np.diag(c), 1.0, atol=1e-8):
            raise CorrelationMatrixError("correlation diagonal must be 1")
        min_eig = float(np.linalg.eigvalsh(c)[0])
        if min_eig < -1e-8:
            raise CorrelationMatrixError(
                f"correlation matrix is not PSD (min eigenvalue {min_eig:.3e})"
            )
        try:
            factor, _ = chol_with_jitter(c, start_rel=1e-14, max_rel=1e-6)
        except Exception as exc:
            raise CorrelationMatrixError(
                f"correlation matrix could not be factorized: {exc}"
            ) from exc

        self.final_bound = final_bound
        self._corr = c.copy()
        self._factor = factor  # lower triangular, (m, m)
        self._row = np.zeros(c.shape[0])
        self._values = []
        self._bounds = []

    @property
    def size(self):
        return self._corr.shape[0]

    @property
    def position(self):
        return len(self._values)

    @property
    def remaining(self):
        return self.size - self.position

    @property
    def values(self):
        return tuple(self._values)

    def _interval(self):
        i = self.position
        partial = float(self._factor[i, :i] @ self._row[:i])
        rem = 1.0 - float(self._row[:i] @ self._row[:i])
        rem = max(rem, 0.0)  # clamp roundoff
        if i == self.size - 1 and self.final_bound == "squared":
            width = rem
        else:
            width = float(self._factor[i, i]) * np.sqrt(rem)
        return partial, width

    def bounds_for_next(self):
        """Valid closed interval (lower, upper) for the next entry."""
        if self.remaining == 0:
            raise SessionError("all correlation entries have been chosen")
        partial, width = self._interval()
        return partial - width, partial + width

    def choose(self, value):
        """Record the next entry; value must lie within the live bounds."""
        if self.remaining == 0:
            raise SessionError("all correlation entries have been chosen")
        value = float(value)
        partial, width = self._interval()
        lower, upper = partial - width, partial + width
        if not (lower - _SLACK <= value <= upper + _SLACK):
            raise BoundsRangeError(value, lower, upper, self.position)
        i = self.position
        diag = float(self._factor[i, i])
        ell = (value - partial) / diag if diag > 0 else 0.0
        self._row[i] = ell
        self._values.append(value)
        self._bounds.append((lower, upper))
        return self

    def finalize(self):
        """Freeze the finished vector into a :class:`CorrelationSpec`."""
        if self.remaining:
            raise SessionError(
                f"{self.remaining} correlation entries still unchosen"
            )
        row = self._row.copy()
        gap = max(1.0 - float(row @ row), 0.0)
        values = np.asarray(self._values, dtype=float)
        bounds = np.asarray(self._bounds, dtype=float)
        ref = self._corr.copy()
        for arr in (values, bounds, row, ref):
            arr.flags.writeable = False
        return CorrelationSpec(
            values=values,
            bounds=bounds,
            factor_row=row,
            reference_correlation=ref,
            boundary_gap=gap,
        )


def sample_random(session, seed):
    """Complete a session with random in-bounds choices; returns the spec.

    Entries against the fidelities are uniform within their live bounds;
    the final entry (against the prior draw) is placed at one of its two
    interval endpoints, chosen by coin flip, so the finished vector is
    saturating (see module docstring). Deterministic per seed. The session
    is consumed.
    """
    rng = np.random.default_rng(seed)
    while session.remaining:
        lower, upper = session.bounds_for_next()
        if session.remaining == 1 and session.final_bound == "exact":
            value = lower if rng.integers(2) == 0 else upper
        else:
            value = float(rng.uniform(lower, upper))
        session.choose(value)
    return session.finalize()
