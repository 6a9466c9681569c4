"""Built-in analytic multi-fidelity function pairs and grid builders.

Two classic two-fidelity pairs are provided, both on the unit hypercube:

``liu`` (1-d), after the pedagogical pair used by Liu et al. (2018) for
nonlinear fidelity relationships:

    low(x)  = sin(8 pi x)
    high(x) = (x - sqrt(2)) * sin(8 pi x)^2

``currin`` (2-d), the Currin et al. (1991) exponential function with the
shifted-average low-fidelity variant of Xiong et al. (2013):

    high(x1, x2) = (1 - exp(-1 / (2 x2)))
                   * (2300 x1^3 + 1900 x1^2 + 2092 x1 + 60)
                   / (100 x1^3 + 500 x1^2 + 4 x1 + 20)
    low(x1, x2)  = mean of high at (x1 +/- 0.05, x2 +/- 0.05),
                   with x2 - 0.05 clamped at 0

(at x2 = 0 the exponential factor is taken at its limit, 1).

Grid datasets order the columns (low, high) so the ground truth is the
last fidelity, matching the dataset convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FidelityDataset
from .errors import DomainBoundsError
from .kernels import _readonly

__all__ = ["BenchmarkPair", "get_pair", "evaluate", "grid", "PAIR_NAMES"]


@dataclass(frozen=True)
class BenchmarkPair:
    name: str
    n_dims: int
    bounds: np.ndarray  # (n_d, 2)
    high: callable
    low: callable
    citation: str

    def __post_init__(self):
        object.__setattr__(self, "bounds", _readonly(self.bounds))


def _liu_low(x):
    return np.sin(8.0 * np.pi * x[:, 0])


def _liu_high(x):
    s = np.sin(8.0 * np.pi * x[:, 0])
    return (x[:, 0] - np.sqrt(2.0)) * s * s


def _currin_high_raw(x1, x2):
    with np.errstate(divide="ignore"):
        damp = np.where(x2 > 0, 1.0 - np.exp(-1.0 / (2.0 * np.maximum(x2, 1e-300))), 1.0)
    num = 2300.0 * x1**3 + 1900.0 * x1**2 + 2092.0 * x1 + 60.0
    den = 100.0 * x1**3 + 500.0 * x1**2 + 4.0 * x1 + 20.0
    return damp * num / den


def _currin_high(x):
    return _currin_high_raw(x[:, 0], x[:, 1])


def _currin_low(x):
    x1, x2 = x[:, 0], x[:, 1]
    x2m = np.maximum(x2 - 0.05, 0.0)
    return 0.25 * (
        _currin_high_raw(x1 + 0.05, x2 + 0.05)
        + _currin_high_raw(x1 + 0.05, x2m)
        + _currin_high_raw(x1 - 0.05, x2 + 0.05)
        + _currin_high_raw(x1 - 0.05, x2m)
    )


_PAIRS = {
    "liu": BenchmarkPair(
        name="liu",
        n_dims=1,
        bounds=[[0.0, 1.0]],
        high=_liu_high,
        low=_liu_low,
        citation="Liu et al. (2018)",
    ),
    "currin": BenchmarkPair(
        name="currin",
        n_dims=2,
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        high=_currin_high,
        low=_currin_low,
        citation="Currin et al. (1991); low fidelity after Xiong et al. (2013)",
    ),
}

PAIR_NAMES = tuple(sorted(_PAIRS))


def get_pair(name):
    """Look up a benchmark pair by name; raises KeyError for unknown names."""
    try:
        return _PAIRS[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; available: {', '.join(PAIR_NAMES)}"
        ) from None


def evaluate(pair, fidelity, x):
    """Evaluate one fidelity of a pair row-wise.

    Parameters
    ----------
    fidelity : str
        ``"low"`` or ``"high"``.
    x : array_like, shape (n, n_d)
        Points inside the pair's domain box.

    Raises
    ------
    DomainBoundsError
        If any row falls outside the domain box (reports the first).
    """
    if fidelity not in ("low", "high"):
        raise ValueError(f"fidelity must be 'low' or 'high', got {fidelity!r}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != pair.n_dims:
        raise DomainBoundsError(
            f"{pair.name} expects {pair.n_dims}-dimensional points, got {x.shape[1]}"
        )
    lo, hi = pair.bounds[:, 0], pair.bounds[:, 1]
    bad = np.any((x < lo) | (x > hi), axis=1)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise DomainBoundsError(
            f"point {x[row].tolist()} (row {row}) is outside the "
            f"{pair.name} domain box",
            row=row,
        )
    fn = pair.low if fidelity == "low" else pair.high
    return fn(x)


def grid(pair, points_per_dim):
    """Uniform tensor grid over the domain box with both fidelities evaluated.

    Rows are lexicographically increasing in the coordinates. Column order
    is (low, high): ground truth last.
    """
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be >= 2")
    axes = [
        np.linspace(lo, hi, points_per_dim) for lo, hi in pair.bounds
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.column_stack([m.reshape(-1) for m in mesh])
    y = np.column_stack([evaluate(pair, "low", x), evaluate(pair, "high", x)])
    return FidelityDataset(
        x,
        y,
        labels=("low", "high"),
        provenance={"generator": pair.name, "points_per_dim": points_per_dim},
    )
