"""Intra-fidelity kernels and their coregionalization composition.

Two stationary kernel families are provided: the RBF (squared exponential)
kernel with per-dimension lengthscales, and the spectral mixture kernel in
its product-of-dimensions form,

    k(tau) = sum_q w_q * prod_d exp(-2 pi^2 tau_d^2 v_qd) * cos(2 pi tau_d mu_qd),

where ``tau`` is the difference between two inputs. Multi-fidelity structure
comes from a coregionalization kernel: the full covariance over ``n_t``
fidelities observed on a common grid is the Kronecker product of a task
matrix (inter-fidelity covariances) with the core kernel matrix.

The task matrix is stored through its lower-triangular factor so positive
semi-definiteness holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, ShapeError

__all__ = [
    "RbfKernel",
    "SpectralMixtureKernel",
    "TaskMatrix",
    "eval_core",
    "eval_coreg",
    "chol_with_jitter",
]

_TWO_PI_SQ = 2.0 * np.pi**2


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class RbfKernel:
    """Squared-exponential kernel with per-dimension lengthscales.

    Parameters
    ----------
    lengthscales : array_like, shape (n_d,)
        Strictly positive, in domain units.
    signal_variance : float
        Strictly positive prior variance at zero distance.
    noise_variance : float or array_like
        Observation noise variance; a scalar is shared by all fidelities,
        a vector gives one value per fidelity. May be zero.
    """

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: np.ndarray | float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ShapeError("lengthscales must be a 1-d array with n_d entries")
        if not np.all(ls > 0):
            raise ValueError("lengthscales must be strictly positive")
        if not self.signal_variance > 0:
            raise ValueError("signal_variance must be strictly positive")
        _set(self, "lengthscales", _readonly(ls))
        _set(self, "signal_variance", float(self.signal_variance))
        _set(self, "noise_variance", _validate_noise(self.noise_variance))

    @property
    def n_dims(self):
        return self.lengthscales.size


@dataclass(frozen=True)
class SpectralMixtureKernel:
    """Spectral mixture kernel (product over dimensions, Q components).

    Parameters
    ----------
    weights : array_like, shape (Q,)
        Strictly positive component weights; k(0) = sum of weights.
    means : array_like, shape (Q, n_d)
        Non-negative mean frequencies, cycles per domain unit.
    variances : array_like, shape (Q, n_d)
        Strictly positive per-dimension frequency variances.
    noise_variance : float or array_like
        As for :class:`RbfKernel`.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    noise_variance: np.ndarray | float = 0.0

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        v = np.atleast_2d(np.asarray(self.variances, dtype=float))
        if w.ndim != 1 or w.size < 1:
            raise ShapeError("weights must be a 1-d array with Q >= 1 entries")
        if mu.shape[0] != w.size or v.shape != mu.shape:
            raise ShapeError(
                f"means/variances must both be (Q, n_d) with Q={w.size}; "
                f"got {mu.shape} and {v.shape}"
            )
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        if not np.all(mu >= 0):
            raise ValueError("mean frequencies must be non-negative")
        if not np.all(v > 0):
            raise ValueError("frequency variances must be strictly positive")
        _set(self, "weights", _readonly(w))
        _set(self, "means", _readonly(mu))
        _set(self, "variances", _readonly(v))
        _set(self, "noise_variance", _validate_noise(self.noise_variance))

    @property
    def n_mixtures(self):
        return self.weights.size

    @property
    def n_dims(self):
        return self.means.shape[1]


def _validate_noise(noise):
    arr = np.atleast_1d(np.asarray(noise, dtype=float))
    if arr.ndim != 1:
        raise ShapeError("noise_variance must be a scalar or 1-d per-fidelity array")
    if not np.all(arr >= 0):
        raise ValueError("noise_variance must be non-negative")
    if arr.size == 1:
        return float(arr[0])
    return _readonly(arr)


def noise_vector(params, n_tasks):
    """Per-fidelity noise variances as a length ``n_tasks`` vector."""
    noise = np.atleast_1d(np.asarray(params.noise_variance, dtype=float))
    if noise.size == 1:
        return np.full(n_tasks, noise[0])
    if noise.size != n_tasks:
        raise ShapeError(
            f"per-fidelity noise has {noise.size} entries but there are "
            f"{n_tasks} fidelities"
        )
    return noise.copy()


@dataclass(frozen=True)
class TaskMatrix:
    """Inter-fidelity covariance matrix, stored via its triangular factor.

    ``matrix`` is ``factor @ factor.T``, hence symmetric PSD by
    construction; the factor diagonal is required to be strictly positive
    so the diagonal of the matrix is too.
    """

    factor: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.factor, dtype=float))
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ShapeError("task factor must be a square matrix")
        if not np.allclose(f, np.tril(f)):
            raise ValueError("task factor must be lower triangular")
        if not np.all(np.diag(f) > 0):
            raise ValueError("task factor diagonal must be strictly positive")
        _set(self, "factor", _readonly(f))

    @property
    def n_tasks(self):
        return self.factor.shape[0]

    @property
    def matrix(self):
        return self.factor @ self.factor.T

    @classmethod
    def identity(cls, n_tasks):
        return cls(np.eye(n_tasks))

    @classmethod
    def from_matrix(cls, sigma, jitter=0.0):
        """Factor an explicit symmetric PSD matrix of task covariances."""
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1]:
            raise ShapeError("task matrix must be square")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
            raise ValueError("task matrix must be symmetric")
        if jitter:
            sigma = sigma + jitter * np.eye(sigma.shape[0])
        try:
            return cls(np.linalg.cholesky(sigma))
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"task matrix is not positive definite: {exc}") from exc

    def correlation(self):
        """Inter-fidelity correlations implied by the covariances."""
        sigma = self.matrix
        d = np.sqrt(np.diag(sigma))
        return sigma / np.outer(d, d)


def _check_points(params, A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2:
        raise ShapeError("point matrices must be 2-d (n, n_d)")
    n_d = params.n_dims
    if A.shape[1] != n_d or B.shape[1] != n_d:
        raise ShapeError(
            f"kernel expects {n_d}-dimensional points; got {A.shape[1]} and {B.shape[1]}"
        )
    return A, B


def eval_core(params, A, B):
    """Core (task-independent) kernel matrix between two point sets.

    Returns the n-by-m matrix with entry (i, j) equal to the kernel value
    for row i of ``A`` against row j of ``B``. Observation noise is never
    added here.
    """
    A, B = _check_points(params, A, B)
    tau = A[:, None, :] - B[None, :, :]
    if isinstance(params, RbfKernel):
        sq = np.sum((tau / params.lengthscales) ** 2, axis=-1)
        return params.signal_variance * np.exp(-0.5 * sq)
    if isinstance(params, SpectralMixtureKernel):
        out = np.zeros(tau.shape[:2])
        for q in range(params.n_mixtures):
            env = np.exp(-_TWO_PI_SQ * np.sum(tau**2 * params.variances[q], axis=-1))
            phase = np.prod(np.cos(2.0 * np.pi * tau * params.means[q]), axis=-1)
            out += params.weights[q] * env * phase
        return out
    raise TypeError(f"unsupported kernel type: {type(params).__name__}")


def eval_coreg(params, task, X):
    """Full coregionalization covariance over all (fidelity, point) pairs.

    Returns the Kronecker product of the task matrix with the core kernel
    matrix on ``X``, with per-fidelity observation noise added to the
    diagonal. Row/column index (k, i) maps to flat index ``k * n_x + i``,
    so block (k, l) equals ``t_kl * K_core``.
    """
    core = eval_core(params, X, X)
    full = np.kron(task.matrix, core)
    noise = noise_vector(params, task.n_tasks)
    full[np.diag_indices_from(full)] += np.repeat(noise, core.shape[0])
    return full


def chol_with_jitter(K, start_rel=1e-10, max_rel=1e-4, factor=10.0):
    """Lower Cholesky factor of ``K``, escalating diagonal jitter on failure.

    Jitter starts at ``start_rel`` times the mean diagonal and is multiplied
    by ``factor`` until factorization succeeds or ``max_rel`` is exceeded.

    Returns
    -------
    (L, jitter) : (ndarray, float)
        The factor of ``K + jitter * I`` and the jitter actually added.

    Raises
    ------
    ConditioningError
        If no attempted jitter produced a factorizable matrix.
    """
    K = np.asarray(K, dtype=float)
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.abs(np.diag(K))))
    if scale == 0.0:
        scale = 1.0
    rel = start_rel
    eye = np.eye(K.shape[0])
    while rel <= max_rel * (1.0 + 1e-12):
        jitter = rel * scale
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            rel *= factor
    raise ConditioningError(
        "covariance matrix is not factorizable", attempted_jitter=max_rel * scale
    )


def core_log_gradients(params, X):
    """Derivatives of the core kernel matrix w.r.t. log-transformed parameters.

    Yields (name, dK) pairs in the canonical parameter order used by the
    fitter: RBF gives ``log lengthscale`` per dimension then ``log signal
    variance``; the spectral mixture gives ``log weight`` per component,
    then ``log mean`` and ``log variance`` per (component, dimension).
    """
    X = np.asarray(X, dtype=float)
    tau = X[:, None, :] - X[None, :, :]
    if isinstance(params, RbfKernel):
        core = eval_core(params, X, X)
        for d in range(params.n_dims):
            yield (f"log_lengthscale[{d}]", core * (tau[..., d] ** 2 / params.lengthscales[d] ** 2))
        yield ("log_signal_variance", core)
        return
    if isinstance(params, SpectralMixtureKernel):
        n_d = params.n_dims
        for q in range(params.n_mixtures):
            env = np.exp(-_TWO_PI_SQ * tau**2 * params.variances[q])
            phase = np.cos(2.0 * np.pi * tau * params.means[q])
            per_dim = env * phase  # (n, n, n_d) factors of this component
            comp = params.weights[q] * np.prod(per_dim, axis=-1)
            yield (f"log_weight[{q}]", comp)
            for d in range(n_d):
                rest = params.weights[q] * np.prod(
                    per_dim[..., [dd for dd in range(n_d) if dd != d]], axis=-1
                )
                mu, v = params.means[q, d], params.variances[q, d]
                angle = 2.0 * np.pi * tau[..., d]
                # d/d log(mu) of cos(angle*mu) = -mu * angle * sin(angle*mu)
                yield (
                    f"log_mean[{q},{d}]",
                    rest * env[..., d] * (-mu * angle * np.sin(angle * mu)),
                )
                yield (
                    f"log_variance[{q},{d}]",
                    comp * (-_TWO_PI_SQ * tau[..., d] ** 2 * v),
                )
        return
    raise TypeError(f"unsupported kernel type: {type(params).__name__}")
