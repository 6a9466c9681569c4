"""Multi-output GP regression over fidelities sharing one training grid.

The joint covariance over all (fidelity, point) pairs is the Kronecker
product of a task matrix with the core kernel matrix, plus per-fidelity
observation noise on the diagonal. Hyperparameters (kernel, noise, task
factor) are fit by maximizing the log marginal likelihood with a
multi-restart quasi-Newton optimizer on log-transformed parameters.

Besides the standard per-fidelity posterior, this module computes the
posterior over a hypothetical extra fidelity that has no observations,
specified only through its task covariances against the existing
fidelities: the predictive mean is ``Y @ inv(S) s_cross`` and the
predictive covariance is the scalar ``s_var - s_cross' inv(S) s_cross``
times the core kernel matrix, both evaluated on the training grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.special import expit

from .data import FidelityDataset
from .errors import (
    ConditioningError,
    FitError,
    InvalidTaskCovarianceError,
    ShapeError,
)
from .kernels import (
    RbfKernel,
    SpectralMixtureKernel,
    TaskMatrix,
    chol_with_jitter,
    core_log_gradients,
    eval_core,
    noise_vector,
)

__all__ = [
    "FitConfig",
    "FitDiagnostics",
    "RestartRecord",
    "MogpModel",
    "PosteriorResult",
    "SyntheticTaskPosterior",
    "log_marginal_likelihood",
    "fit",
    "posterior",
    "synthetic_task_posterior",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _stack_targets(y):
    # fidelity-major stacking so index (k, i) -> k * n_x + i matches kron blocks
    return y.reshape(-1, order="F")


def _build_cov(params, task, x):
    core = eval_core(params, x, x)
    full = np.kron(task.matrix, core)
    noise = noise_vector(params, task.n_tasks)
    full[np.diag_indices_from(full)] += np.repeat(noise, core.shape[0])
    return full


def _lml_from_chol(chol, y):
    alpha = scipy.linalg.cho_solve((chol, True), y, check_finite=False)
    return (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * y.size * _LOG_2PI,
        alpha,
    )


def log_marginal_likelihood(data, params, task):
    """Log marginal likelihood of the stacked targets under the GP prior."""
    if task.n_tasks != data.n_fidelities:
        raise ShapeError(
            f"task matrix has {task.n_tasks} tasks for {data.n_fidelities} fidelities"
        )
    cov = _build_cov(params, task, data.x)
    chol, _ = chol_with_jitter(cov)
    value, _ = _lml_from_chol(chol, _stack_targets(data.y))
    return value


@dataclass(frozen=True)
class FitConfig:
    """Settings for hyperparameter fitting.

    Parameters
    ----------
    kernel : str
        ``"spectral_mixture"`` (default) or ``"rbf"``.
    mixtures : int
        Number of spectral mixture components Q.
    restarts : int
        Optimizer restarts; the best final likelihood wins.
    max_iter : int
        L-BFGS-B iteration budget per restart.
    seed : int
        Seed for restart initialization.
    noise : str or float
        ``"shared"`` learns one noise variance for all fidelities,
        ``"per_fidelity"`` learns one per fidelity, a float fixes the
        value (0.0 gives a noise-free fit).
    gradient : str
        ``"numeric"`` (default) uses finite differences inside the
        optimizer; ``"analytic"`` uses closed-form gradients and is much
        faster on larger grids.
    """

    kernel: str = "spectral_mixture"
    mixtures: int = 4
    restarts: int = 8
    max_iter: int = 100
    seed: int = 0
    noise: str | float = "shared"
    gradient: str = "numeric"

    def __post_init__(self):
        if self.kernel not in ("rbf", "spectral_mixture"):
            raise ValueError(f"unknown kernel kind: {self.kernel!r}")
        if self.gradient not in ("numeric", "analytic"):
            raise ValueError(f"unknown gradient mode: {self.gradient!r}")
        if isinstance(self.noise, str):
            if self.noise not in ("shared", "per_fidelity"):
                raise ValueError(f"unknown noise mode: {self.noise!r}")
        elif not float(self.noise) >= 0:
            raise ValueError("fixed noise variance must be non-negative")
        if self.mixtures < 1:
            raise ValueError("mixtures must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class RestartRecord:
    index: int
    initial_lml: float
    final_lml: float
    iterations: int
    success: bool
    message: str


@dataclass(frozen=True)
class FitDiagnostics:
    lml: float
    restarts: tuple
    best_restart: int

    @property
    def iterations(self):
        return sum(r.iterations for r in self.restarts)


@dataclass(frozen=True)
class MogpModel:
    """A fitted multi-output GP: kernel hyperparameters plus task matrix.

    Construction factorizes the full training covariance once; the factor
    and the weight vector ``alpha = inv(K) y`` are cached for reuse by the
    posterior operations. Instances are immutable.
    """

    kernel: RbfKernel | SpectralMixtureKernel
    task: TaskMatrix
    dataset: FidelityDataset
    diagnostics: FitDiagnostics | None = None

    def __post_init__(self):
        if self.task.n_tasks != self.dataset.n_fidelities:
            raise ShapeError(
                f"task matrix has {self.task.n_tasks} tasks for "
                f"{self.dataset.n_fidelities} fidelities"
            )
        if self.kernel.n_dims != self.dataset.n_dims:
            raise ShapeError(
                f"kernel is {self.kernel.n_dims}-dimensional but data has "
                f"{self.dataset.n_dims} dimensions"
            )
        cov = _build_cov(self.kernel, self.task, self.dataset.x)
        chol, jitter = chol_with_jitter(cov)
        y = _stack_targets(self.dataset.y)
        lml, alpha = _lml_from_chol(chol, y)
        chol.flags.writeable = False
        alpha.flags.writeable = False
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_jitter", jitter)
        object.__setattr__(self, "_lml", lml)

    @property
    def chol_factor(self):
        """Cached lower Cholesky factor of the (jittered) training covariance."""
        return self._chol

    @property
    def jitter(self):
        return self._jitter

    @property
    def lml(self):
        """Log marginal likelihood of the stored hyperparameters."""
        return self._lml


# ---------------------------------------------------------------------------
# parameter packing for the optimizer
# ---------------------------------------------------------------------------

def _softplus(x):
    return np.logaddexp(0.0, x)


def _softplus_inv(y):
    y = np.asarray(y, dtype=float)
    return y + np.log1p(-np.exp(-np.maximum(y, 1e-300)))


class _ParamPack:
    """Maps between a flat optimizer vector and (kernel, task) objects.

    Layout: kernel block (log-transformed, canonical order matching
    ``core_log_gradients``), then noise block (log variances, if learned),
    then the row-major lower triangle of the task factor with a softplus
    transform on the diagonal.
    """

    def __init__(self, data, config):
        self.config = config
        self.n_t = data.n_fidelities
        self.n_d = data.n_dims
        span = data.x.max(axis=0) - data.x.min(axis=0)
        self.span = np.where(span > 0, span, 1.0)
        self.pooled_var = max(float(np.var(data.y)), 1e-12)

        if config.kernel == "rbf":
            self.n_kernel = self.n_d + 1
        else:
            self.n_kernel = config.mixtures * (1 + 2 * self.n_d)
        if isinstance(config.noise, str):
            self.n_noise = 1 if config.noise == "shared" else self.n_t
        else:
            self.n_noise = 0
        self.tril_idx = [(a, b) for a in range(self.n_t) for b in range(a + 1)]
        self.n_task = len(self.tril_idx)
        self.size = self.n_kernel + self.n_noise + self.n_task

        # empirical task factor makes a strong deterministic center point
        emp = np.cov(data.y, rowvar=False, bias=True).reshape(self.n_t, self.n_t)
        emp = emp + (1e-6 * max(np.trace(emp) / self.n_t, 1e-12)) * np.eye(self.n_t)
        self.task_center = np.linalg.cholesky(emp)

        # per-dimension nonzero pairwise distances feed the frequency init
        self._dists = []
        x = data.x
        n = min(x.shape[0], 400)
        sub = x[:n]
        for d in range(self.n_d):
            dd = np.abs(sub[:, None, d] - sub[None, :, d]).ravel()
            dd = dd[dd > 0]
            self._dists.append(np.sort(dd) if dd.size else np.array([1.0]))

    # -- transforms ---------------------------------------------------------

    def unpack(self, theta):
        k = self.n_kernel
        kern = self._unpack_kernel(theta[:k])
        if self.n_noise:
            noise = np.exp(theta[k : k + self.n_noise])
            noise = float(noise[0]) if self.n_noise == 1 else noise
        else:
            noise = float(self.config.noise)
        kern = self._with_noise(kern, noise)
        factor = np.zeros((self.n_t, self.n_t))
        for val, (a, b) in zip(theta[k + self.n_noise :], self.tril_idx):
            factor[a, b] = _softplus(val) if a == b else val
        return kern, TaskMatrix(factor)

    def _unpack_kernel(self, block):
        if self.config.kernel == "rbf":
            return RbfKernel(
                lengthscales=np.exp(block[: self.n_d]),
                signal_variance=float(np.exp(block[self.n_d])),
            )
        q = self.config.mixtures
        w = np.empty(q)
        mu = np.empty((q, self.n_d))
        v = np.empty((q, self.n_d))
        pos = 0
        for i in range(q):
            w[i] = np.exp(block[pos])
            pos += 1
            for d in range(self.n_d):
                mu[i, d] = np.exp(block[pos])
                v[i, d] = np.exp(block[pos + 1])
                pos += 2
        return SpectralMixtureKernel(weights=w, means=mu, variances=v)

    @staticmethod
    def _with_noise(kern, noise):
        if isinstance(kern, RbfKernel):
            return RbfKernel(kern.lengthscales, kern.signal_variance, noise)
        return SpectralMixtureKernel(kern.weights, kern.means, kern.variances, noise)

    def pack_task(self, factor):
        out = []
        for a, b in self.tril_idx:
            out.append(_softplus_inv(factor[a, a]) if a == b else factor[a, b])
        return np.asarray(out, dtype=float)

    # -- initial points -----------------------------------------------------

    def initial(self, rng, restart):
        """Transformed initial point; restart 0 is the deterministic center."""
        theta = np.empty(self.size)
        theta[: self.n_kernel] = self._initial_kernel(rng, restart)
        k = self.n_kernel
        if self.n_noise:
            center = math.log(1e-2 * self.pooled_var)
            if restart == 0:
                theta[k : k + self.n_noise] = center
            else:
                theta[k : k + self.n_noise] = center + rng.uniform(
                    math.log(0.1), math.log(10.0), size=self.n_noise
                )
        base = self.pack_task(self.task_center)
        if restart == 0:
            theta[k + self.n_noise :] = base
        else:
            theta[k + self.n_noise :] = base + rng.normal(0.0, 0.3, size=self.n_task)
        return theta

    def _initial_kernel(self, rng, restart):
        if self.config.kernel == "rbf":
            if restart == 0:
                ls = 0.2 * self.span
                sv = self.pooled_var
            else:
                # lengthscales log-uniform over [0.01, 2] x domain span
                ls = self.span * np.exp(
                    rng.uniform(math.log(0.01), math.log(2.0), size=self.n_d)
                )
                sv = self.pooled_var * math.exp(rng.uniform(math.log(0.5), math.log(2.0)))
            return np.concatenate([np.log(ls), [math.log(sv)]])
        q = self.config.mixtures
        block = np.empty(self.n_kernel)
        pos = 0
        for i in range(q):
            block[pos] = math.log(self.pooled_var / q)
            if restart > 0:
                block[pos] += rng.uniform(math.log(0.5), math.log(2.0))
            pos += 1
            for d in range(self.n_d):
                dists = self._dists[d]
                if restart == 0:
                    # spread deterministic frequencies over the distance spectrum
                    pick = dists[int((i + 0.5) / q * (dists.size - 1))]
                else:
                    pick = dists[rng.integers(dists.size)]
                mu = 1.0 / (2.0 * pick)
                v = (0.5 / self.span[d]) ** 2
                if restart > 0:
                    v *= math.exp(rng.uniform(math.log(0.05), math.log(8.0)))
                block[pos] = math.log(mu)
                block[pos + 1] = math.log(v)
                pos += 2
        return block

    def bounds(self):
        lo = np.full(self.size, -np.inf)
        hi = np.full(self.size, np.inf)
        pv, span = self.pooled_var, self.span
        if self.config.kernel == "rbf":
            for d in range(self.n_d):
                lo[d] = math.log(1e-3 * span[d])
                hi[d] = math.log(1e3 * span[d])
            lo[self.n_d] = math.log(1e-8 * pv)
            hi[self.n_d] = math.log(1e6 * pv)
        else:
            pos = 0
            for _ in range(self.config.mixtures):
                lo[pos] = math.log(1e-8 * pv)
                hi[pos] = math.log(1e6 * pv)
                pos += 1
                for d in range(self.n_d):
                    lo[pos] = math.log(1e-4 / span[d])
                    hi[pos] = math.log(1e4 / span[d])
                    lo[pos + 1] = math.log((1e-4 / span[d]) ** 2)
                    hi[pos + 1] = math.log((1e3 / span[d]) ** 2)
                    pos += 2
        k = self.n_kernel
        if self.n_noise:
            lo[k : k + self.n_noise] = math.log(1e-12 * pv)
            hi[k : k + self.n_noise] = math.log(1e2 * pv)
        scale = math.sqrt(pv)
        for j, (a, b) in enumerate(self.tril_idx):
            idx = k + self.n_noise + j
            if a == b:
                lo[idx] = _softplus_inv(1e-5 * scale)
                hi[idx] = _softplus_inv(1e3 * scale)
            else:
                lo[idx] = -1e3 * scale
                hi[idx] = 1e3 * scale
        return list(zip(lo, hi))


# ---------------------------------------------------------------------------
# objective and analytic gradient
# ---------------------------------------------------------------------------

def _neg_lml(theta, pack, data, y):
    kern, task = pack.unpack(theta)
    cov = _build_cov(kern, task, data.x)
    chol, _ = chol_with_jitter(cov)
    value, _ = _lml_from_chol(chol, y)
    return -value


def _neg_lml_and_grad(theta, pack, data, y):
    kern, task = pack.unpack(theta)
    x = data.x
    n_x, n_t = data.n_points, task.n_tasks
    core = eval_core(kern, x, x)
    sigma = task.matrix
    cov = np.kron(sigma, core)
    noise = noise_vector(kern, n_t)
    cov[np.diag_indices_from(cov)] += np.repeat(noise, n_x)
    chol, _ = chol_with_jitter(cov)
    value, alpha = _lml_from_chol(chol, y)

    # dLML/dp = 0.5 a' dK a - 0.5 tr(inv(K) dK), evaluated blockwise for
    # dK = S (x) G without materializing any Kronecker products.
    kinv = scipy.linalg.cho_solve((chol, True), np.eye(n_x * n_t), check_finite=False)
    kinv4 = kinv.reshape(n_t, n_x, n_t, n_x)
    a_mat = alpha.reshape(n_t, n_x).T  # (n_x, n_t)

    def kron_grad(s_mat, g_mat):
        ga = g_mat @ a_mat
        quad = float(np.sum((a_mat.T @ ga) * s_mat))
        tg = np.einsum("kilj,ij->kl", kinv4, g_mat)
        return 0.5 * quad - 0.5 * float(np.sum(s_mat * tg))

    grad = np.empty(pack.size)
    pos = 0
    tg_core = np.einsum("kilj,ij->kl", kinv4, core)
    ga_core = core @ a_mat
    quad_core = a_mat.T @ ga_core  # reused by every task-factor derivative
    for _, g_mat in core_log_gradients(kern, x):
        grad[pos] = kron_grad(sigma, g_mat)
        pos += 1

    if pack.n_noise == 1:
        nv = noise[0]
        quad = nv * float(alpha @ alpha)
        tr = nv * float(np.trace(kinv))
        grad[pos] = 0.5 * quad - 0.5 * tr
        pos += 1
    elif pack.n_noise:
        for k in range(n_t):
            nv = noise[k]
            quad = nv * float(a_mat[:, k] @ a_mat[:, k])
            tr = nv * float(np.einsum("ii->", kinv4[k, :, k, :]))
            grad[pos] = 0.5 * quad - 0.5 * tr
            pos += 1

    factor = task.factor
    for j, (a, b) in enumerate(pack.tril_idx):
        u = factor[:, b]
        # dSigma = e_a u' + u e_a', scaled by the softplus slope on the diagonal
        scale = expit(theta[pack.n_kernel + pack.n_noise + j]) if a == b else 1.0
        quad = 2.0 * float(quad_core[a] @ u)
        tr = 2.0 * float(tg_core[a] @ u)
        grad[pos] = scale * (0.5 * quad - 0.5 * tr)
        pos += 1

    return -value, -grad


def fit(data, config=None):
    """Fit hyperparameters by maximizing the log marginal likelihood.

    Runs ``config.restarts`` L-BFGS-B starts (the first from a
    deterministic data-driven center, the rest randomized from the seed)
    and keeps the best final likelihood. Deterministic given (data, config).

    Raises
    ------
    FitError
        If every restart fails to produce a factorizable covariance.
    """
    config = config or FitConfig()
    pack = _ParamPack(data, config)
    y = _stack_targets(data.y)
    rng = np.random.default_rng(config.seed)
    starts = [pack.initial(rng, r) for r in range(config.restarts)]
    bounds = pack.bounds()
    starts = [np.clip(t, [b[0] for b in bounds], [b[1] for b in bounds]) for t in starts]

    if config.gradient == "analytic":
        objective = lambda t: _neg_lml_and_grad(t, pack, data, y)
        jac = True
    else:
        objective = lambda t: _neg_lml(t, pack, data, y)
        jac = None

    records = []
    failures = []
    best = None
    for r, theta0 in enumerate(starts):
        try:
            init_lml = -_neg_lml(theta0, pack, data, y)
            res = scipy.optimize.minimize(
                objective,
                theta0,
                jac=jac,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.max_iter},
            )
            final_lml = -float(res.fun)
            if final_lml < init_lml:  # guard: L-BFGS-B should never regress
                res.x, final_lml = theta0, init_lml
            records.append(
                RestartRecord(
                    index=r,
                    initial_lml=float(init_lml),
                    final_lml=final_lml,
                    iterations=int(res.nit),
                    success=bool(res.success),
                    message=str(res.message),
                )
            )
            if best is None or final_lml > best[0]:
                best = (final_lml, res.x.copy(), r)
        except ConditioningError as exc:
            failures.append(str(exc))
            records.append(
                RestartRecord(
                    index=r,
                    initial_lml=float("nan"),
                    final_lml=float("-inf"),
                    iterations=0,
                    success=False,
                    message=str(exc),
                )
            )
    if best is None:
        raise FitError(failures)

    kern, task = pack.unpack(best[1])
    diagnostics = FitDiagnostics(
        lml=best[0], restarts=tuple(records), best_restart=best[2]
    )
    return MogpModel(kernel=kern, task=task, dataset=data, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# posteriors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorResult:
    """Per-fidelity posterior: ``means[:, k]`` and ``covariances[k]``."""

    means: np.ndarray        # (n_star, n_t)
    covariances: np.ndarray  # (n_t, n_star, n_star)


def posterior(model, x_star):
    """Standard GP posterior over the augmented (point, fidelity) domain.

    Returns the predictive mean and covariance of every fidelity at the
    query points (latent function values; observation noise not added).
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.ndim != 2 or x_star.shape[1] != model.dataset.n_dims:
        raise ShapeError(
            f"x_star must be (n, {model.dataset.n_dims})"
        )
    sigma = model.task.matrix
    n_t = model.task.n_tasks
    n_x = model.dataset.n_points
    core_xs = eval_core(model.kernel, model.dataset.x, x_star)  # (n_x, n_star)
    core_ss = eval_core(model.kernel, x_star, x_star)

    a_mat = model._alpha.reshape(n_t, n_x).T
    means = (core_xs.T @ a_mat) @ sigma  # (n_star, n_t)

    covs = np.empty((n_t, x_star.shape[0], x_star.shape[0]))
    for k in range(n_t):
        k_star = np.kron(sigma[:, k : k + 1], core_xs)  # (n_x*n_t, n_star)
        v = scipy.linalg.cho_solve((model.chol_factor, True), k_star, check_finite=False)
        covs[k] = sigma[k, k] * core_ss - k_star.T @ v
    return PosteriorResult(means=means, covariances=covs)


@dataclass(frozen=True)
class SyntheticTaskPosterior:
    """Posterior over an extra fidelity given only its task covariances."""

    contribution: np.ndarray   # inv(S) s_cross, length n_t
    task_variance: float       # s_var - s_cross' inv(S) s_cross, >= 0
    mean: np.ndarray           # (n_x,)
    covariance: np.ndarray     # (n_x, n_x)


def synthetic_task_posterior(model, task_cross, task_var):
    """Posterior of a data-free fidelity evaluated on the training grid.

    Parameters
    ----------
    task_cross : array_like, shape (n_t,)
        Task covariances between the new fidelity and the existing ones.
    task_var : float
        Prior task variance of the new fidelity.

    Raises
    ------
    InvalidTaskCovarianceError
        If the expanded (n_t+1) task matrix is not PSD.
    """
    sigma = model.task.matrix
    n_t = model.task.n_tasks
    cross = np.asarray(task_cross, dtype=float).reshape(-1)
    if cross.size != n_t:
        raise ShapeError(f"task_cross must have {n_t} entries")
    task_var = float(task_var)

    expanded = np.zeros((n_t + 1, n_t + 1))
    expanded[:n_t, :n_t] = sigma
    expanded[:n_t, n_t] = cross
    expanded[n_t, :n_t] = cross
    expanded[n_t, n_t] = task_var
    eigs = np.linalg.eigvalsh(expanded)
    tol = 1e-10 * max(1.0, float(np.abs(np.diag(expanded)).max()))
    if eigs[0] < -tol:
        raise InvalidTaskCovarianceError(float(eigs[0]))

    contribution = scipy.linalg.cho_solve(
        (model.task.factor, True), cross, check_finite=False
    )
    ptv = task_var - float(cross @ contribution)
    ptv = max(ptv, 0.0)  # clamp roundoff on PSD boundary
    core = eval_core(model.kernel, model.dataset.x, model.dataset.x)
    return SyntheticTaskPosterior(
        contribution=contribution,
        task_variance=ptv,
        mean=model.dataset.y @ contribution,
        covariance=ptv * core,
    )
