"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test name carries the criterion number; a summary line per criterion
is printed at the end of the run (see conftest).
"""

import json
import math
import time

import numpy as np
import pytest

from synthfid import archive, benchmarks, corrbounds, mogp, sampler
from synthfid.cli import main
from synthfid.data import FidelityDataset
from synthfid.kernels import RbfKernel, TaskMatrix, eval_core
from synthfid.mogp import MogpModel, fit, log_marginal_likelihood, posterior

FAST_FIT = mogp.FitConfig(
    kernel="rbf", restarts=1, max_iter=15, seed=0, noise="shared",
    gradient="analytic",
)


def _rbf_scalar(a, b, ls, sv):
    sq = sum(((ai - bi) / li) ** 2 for ai, bi, li in zip(a, b, ls))
    return sv * math.exp(-0.5 * sq)


def _random_correlation(m, seed, boost=0.5):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, m + 2))
    s = a @ a.T + boost * np.eye(m)
    d = np.sqrt(np.diag(s))
    c = s / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    return c


def test_c1_correlation_exactness():
    """Liu (50 pts) and Currin (20x20): 100 random specs each, exact to 1e-6,
    under 60 s total."""
    start = time.perf_counter()
    worst = 0.0
    for name, points in (("liu", 50), ("currin", 20)):
        data = benchmarks.grid(benchmarks.get_pair(name), points)
        model = fit(data, FAST_FIT)
        for i in range(100):
            basis = sampler.build_basis(model, seed=i)
            spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), i)
            sample = sampler.draw_from_basis(model, basis, spec)
            err = float(np.max(np.abs(sample.achieved - spec.values)))
            worst = max(worst, err)
            assert err <= 1e-6, f"{name} seed {i}: correlation error {err:.3e}"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.1f} s (target < 60 s)"


def test_c2_synthetic_posterior_oracle_equivalence():
    """Compact synthetic-task posterior matches the dense augmented-domain GP
    to 1e-8 absolute on 50 random instances (n_x <= 20, n_t in {1,2,3})."""
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n_t = int(rng.integers(1, 4))
        n_x = int(rng.integers(5, 21))
        x = ((np.arange(n_x) + rng.uniform(0.2, 0.8, n_x)) / n_x)[:, None]
        ls = [float(rng.uniform(0.03, 0.08))]
        sv = float(rng.uniform(0.5, 2.0))
        b = rng.normal(size=(n_t + 1, n_t + 1))
        expanded = b @ b.T + (n_t + 1) * np.eye(n_t + 1)
        sigma = expanded[:n_t, :n_t]
        cross = expanded[:n_t, n_t]
        var = expanded[n_t, n_t]
        y = rng.normal(size=(n_x, n_t))
        model = MogpModel(
            kernel=RbfKernel(ls, sv, 0.0),
            task=TaskMatrix.from_matrix(sigma),
            dataset=FidelityDataset(x, y),
        )
        got = mogp.synthetic_task_posterior(model, cross, var)

        big = np.empty((n_t * n_x, n_t * n_x))
        for k in range(n_t):
            for l in range(n_t):
                for i in range(n_x):
                    for j in range(n_x):
                        big[k * n_x + i, l * n_x + j] = sigma[k, l] * _rbf_scalar(
                            x[i], x[j], ls, sv
                        )
        k_star = np.empty((n_t * n_x, n_x))
        for l in range(n_t):
            for i in range(n_x):
                for j in range(n_x):
                    k_star[l * n_x + i, j] = cross[l] * _rbf_scalar(x[i], x[j], ls, sv)
        k_ss = np.empty((n_x, n_x))
        for i in range(n_x):
            for j in range(n_x):
                k_ss[i, j] = var * _rbf_scalar(x[i], x[j], ls, sv)
        yv = y.T.reshape(-1)
        mean = k_star.T @ np.linalg.solve(big, yv)
        cov = k_ss - k_star.T @ np.linalg.solve(big, k_star)
        assert np.max(np.abs(got.mean - mean)) <= 1e-8
        assert np.max(np.abs(got.covariance - cov)) <= 1e-8


def test_c3_bounds_soundness_and_completeness():
    """1000 in-bounds sequences finalize PSD (min eig >= -1e-8); 1000
    perturbations 1e-3 beyond an endpoint all fail the eigenvalue oracle."""
    rng = np.random.default_rng(0)

    # soundness
    for trial in range(1000):
        m = 2 + trial % 4  # n_t in {1, 2, 3, 4}
        c = _random_correlation(m, 10_000 + trial)
        session = corrbounds.begin(c)
        while session.remaining:
            lo, hi = session.bounds_for_next()
            session.choose(float(rng.uniform(lo, hi)))
        spec = session.finalize()
        assert spec.min_eigenvalue() >= -1e-8

    # completeness
    for trial in range(1000):
        m = 2 + trial % 4
        c = _random_correlation(m, 20_000 + trial)
        session = corrbounds.begin(c)
        chosen = []
        stop = int(rng.integers(0, m))
        for _ in range(stop):
            lo, hi = session.bounds_for_next()
            v = float(rng.uniform(lo, hi))
            session.choose(v)
            chosen.append(v)
        lo, hi = session.bounds_for_next()
        bad = hi + 1e-3 if rng.integers(2) else lo - 1e-3
        k = len(chosen)
        partial = np.empty((k + 2, k + 2))
        partial[: k + 1, : k + 1] = c[: k + 1, : k + 1]
        partial[: k + 1, k + 1] = chosen + [bad]
        partial[k + 1, : k + 1] = chosen + [bad]
        partial[k + 1, k + 1] = 1.0
        assert np.linalg.eigvalsh(partial)[0] < -1e-8


def test_c4_heuristic_fixed_point():
    """Orthogonalized basis (C = I by construction): pc = e_k gives the
    matching column variance to 1e-9; correlated bases report both values."""
    rng = np.random.default_rng(12)
    n, stds = 80, np.array([2.0, 3.0, 0.5])
    q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
    q = q - q.mean(axis=0)
    q, _ = np.linalg.qr(q)
    centered = q * (stds * np.sqrt(n))
    expanded = centered + rng.normal(size=3)
    means = expanded.mean(axis=0)
    centered = expanded - means
    cov = centered.T @ centered / n
    s = np.sqrt(np.diag(cov))
    corr = cov / np.outer(s, s)
    np.fill_diagonal(corr, 1.0)
    assert np.max(np.abs(corr - np.eye(3))) <= 1e-10  # orthogonal by construction
    basis = sampler.SampleBasis(
        expanded=expanded, means=means, centered=centered, covariance=cov,
        stds=s, correlation=corr, noise_draw=np.zeros(n), seed=0,
        prior_draw="matrix", labels=("b0", "b1", "b2"),
    )
    for k in range(3):
        pc = np.zeros(3)
        pc[k] = 1.0
        _, var = sampler.heuristic_variance(basis, pc)
        assert abs(var - cov[k, k]) <= 1e-9

    # correlated basis: the sample records both values, no equality asserted
    data = benchmarks.grid(benchmarks.get_pair("liu"), 50)
    emp = np.cov(data.y, rowvar=False, bias=True)
    model = MogpModel(
        kernel=RbfKernel([0.04], 1.0, 0.0),
        task=TaskMatrix.from_matrix(emp + 1e-8 * np.eye(2)),
        dataset=data,
    )
    basis = sampler.build_basis(model, seed=0)
    spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 1)
    sample = sampler.draw_from_basis(model, basis, spec)
    assert sample.heuristic_variance > 0
    assert np.isfinite(sample.realized_variance)


def test_c5_fit_sanity_on_known_gp():
    """Data from a known RBF GP (n_x = 50, 1-d): fitted LML beats the LML at
    the generating hyperparameters minus 1e-6; noise-free interpolation error
    at the training points is at most 1e-6.

    The generating lengthscale (0.03 on a 50-point unit grid) keeps the
    noise-free kernel matrix well conditioned; smoother draws push the
    interpolation identity against the jitter floor regardless of fit
    quality.
    """
    rng = np.random.default_rng(77)
    n = 50
    x = np.linspace(0, 1, n)[:, None]
    true_kernel = RbfKernel(lengthscales=[0.03], signal_variance=1.0,
                            noise_variance=0.0)
    cov = eval_core(true_kernel, x, x) + 1e-12 * np.eye(n)
    y = np.linalg.cholesky(cov) @ rng.standard_normal(n)
    data = FidelityDataset(x, y[:, None])

    config = mogp.FitConfig(
        kernel="rbf", restarts=8, max_iter=80, seed=1, noise=0.0,
        gradient="analytic",
    )
    model = fit(data, config)
    true_lml = log_marginal_likelihood(data, true_kernel, TaskMatrix.identity(1))
    assert model.lml >= true_lml - 1e-6

    result = posterior(model, x)
    assert np.max(np.abs(result.means[:, 0] - y)) <= 1e-6


def test_c6_bench_workflow_reproduction(tmp_path):
    """bench liu and bench currin run end to end with the spectral mixture
    (Q = 4) default, emitting six synthetic samples with distinct requests."""
    for name, extra in (
        ("liu", ["--restarts", "2", "--max-iter", "40"]),
        ("currin", ["--restarts", "1", "--max-iter", "20"]),
    ):
        out = tmp_path / name
        code = main([
            "bench", name, "--out-dir", str(out), "--seed", "0",
            "--gradient", "analytic", *extra,
        ])
        assert code == 0, f"bench {name} failed"
        model = archive.load_model(out / "model.json")
        assert model.kernel.n_mixtures == 4  # spectral mixture, Q = 4
        requested = []
        for seed in range(6):
            report = json.loads((out / f"report_s{seed}.json").read_text())
            err = np.abs(
                np.array(report["achieved"]) - np.array(report["requested"])
            ).max()
            assert err <= 1e-6
            requested.append(tuple(report["requested"]))
        assert len(set(requested)) == 6  # six distinct correlation requests
        header = (out / "plot_data.csv").read_text().splitlines()[0].split(",")
        assert header[-6:] == [f"s{i}" for i in range(6)]


def test_c7_byte_identical_determinism(tmp_path):
    """Any command repeated with identical config and seed writes byte-identical
    files."""
    data = benchmarks.grid(benchmarks.get_pair("liu"), 30)
    from synthfid.data import write_csv

    csv = tmp_path / "liu30.csv"
    write_csv(data, csv)

    args = ["--kernel", "rbf", "--restarts", "2", "--max-iter", "20",
            "--gradient", "analytic", "--seed", "4"]
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    assert main(["fit", str(csv), "--out", str(m1), *args]) == 0
    assert main(["fit", str(csv), "--out", str(m2), *args]) == 0
    assert m1.read_bytes() == m2.read_bytes()

    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    for d in (d1, d2):
        assert main([
            "sample", str(m1), "--out-dir", str(d), "--random", "3", "--seed", "9",
        ]) == 0
    for sub in sorted(p.name for p in d1.iterdir()):
        assert (d1 / sub).read_bytes() == (d2 / sub).read_bytes(), sub
