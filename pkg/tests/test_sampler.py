"""Sampler tests: basis construction, variance heuristic, exact draws."""

import numpy as np
import pytest

from synthfid import corrbounds
from synthfid.data import FidelityDataset
from synthfid.errors import (
    DegenerateBasisError,
    HeuristicVarianceError,
    IllConditionedBasisError,
)
from synthfid.kernels import RbfKernel, TaskMatrix
from synthfid.mogp import MogpModel
from synthfid.sampler import (
    CovarianceTargets,
    SampleBasis,
    build_basis,
    draw,
    draw_from_basis,
    heuristic_variance,
    make_targets,
    solve_coefficients,
)


def _pearson_two_pass(a, b):
    """Scalar two-pass Pearson correlation, independent of numpy paths."""
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = sum((x - ma) ** 2 for x in a) ** 0.5
    db = sum((y - mb) ** 2 for y in b) ** 0.5
    return num / (da * db)


def _orthogonal_basis(stds=(2.0, 3.0, 0.5), n=64, seed=3):
    """Hand-built SampleBasis whose correlation matrix is the identity."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, len(stds))))
    q = q - q.mean(axis=0)
    q, _ = np.linalg.qr(q)  # re-orthogonalize after centering
    centered = q * (np.asarray(stds) * np.sqrt(n))
    expanded = centered + rng.normal(size=len(stds))
    means = expanded.mean(axis=0)
    centered = expanded - means
    cov = centered.T @ centered / n
    s = np.sqrt(np.diag(cov))
    corr = cov / np.outer(s, s)
    np.fill_diagonal(corr, 1.0)
    return SampleBasis(
        expanded=expanded,
        means=means,
        centered=centered,
        covariance=cov,
        stds=s,
        correlation=corr,
        noise_draw=np.zeros(n),
        seed=0,
        prior_draw="matrix",
        labels=tuple(f"b{i}" for i in range(len(stds))),
    )


class TestBuildBasis:
    def test_prior_column_std_rescale(self, liu_model):
        basis = build_basis(liu_model, seed=0)
        target = liu_model.dataset.y.std(axis=0).mean()
        assert basis.expanded[:, -1].std() == pytest.approx(target, abs=1e-10)

    def test_seed_changes_only_prior_column(self, liu_model):
        b1 = build_basis(liu_model, seed=0)
        b2 = build_basis(liu_model, seed=1)
        np.testing.assert_array_equal(b1.expanded[:, :2], b2.expanded[:, :2])
        assert not np.array_equal(b1.expanded[:, 2], b2.expanded[:, 2])

    def test_correlation_matches_two_pass_oracle(self, liu_model):
        basis = build_basis(liu_model, seed=4)
        m = basis.n_columns
        for i in range(m):
            for j in range(m):
                expected = _pearson_two_pass(
                    list(basis.expanded[:, i]), list(basis.expanded[:, j])
                )
                assert basis.correlation[i, j] == pytest.approx(expected, abs=1e-10)

    def test_centered_columns_have_zero_mean(self, liu_model):
        basis = build_basis(liu_model, seed=2)
        np.testing.assert_allclose(basis.centered.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(np.diag(basis.correlation), 1.0, atol=1e-10)

    def test_independent_of_task_matrix(self, liu_model):
        other = MogpModel(
            kernel=liu_model.kernel,
            task=TaskMatrix([[2.0, 0.0], [-1.5, 0.7]]),
            dataset=liu_model.dataset,
        )
        b1 = build_basis(liu_model, seed=5)
        b2 = build_basis(other, seed=5)
        np.testing.assert_array_equal(b1.expanded, b2.expanded)
        np.testing.assert_array_equal(b1.correlation, b2.correlation)

    def test_constant_fidelity_rejected(self):
        x = np.linspace(0, 1, 10)[:, None]
        y = np.column_stack([np.ones(10), np.sin(x[:, 0])])
        model = MogpModel(
            kernel=RbfKernel([0.2], 1.0, 0.0),
            task=TaskMatrix.identity(2),
            dataset=FidelityDataset(x, y),
        )
        with pytest.raises(DegenerateBasisError):
            build_basis(model, seed=0)

    def test_cholesky_mode_differs_but_same_std(self, liu_model):
        b1 = build_basis(liu_model, seed=3, prior_draw="matrix")
        b2 = build_basis(liu_model, seed=3, prior_draw="cholesky")
        assert not np.array_equal(b1.expanded[:, -1], b2.expanded[:, -1])
        assert b1.expanded[:, -1].std() == pytest.approx(
            b2.expanded[:, -1].std(), abs=1e-10
        )


class TestHeuristicVariance:
    def test_unit_target_on_orthogonal_basis_picks_matching_variance(self):
        basis = _orthogonal_basis()
        variances = np.diag(basis.covariance)
        for k in range(3):
            pc = np.zeros(3)
            pc[k] = 1.0
            weights, var = heuristic_variance(basis, pc)
            assert var == pytest.approx(variances[k], rel=1e-9)
            assert weights[k] == pytest.approx(1.0, abs=1e-9)

    def test_zero_target_gives_zero_variance(self, liu_model):
        basis = build_basis(liu_model, seed=0)
        weights, var = heuristic_variance(basis, np.zeros(3))
        assert var == 0.0
        np.testing.assert_array_equal(weights, 0.0)
        with pytest.raises(HeuristicVarianceError):
            make_targets(basis, np.zeros(3))

    def test_matches_independent_loop_trace(self, liu_model):
        # independent re-implementation with explicit dot products
        basis = build_basis(liu_model, seed=6)
        rng = np.random.default_rng(0)
        pc_orig = rng.uniform(-0.5, 0.5, size=3)
        corr = [list(row) for row in basis.correlation]
        m = 3
        pc = list(pc_orig)
        w = [0.0] * m
        v = [0.0] * m
        for _ in range(m):
            proj = sum(p * vi for p, vi in zip(pc, v))
            pc = [p - proj * vi for p, vi in zip(pc, v)]
            overlaps = [sum(ci * pi for ci, pi in zip(row, pc)) for row in corr]
            best = max(range(m), key=lambda i: (overlaps[i], -i))
            w[best] += overlaps[best]
            v = corr[best]
        expected = sum(
            wi * var for wi, var in zip(w, np.diag(basis.covariance))
        )
        weights, var = heuristic_variance(basis, pc_orig)
        np.testing.assert_allclose(weights, w, atol=1e-12)
        assert var == pytest.approx(expected, abs=1e-12)


class TestSolveCoefficients:
    def test_diagonal_covariance_closed_form(self):
        basis = _orthogonal_basis()
        pc = np.array([0.4, -0.2, 0.1])
        targets = make_targets(basis, pc)
        c = solve_coefficients(basis, targets)
        expected = targets.covariances / np.diag(basis.covariance)
        np.testing.assert_allclose(c, expected, atol=1e-10)

    def test_covariance_column_reproduces_basis_vector(self, liu_model):
        basis = build_basis(liu_model, seed=1)
        k = 0
        targets = CovarianceTargets(
            correlations=basis.correlation[:, k],
            weights=np.zeros(3),
            variance=float(basis.covariance[k, k]),
            covariances=basis.covariance[:, k].copy(),
        )
        c = solve_coefficients(basis, targets)
        expected = np.zeros(3)
        expected[k] = 1.0
        np.testing.assert_allclose(c, expected, atol=1e-9)

    def test_residual_small(self, liu_model):
        basis = build_basis(liu_model, seed=2)
        rng = np.random.default_rng(5)
        spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 11)
        targets = make_targets(basis, spec.values)
        c = solve_coefficients(basis, targets)
        residual = basis.covariance @ c - targets.covariances
        assert np.max(np.abs(residual)) <= 1e-9

    def test_solve_linearity(self, liu_model):
        basis = build_basis(liu_model, seed=2)
        spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 3)
        targets = make_targets(basis, spec.values)
        doubled = CovarianceTargets(
            correlations=targets.correlations,
            weights=targets.weights,
            variance=4.0 * targets.variance,
            covariances=2.0 * targets.covariances,
        )
        c1 = solve_coefficients(basis, targets)
        c2 = solve_coefficients(basis, doubled)
        np.testing.assert_allclose(c2, 2.0 * c1, rtol=1e-12)

    def test_singular_covariance_refused(self):
        basis = _orthogonal_basis()
        degenerate = SampleBasis(
            expanded=np.column_stack([basis.expanded, basis.expanded[:, -1]]),
            means=np.append(basis.means, basis.means[-1]),
            centered=np.column_stack([basis.centered, basis.centered[:, -1]]),
            covariance=np.pad(basis.covariance, ((0, 1), (0, 1)), mode="edge"),
            stds=np.append(basis.stds, basis.stds[-1]),
            correlation=np.pad(basis.correlation, ((0, 1), (0, 1)), mode="edge"),
            noise_draw=basis.noise_draw,
            seed=0,
            prior_draw="matrix",
            labels=basis.labels + ("dup",),
        )
        targets = CovarianceTargets(
            correlations=np.zeros(4),
            weights=np.zeros(4),
            variance=1.0,
            covariances=np.ones(4),
        )
        with pytest.raises(IllConditionedBasisError):
            solve_coefficients(degenerate, targets)


class TestDraw:
    def test_full_correlation_to_ground_truth(self, liu_model):
        basis = build_basis(liu_model, seed=0)
        session = corrbounds.begin(basis.correlation)
        # 100% correlation to the low fidelity pins every later entry
        session.choose(1.0)
        while session.remaining:
            lo, hi = session.bounds_for_next()
            session.choose(0.5 * (lo + hi))
        spec = session.finalize()
        sample = draw_from_basis(liu_model, basis, spec)
        assert sample.achieved[0] == pytest.approx(1.0, abs=1e-6)
        # affine-positive transform of the targeted column
        slope = np.polyfit(basis.expanded[:, 0], sample.values, 1)[0]
        assert slope > 0

    @pytest.mark.parametrize("spec_seed", range(25))
    def test_random_specs_achieve_requested_exactly(self, liu_model, spec_seed):
        basis = build_basis(liu_model, seed=spec_seed)
        spec = corrbounds.sample_random(
            corrbounds.begin(basis.correlation), 1000 + spec_seed
        )
        sample = draw_from_basis(liu_model, basis, spec)
        assert np.max(np.abs(sample.achieved - spec.values)) <= 1e-6

    def test_reconstruction_identity(self, liu_model):
        basis = build_basis(liu_model, seed=2)
        spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 9)
        sample = draw_from_basis(liu_model, basis, spec)
        np.testing.assert_allclose(
            sample.values, basis.expanded @ sample.coefficients, atol=1e-10
        )

    def test_determinism(self, liu_model):
        basis = build_basis(liu_model, seed=7)
        spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 21)
        s1 = draw(liu_model, spec, seed=7)
        s2 = draw(liu_model, spec, seed=7)
        np.testing.assert_array_equal(s1.values, s2.values)
        np.testing.assert_array_equal(s1.coefficients, s2.coefficients)

    def test_implied_task_covariances(self, liu_model):
        basis = build_basis(liu_model, seed=3)
        spec = corrbounds.sample_random(corrbounds.begin(basis.correlation), 4)
        sample = draw_from_basis(liu_model, basis, spec)
        np.testing.assert_allclose(
            sample.task_covariances,
            liu_model.task.matrix @ sample.coefficients[:2],
            atol=1e-12,
        )

    def test_mean_shift_invariance(self, liu_model):
        shifted_y = liu_model.dataset.y.copy()
        shifted_y[:, 0] += 10.0
        shifted = MogpModel(
            kernel=liu_model.kernel,
            task=liu_model.task,
            dataset=FidelityDataset(
                liu_model.dataset.x, shifted_y, liu_model.dataset.labels
            ),
        )
        b1 = build_basis(liu_model, seed=11)
        b2 = build_basis(shifted, seed=11)
        spec1 = corrbounds.sample_random(corrbounds.begin(b1.correlation), 2)
        spec2 = corrbounds.sample_random(corrbounds.begin(b2.correlation), 2)
        np.testing.assert_allclose(spec1.values, spec2.values, atol=1e-10)
        s1 = draw_from_basis(liu_model, b1, spec1)
        s2 = draw_from_basis(shifted, b2, spec2)
        # the sample shifts by a constant; correlations are untouched
        delta = s2.values - s1.values
        np.testing.assert_allclose(delta, delta[0], atol=1e-9)
        np.testing.assert_allclose(s1.achieved, s2.achieved, atol=1e-10)

    def test_basis_mismatch_rejected(self, liu_model):
        from synthfid.errors import BasisMismatchError

        b1 = build_basis(liu_model, seed=0)
        b2 = build_basis(liu_model, seed=1)
        spec = corrbounds.sample_random(corrbounds.begin(b1.correlation), 5)
        with pytest.raises(BasisMismatchError):
            draw_from_basis(liu_model, b2, spec)

    def test_negative_leaning_targets_still_draw(self, liu_model):
        # anticorrelated targets give a negative raw heuristic value; the
        # draw uses its magnitude and still hits the targets exactly
        basis = build_basis(liu_model, seed=0)
        session = corrbounds.begin(basis.correlation)
        lo, _ = session.bounds_for_next()
        session.choose(-0.9)
        while session.remaining > 1:
            blo, bhi = session.bounds_for_next()
            session.choose(max(blo, min(bhi, -0.2)))
        blo, bhi = session.bounds_for_next()
        session.choose(blo)
        spec = session.finalize()
        weights, raw = heuristic_variance(basis, spec.values)
        sample = draw_from_basis(liu_model, basis, spec)
        assert sample.heuristic_variance == pytest.approx(abs(raw))
        assert np.max(np.abs(sample.achieved - spec.values)) <= 1e-6
