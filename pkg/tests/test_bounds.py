import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from wishfisher import bounds, model, symspace, wishart
from wishfisher.bounds import VanTreesProblem
from wishfisher.lops import PQOperator
from wishfisher.mcverify import EstimatorSpec, McConfig, batch_means, simulate_estimator, summarize, van_trees_joint_matrix
from wishfisher.model import ModelParams
from wishfisher.wishart import ShapeDomainError, WishartParams

from conftest import spd_matrices, zmax

CONFIG = McConfig(samples=200_000)


def mc(fn, tag, config=CONFIG):
    return summarize(batch_means(fn, config, tag))


def scalar_problem(k=1):
    return VanTreesProblem(1.0, WishartParams(4.0, [[1.0]]), k)


def test_problem_thresholds():
    with pytest.raises(ShapeDomainError, match=r"p > \(n\+3\)/2"):
        VanTreesProblem(1.0, WishartParams(2.0, [[1.0]]))
    with pytest.raises(ShapeDomainError):
        VanTreesProblem(0.4, WishartParams(4.0, np.eye(2)))
    with pytest.raises(ValueError):
        VanTreesProblem(1.0, WishartParams(4.0, [[1.0]]), 0)


def test_cramer_rao_gap_examples(rng):
    params = ModelParams(2.0, symspace.random_spd(2, rng))
    inv = model.fisher_inverse(params).to_dense()
    assert abs(bounds.cramer_rao_gap(params, inv)) < 1e-10
    assert bounds.cramer_rao_gap(params, inv + 0.1 * np.eye(3)) == pytest.approx(0.1, abs=1e-10)


def test_cramer_rao_for_an_unbiased_estimator():
    # with k = 5 observations, prod |x_i|^(-2/5) / c is unbiased for sigma (n = 1)
    p, k = 3.0, 5
    params = ModelParams(p, [[1.0]])
    r = 2 / k
    log_c = k * (gammaln(p + r / 2) - gammaln(p) - r / 2 * np.log(2) + gammaln((1 - r) / 2) - gammaln(0.5))

    def fn(rng, size):
        x = model.sample(params, rng, size * k)[:, 0].reshape(size, k)
        est = np.exp(-r * np.log(np.abs(x)).sum(axis=1) - log_c)
        return np.stack([est, (est - 1.0) ** 2], axis=1)

    mean, se = mc(fn, 30)
    assert abs(mean[0] - 1.0) <= 3 * se[0]
    assert bounds.cramer_rao_gap(params, [[mean[1]]], multiplicity=k) >= -3 * se[1]


def test_density_information_scalar():
    info = bounds.density_information(WishartParams(4.0, [[1.0]]))
    assert info.to_dense()[0, 0] == pytest.approx(0.5)


def test_density_information_mc():
    prior = WishartParams(5.0, np.array([[1.0, 0.3], [0.3, 0.6]]))

    def fn(rng, size):
        g = symspace.half_vec(bounds.prior_score(prior, wishart.sample(prior, rng, size)))
        return g[:, :, None] * g[:, None, :]

    mean, se = mc(fn, 31)
    assert zmax(mean, se, bounds.density_information(prior).to_dense()) <= 3


@given(spd_matrices(max_n=4), st.floats(0.05, 6.0))
def test_density_information_equals_minus_expected_hessian(sigma1, t):
    n = len(sigma1)
    prior = WishartParams((n + 3) / 2 + t, sigma1)
    a1 = prior.p - (n + 1) / 2
    _, _, congr = wishart.inverse_moments(prior)
    ref = (a1 * congr).to_dense()
    np.testing.assert_allclose(bounds.density_information(prior).to_dense(), ref, rtol=1e-10, atol=1e-14)


def test_prior_hessian_matches_score_differences(rng):
    prior = WishartParams(4.0, symspace.random_spd(2, rng))
    u = wishart.sample(prior, rng)
    d = symspace.sym(rng.standard_normal((2, 2)))
    h = 1e-6
    fd = (bounds.prior_score(prior, u + h * d) - bounds.prior_score(prior, u - h * d)) / (2 * h)
    np.testing.assert_allclose(fd, bounds.prior_hessian(prior, u).apply(d), rtol=1e-6, atol=1e-8)


def test_averaged_fisher_scalar_and_linearity():
    assert bounds.averaged_fisher(scalar_problem()).to_dense()[0, 0] == pytest.approx(1 / 30)
    prior = WishartParams(5.0, np.eye(2))
    one = bounds.averaged_fisher(VanTreesProblem(2.0, prior, 1)).to_dense()
    two = bounds.averaged_fisher(VanTreesProblem(2.0, prior, 2)).to_dense()
    np.testing.assert_allclose(two, 2 * one)


def test_averaged_fisher_mc():
    problem = VanTreesProblem(2.0, WishartParams(5.0, np.array([[1.0, -0.2], [-0.2, 0.8]])))

    def fn(rng, size):
        u = wishart.sample(problem.prior, rng, size)
        return np.stack([model.fisher_information(ModelParams(2.0, s)).to_dense() for s in u])

    mean, se = mc(fn, 32, CONFIG.scaled(50_000))
    assert zmax(mean, se, bounds.averaged_fisher(problem).to_dense()) <= 3


def test_van_trees_scalar_case():
    report = bounds.van_trees_bound(scalar_problem())
    assert report.A == pytest.approx(7 / 15, rel=1e-14)
    assert report.B_signed == pytest.approx(1 / 15, rel=1e-14)
    assert report.dense_bound[0, 0] == pytest.approx(15 / 8, rel=1e-14)
    assert np.linalg.inv(report.information.to_dense())[0, 0] == pytest.approx(1.875)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 4])
def test_van_trees_closed_form_against_dense(n, k, rng):
    for p in ((n - 1) / 2 + 0.3, 2.0, 6.0):
        for p1 in ((n + 3) / 2 + 0.2, 5.0, 12.0):
            problem = VanTreesProblem(p, WishartParams(p1, symspace.random_spd(n, rng)), k)
            report = bounds.van_trees_bound(problem)
            numeric = np.linalg.inv(report.information.to_dense())
            assert np.linalg.norm(report.dense_bound - numeric) <= 1e-10 * np.linalg.norm(numeric)
            assert report.bound.is_posdef()


def test_van_trees_bound_transforms_with_base_point(rng):
    sigma1 = symspace.random_spd(2, rng)
    t = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    base = bounds.van_trees_bound(VanTreesProblem(1.5, WishartParams(6.0, sigma1))).dense_bound
    moved = bounds.van_trees_bound(VanTreesProblem(1.5, WishartParams(6.0, t @ sigma1 @ t.T))).dense_bound
    m = symspace.congruence_dense(t)
    np.testing.assert_allclose(moved, m @ base @ m.T, rtol=1e-10, atol=1e-12)


def test_bound_decreases_with_observations():
    prior = WishartParams(6.0, np.eye(2))
    dense = [bounds.van_trees_bound(VanTreesProblem(2.0, prior, k)).dense_bound for k in (1, 2, 8)]
    assert bounds.min_gap(dense[0], dense[1]) > 0
    assert bounds.min_gap(dense[1], dense[2]) > 0


def test_loewner_gap_examples(rng):
    bound = bounds.van_trees_bound(VanTreesProblem(2.0, WishartParams(5.0, symspace.random_spd(2, rng)))).bound
    assert abs(bounds.loewner_gap(bound.to_dense(), bound)) < 1e-12
    assert bounds.loewner_gap(bound.to_dense() + 0.01 * np.eye(3), bound) == pytest.approx(0.01, abs=1e-12)
    with pytest.raises(symspace.DimensionError):
        bounds.loewner_gap(np.eye(2), bound)


def test_report_json():
    obj = json.loads(json.dumps(bounds.van_trees_bound(scalar_problem()).to_json({"x": 1})))
    assert set(obj) == {"A", "B_signed", "bound", "dense_bound", "min_eig_checks"}
    assert PQOperator.from_json(obj["bound"]).to_dense()[0, 0] == pytest.approx(1.875)


def test_boundary_term_vanishes():
    prior = WishartParams(4.0, np.eye(2))  # p1 = (n+3)/2 + 1.5
    sizes = []
    for t in (1.0, 1e-2, 1e-4, 1e-8):
        u = np.diag([t, 1.0])
        sizes.append(np.linalg.norm(bounds.prior_score(prior, u)) * np.exp(wishart.log_density(prior, u)))
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] < 1e-10 * sizes[0]


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["constant", "clipped"])
def test_joint_matrix_blocks(kind):
    problem = VanTreesProblem(3.0, WishartParams(6.0, np.array([[1.0, 0.25], [0.25, 0.5]])), 5)
    spec = EstimatorSpec.default_constant(problem) if kind == "constant" else EstimatorSpec.default_clipped(problem)
    est = van_trees_joint_matrix(problem, spec, McConfig(samples=1_000_000), tag=33)
    assert zmax(est.cross_block, est.block_se("cross"), np.eye(3)) <= 3
    assert zmax(est.d_block, est.block_se("d"), bounds.van_trees_information(problem).to_dense()) <= 3
    assert est.min_eig >= -3 * est.min_eig_se
    c, diag = simulate_estimator(problem, spec, McConfig(samples=100_000), tag=34)
    assert diag["gap"] >= -3 * diag["gap_se"] and diag["passed"]
