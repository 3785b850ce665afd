import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from wishfisher import lops, model, symspace, wishart
from wishfisher.lops import PQOperator
from wishfisher.mcverify import McConfig, batch_means, summarize
from wishfisher.model import ModelParams
from wishfisher.suite import fd_errors, mixture_density

from conftest import spd_matrices, zmax

CONFIG = McConfig(samples=200_000)


def mc(fn, tag, config=CONFIG):
    return summarize(batch_means(fn, config, tag))


def test_scalar_density_values():
    params = ModelParams(1.0, [[1.0]])
    assert model.log_density(params, [0.0]) == pytest.approx(-1.0397207708399179, abs=1e-14)
    assert np.exp(model.log_density(params, [np.sqrt(2.0)])) == pytest.approx(0.125, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, np.sqrt(2.0), -2.5])
def test_scalar_density_against_mixture_integral(x):
    closed = np.exp(model.log_density(ModelParams(1.0, [[1.0]]), [x]))
    assert mixture_density(1.0, 1.0, x) == pytest.approx(closed, rel=1e-10)


def test_scalar_model_is_a_scaled_student_t():
    p, s = 1.7, 0.8
    xs = np.linspace(-5, 5, 11)
    ref = stats.t(df=2 * p, scale=1 / np.sqrt(p * s)).logpdf(xs)
    np.testing.assert_allclose(model.log_density(ModelParams(p, [[s]]), xs[:, None]), ref, atol=1e-12)


@pytest.mark.parametrize("p", [0.6, 1.0, 3.0])
def test_scalar_normalization_quadrature(p):
    params = ModelParams(p, [[0.7]])
    total, _ = integrate.quad(lambda x: np.exp(model.log_density(params, [x])), -np.inf, np.inf, epsrel=1e-12, limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 3])
def test_normalization_importance_sampling(n, rng):
    target = ModelParams(n / 2 + 1.5, symspace.random_spd(n, rng))
    proposal = ModelParams(target.p - 0.75, target.sigma)

    def fn(r, size):
        x = model.sample(proposal, r, size)
        return np.exp(model.log_density(target, x) - model.log_density(proposal, x))

    mean, se = mc(fn, 10 + n)
    assert abs(mean - 1.0) <= 3 * se


def test_scalar_sample_ks_against_quadrature_cdf():
    params = ModelParams(1.5, [[1.0]])
    draws = model.sample(params, np.random.default_rng(CONFIG.seed), 100_000)[:, 0]

    def cdf_quad(x):
        val, _ = integrate.quad(lambda t: np.exp(model.log_density(params, [t])), -np.inf, x, epsabs=1e-12)
        return val

    grid = np.linspace(-8, 8, 161)
    quad_cdf = np.array([cdf_quad(g) for g in grid])
    t_law = stats.t(df=3.0, scale=1 / np.sqrt(1.5))
    np.testing.assert_allclose(quad_cdf, t_law.cdf(grid), atol=1e-9)
    result = stats.kstest(draws, t_law.cdf)
    critical = stats.kstwo(len(draws)).isf(0.01)
    assert result.statistic < critical


def test_sample_reproducible_and_shaped():
    params = ModelParams(2.0, np.eye(3))
    a = model.sample(params, np.random.default_rng(1), 4)
    np.testing.assert_array_equal(a, model.sample(params, np.random.default_rng(1), 4))
    assert a.shape == (4, 3) and model.sample(params, np.random.default_rng(1)).shape == (3,)


def test_second_moment_tower_rule(rng):
    params = ModelParams(4.0, symspace.random_spd(2, rng))
    mean, se = mc(lambda r, size: (lambda x: x[:, :, None] * x[:, None, :])(model.sample(params, r, size)), 14)
    assert zmax(mean, se, symspace.inverse(params.sigma) / (params.p - 1.5)) <= 3


def test_score_at_origin(rng):
    params = ModelParams(2.0, symspace.random_spd(3, rng))
    np.testing.assert_allclose(model.score(params, np.zeros(3)).grad, 0.5 * np.linalg.inv(params.sigma), rtol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_score_finite_differences(n):
    rng = np.random.default_rng(n)
    params = ModelParams(n / 2 + 1.0, symspace.random_spd(n, rng))
    for _ in range(3):
        g_err, h_err = fd_errors(params, 2 * rng.standard_normal(n), rng)
        assert g_err < 1e-5
        assert h_err < 1e-4


def test_fisher_scalar_and_action():
    assert model.fisher_information(ModelParams(1.0, [[1.0]])).to_dense()[0, 0] == pytest.approx(0.2)
    for n, p in [(1, 1.0), (2, 2.0), (4, 3.5)]:
        out = model.fisher_information(ModelParams(p, np.eye(n))).apply(np.eye(n))
        np.testing.assert_allclose(out, (2 * p + 1 - n) / (2 * (2 * p + 3)) * np.eye(n), atol=1e-15)


def test_fisher_coefficients_do_not_depend_on_order():
    coeffs = {(model.fisher_information(ModelParams(2.5, np.eye(n))).a, model.fisher_information(ModelParams(2.5, np.eye(n))).b) for n in range(1, 6)}
    assert len(coeffs) == 1


def test_fisher_scalar_mc():
    params = ModelParams(1.0, [[1.0]])
    mean, se = mc(lambda r, size: model.score_coords(params, model.sample(params, r, size), False)[0][:, 0] ** 2, 15, CONFIG.scaled(1_000_000))
    assert abs(mean - 0.2) <= 3 * se


def test_fisher_mc_outer_and_hessian(rng):
    params = ModelParams(2.0, symspace.random_spd(2, rng))

    def fn(r, size):
        g, h = model.score_coords(params, model.sample(params, r, size))
        return np.stack([g[:, :, None] * g[:, None, :], -h], axis=1)

    mean, se = mc(fn, 16)
    ref = model.fisher_information(params).to_dense()
    assert zmax(mean[0], se[0], ref) <= 3
    assert zmax(mean[1], se[1], ref) <= 3


def test_score_has_mean_zero(rng):
    params = ModelParams(1.2, symspace.random_spd(3, rng))
    mean, se = mc(lambda r, size: model.score_coords(params, model.sample(params, r, size), False)[0], 17)
    assert zmax(mean, se, np.zeros(6)) <= 3


def test_j_scalar_value():
    assert model.j_closed_form(ModelParams(1.0, [[1.0]])).to_dense()[0, 0] == pytest.approx(0.8)


def test_j_scalar_mc():
    params = ModelParams(1.0, [[1.0]])
    mean, se = model.j_integral_check(params, 1_000_000, np.random.default_rng(CONFIG.seed), batches=100)
    assert abs(mean[0, 0] - 0.8) <= 3 * se[0, 0]


@given(spd_matrices(max_n=4), st.floats(0.01, 5.0))
def test_fisher_equals_half_congruence_minus_j(sigma, t):
    n = len(sigma)
    params = ModelParams((n - 1) / 2 + t, sigma)
    combined = 0.5 * PQOperator.P(np.linalg.inv(sigma)).to_dense() - (params.p + 0.5) / 4 * model.j_closed_form(params).to_dense()
    ref = model.fisher_information(params).to_dense()
    np.testing.assert_allclose(combined, ref, atol=1e-10 * np.abs(ref).max())


def test_j_transforms_with_base_point(rng):
    sigma = symspace.random_spd(3, rng)
    t = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    moved = ModelParams(2.0, t @ sigma @ t.T)
    # x' = t^{-T} x maps f_{p, sigma} onto f_{p, t sigma t^T}
    m = symspace.congruence_dense(np.linalg.inv(t).T)
    expected = m @ model.j_closed_form(ModelParams(2.0, sigma)).to_dense() @ m.T
    np.testing.assert_allclose(model.j_closed_form(moved).to_dense(), expected, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_fisher_inverse_composes_to_identity(n, rng):
    for p in ((n - 1) / 2 + 0.2, 2.0, 9.0):
        params = ModelParams(p, symspace.random_spd(n, rng))
        prod = model.fisher_information(params).to_dense() @ model.fisher_inverse(params).to_dense()
        assert np.linalg.norm(prod - np.eye(len(prod))) < 1e-10


def test_fisher_inverse_examples():
    assert model.fisher_inverse(ModelParams(1.0, [[1.0]])).to_dense()[0, 0] == pytest.approx(5.0)
    inv = model.fisher_inverse(ModelParams(2.0, np.eye(2)))
    assert (inv.a, inv.b) == pytest.approx((2.8, 2.8 / 3), rel=1e-14)


def test_jeffreys_examples():
    det = np.linalg.det(model.fisher_information(ModelParams(2.0, np.eye(2))).to_dense())
    assert det == pytest.approx(75 / 2744, rel=1e-13)
    assert np.exp(model.jeffreys_log_det(ModelParams(2.0, np.eye(2)))) == pytest.approx(75 / 2744, rel=1e-13)
    p, s = 1.3, 2.0
    assert np.exp(model.jeffreys_log_det(ModelParams(p, [[s]]))) == pytest.approx(p / (2 * p + 3) / s**2, rel=1e-13)


@given(spd_matrices(max_n=5), st.floats(0.05, 8.0))
def test_jeffreys_determinant_against_dense(sigma, t):
    n = len(sigma)
    params = ModelParams((n - 1) / 2 + t, sigma)
    sign, dense = np.linalg.slogdet(model.fisher_information(params).to_dense())
    assert sign > 0
    assert model.jeffreys_log_det(params) == pytest.approx(dense, abs=1e-9)


def test_jeffreys_density_is_power_of_det(rng):
    sigma = symspace.random_spd(3, rng)
    t = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    moved = t @ sigma @ t.T
    lhs = model.jeffreys_log_density(ModelParams(2.0, moved)) - model.jeffreys_log_density(ModelParams(2.0, sigma))
    assert lhs == pytest.approx(2.0 * (symspace.logdet(moved) - symspace.logdet(sigma)), rel=1e-12)


def test_posterior_examples():
    post = model.posterior(ModelParams(1.5, np.eye(2)), np.zeros(2))
    assert post.p == 2.0
    np.testing.assert_allclose(post.sigma, np.eye(2))
    post = model.posterior(ModelParams(1.0, [[1.0]]), [2.0])
    assert post.p == 1.5 and post.sigma[0, 0] == pytest.approx(1 / 3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bayes_identity(n, rng):
    for _ in range(100):
        params = ModelParams(n / 2 + rng.uniform(0.1, 3.0), symspace.random_spd(n, rng))
        u = wishart.sample(params.mixing, rng)
        x = 2 * rng.standard_normal(n)
        lhs = model.gaussian_log_density(u, x) + wishart.log_density(params.mixing, u) - model.log_density(params, x)
        assert lhs == pytest.approx(wishart.log_density(model.posterior(params, x), u), abs=1e-10)


def test_plain_gaussian_fisher_examples():
    np.testing.assert_allclose(model.plain_gaussian_fisher(np.eye(3)).to_dense(), 0.5 * np.eye(6))
    assert model.plain_gaussian_fisher([[2.0]]).to_dense()[0, 0] == pytest.approx(0.125)
    with pytest.raises(ValueError):
        model.plain_gaussian_fisher(np.eye(2), "other")


def test_plain_gaussian_scalar_finite_differences():
    # -E[d^2/du^2 log N(0, 1/u)(x)] = 1/(2u^2)
    u, h = 2.0, 1e-4
    second = (model.gaussian_log_density([[u + h]], [0.3]) - 2 * model.gaussian_log_density([[u]], [0.3]) + model.gaussian_log_density([[u - h]], [0.3])) / h**2
    assert -second == pytest.approx(0.125, rel=1e-6)


@pytest.mark.parametrize("kind", ["precision", "covariance"])
def test_plain_gaussian_mc(kind, rng):
    u = symspace.random_spd(2, rng)
    cov = np.linalg.inv(u) if kind == "precision" else u
    root = np.linalg.cholesky(cov)

    def fn(r, size):
        g = model.gaussian_score_coords(u, r.standard_normal((size, 2)) @ root.T, kind)
        return g[:, :, None] * g[:, None, :]

    mean, se = mc(fn, 18)
    assert zmax(mean, se, model.plain_gaussian_fisher(u, kind).to_dense()) <= 3


def test_dimension_checks():
    params = ModelParams(2.0, np.eye(2))
    with pytest.raises(symspace.DimensionError):
        model.log_density(params, np.zeros(3))
    with pytest.raises(symspace.DimensionError):
        model.score(params, np.zeros(3))
