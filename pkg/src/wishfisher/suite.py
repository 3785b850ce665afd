"""
Catalogue of verification checks.

Each check compares a closed form against an independent route (dense linear
algebra, quadrature, finite differences or Monte Carlo) and returns a
:class:`CheckResult`.  Monte Carlo checks report the largest entrywise
``|estimate - closed form| / se`` over the distinct entries; Loewner checks report
a smallest eigenvalue in standard-error units.  Because a suite compares
hundreds of entries at once, the pass threshold is the Bonferroni-corrected
level :func:`family_z_tolerance` (about 4.8 with 100 batches) rather than a
flat 3, so a changed seed does not flip verdicts by chance.  Each check also
records how many entries lie beyond 3 standard errors.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from . import bounds, lops, model, symspace, wishart
from .bounds import VanTreesProblem
from .lops import PQOperator
from .mcverify import (
    EstimatorSpec,
    McConfig,
    batch_means,
    min_eig_with_se,
    summarize,
    van_trees_joint_matrix,
)
from .model import ModelParams
from .wishart import WishartParams

Z_TOL = 3.0
# two-sided rate of a single 3-sigma comparison
FAMILY_RATE = 0.0027
# upper bound on the entries compared by all Monte Carlo checks together
SUITE_COMPARISONS = 500
FAST_SAMPLES = 20_000
FULL_SAMPLES = 1_000_000


@dataclass
class CheckResult:
    check_id: str
    paper_ref: str
    status: str
    measured: float
    tolerance: float
    comparison: str
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        out = asdict(self)
        out["measured"] = _jsonable(self.measured)
        out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _at_most(measured, tolerance, **details):
    ok = bool(np.isfinite(measured) and measured <= tolerance)
    return measured, tolerance, "<=", ok, details


def _at_least(measured, tolerance, **details):
    ok = bool(np.isfinite(measured) and measured >= tolerance)
    return measured, tolerance, ">=", ok, details


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def zvalues(mean, se, ref) -> np.ndarray:
    """Entrywise ``|mean - ref| / se`` over the distinct entries.

    A symmetric estimate is compared on its upper triangle only; a zero
    standard error gives ``z = 0`` on exact agreement and ``inf`` otherwise.
    """
    mean, se, ref = (np.asarray(a, dtype=float) for a in (mean, se, ref))
    if mean.ndim == 2 and mean.shape[0] == mean.shape[1] and np.array_equal(mean, mean.T):
        iu = np.triu_indices(mean.shape[0])
        mean, se, ref = mean[iu], se[iu], ref[iu]
    diff = np.abs(mean - ref).ravel()
    se = se.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))


def zscore(mean, se, ref) -> float:
    """Largest entry of :func:`zvalues`."""
    return float(np.max(zvalues(mean, se, ref)))


def family_z_tolerance(batches: int, comparisons: int = SUITE_COMPARISONS, rate: float = FAMILY_RATE) -> float:
    """Per-entry threshold keeping the chance of any false alarm at ``rate``.

    Bonferroni over ``comparisons`` two-sided tests, each a t statistic with
    ``batches - 1`` degrees of freedom.  With one comparison and many batches
    this is the familiar 3 standard errors.
    """
    return float(stats.t(df=batches - 1).isf(rate / 2 / comparisons))


class Tally:
    """Collects entrywise z-values of one Monte Carlo check."""

    def __init__(self, ctx: "SuiteContext"):
        self.ctx = ctx
        self.count = 0
        self.over_3se = 0

    def add(self, mean, se, ref) -> float:
        z = zvalues(mean, se, ref)
        self.count += z.size
        self.over_3se += int(np.sum(z > Z_TOL))
        return float(np.max(z))

    def result(self, worst: float, **details):
        return _at_most(worst, self.ctx.z_tol, entries=self.count, entries_over_3se=self.over_3se, **details)


def _sigma(n: int, seed: int) -> np.ndarray:
    return symspace.random_spd(n, np.random.default_rng([seed, n]))


# -- deterministic algebra -------------------------------------------------

def check_half_vec_isometry(ctx):
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        u = symspace.sym(rng.standard_normal((n, n)))
        c = symspace.half_vec(u)
        worst = max(worst, abs(c @ c - symspace.inner(u, u)) / max(symspace.inner(u, u), 1e-300))
        worst = max(worst, _rel(symspace.half_unvec(c, n), u))
    return _at_most(worst, 1e-12)


def check_rank_one(ctx):
    rng = np.random.default_rng(ctx.seed + 1)
    worst, wrong = 0.0, 0
    for i in range(100):
        a = rng.standard_normal(int(rng.integers(1, 7)))
        s = a @ a
        c = rng.uniform(0.05, 0.95) / s if i % 2 == 0 else rng.uniform(1.05, 3.0) / s
        dense = symspace.rank_one_dense(a, c)
        worst = max(worst, abs(np.linalg.det(dense) - symspace.rank_one_det(a, c)))
        inv = np.eye(a.size) + symspace.rank_one_update_inverse(a, c) * np.outer(a, a)
        worst = max(worst, float(np.max(np.abs(inv @ dense - np.eye(a.size)))))
        lowest = np.linalg.eigvalsh(dense)[0]
        wrong += (c * s < 1) != (lowest > 0)
    return _at_most(worst if wrong == 0 else np.inf, 1e-10, verdict_mismatches=wrong)


def random_pq(rng, n: int) -> PQOperator:
    u = symspace.random_spd(n, rng)
    a = rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])
    c = rng.uniform(-2.0, 2.0) / n
    return PQOperator(u, a, -a * c)


def check_lops_algebra(ctx):
    rng = np.random.default_rng(ctx.seed + 2)
    count = 500 if ctx.full else 100
    worst, wrong = 0.0, 0
    for _ in range(count):
        n = int(rng.integers(1, 5))
        op = random_pq(rng, n)
        dense = op.to_dense()
        inv = lops.invert(op).to_dense()
        worst = max(worst, _rel(inv, np.linalg.inv(dense)))
        worst = max(worst, abs(lops.det(op) - np.linalg.det(dense)) / abs(np.linalg.det(dense)))
        lowest = np.linalg.eigvalsh(dense)[0]
        wrong += lops.is_posdef(op) != (lowest > 0)
    undetected = 0
    for n in range(1, 5):
        u = symspace.random_spd(n, rng)
        a = rng.uniform(0.5, 2.0)
        try:
            lops.invert(PQOperator(u, a, -a / n))
            undetected += 1
        except symspace.SingularOperatorError:
            pass
    measured = worst if wrong == 0 and undetected == 0 else np.inf
    return _at_most(measured, 1e-9, verdict_mismatches=wrong, undetected_singular=undetected)


def check_conjugation(ctx):
    rng = np.random.default_rng(ctx.seed + 3)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        s = symspace.random_spd(n, rng)
        c = rng.uniform(-1, 1)
        root = symspace.sqrtm(s)
        lhs = PQOperator(s, 1.0, -c).to_dense()
        mid = np.eye(symspace.dim(n)) - c * symspace.tensor_dense(np.eye(n))
        rhs = symspace.congruence_dense(root) @ mid @ symspace.congruence_dense(root)
        worst = max(worst, _rel(lhs, rhs))
        ident = lops.apply(PQOperator.P(symspace.powm(s, -0.5)), s)
        worst = max(worst, _rel(ident, np.eye(n)))
    return _at_most(worst, 1e-10)


def jeffreys_grid(seed: int):
    rng = np.random.default_rng(seed)
    for n in range(1, 6):
        for p in ((n - 1) / 2 + 0.6, 3.0, 10.0):
            for _ in range(3):
                yield ModelParams(p, symspace.random_spd(n, rng))


def check_jeffreys(ctx):
    worst = 0.0
    for params in jeffreys_grid(ctx.seed + 4):
        dense = np.linalg.det(model.fisher_information(params).to_dense())
        worst = max(worst, abs(dense / np.exp(model.jeffreys_log_det(params)) - 1.0))
    special = np.linalg.det(model.fisher_information(ModelParams(2.0, np.eye(2))).to_dense())
    worst = max(worst, abs(special / (75 / 2744) - 1.0))
    return _at_most(worst, 1e-10)


def check_fisher_inverse(ctx):
    worst = 0.0
    for params in jeffreys_grid(ctx.seed + 4):
        prod = model.fisher_information(params).to_dense() @ model.fisher_inverse(params).to_dense()
        worst = max(worst, float(np.linalg.norm(prod - np.eye(len(prod)))))
    return _at_most(worst, 1e-10)


def check_n_independence(ctx):
    coeffs = {
        (model.fisher_information(ModelParams(p, np.eye(n))).a, model.fisher_information(ModelParams(p, np.eye(n))).b)
        for n in range(1, 5)
        for p in (2.5,)
    }
    return _at_most(float(len(coeffs) - 1), 0.0)


def check_posterior(ctx):
    rng = np.random.default_rng(ctx.seed + 5)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(100):
            params = ModelParams(n / 2 + rng.uniform(0.1, 3.0), symspace.random_spd(n, rng))
            u = wishart.sample(params.mixing, rng)
            x = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
            lhs = (
                model.gaussian_log_density(u, x)
                + wishart.log_density(params.mixing, u)
                - model.log_density(params, x)
            )
            rhs = wishart.log_density(model.posterior(params, x), u)
            worst = max(worst, abs(lhs - rhs))
    return _at_most(worst, 1e-10)


def mixture_density(p: float, sigma: float, x: float) -> float:
    """``f_{p, sigma}(x)`` for ``n = 1`` by quadrature over the gamma mixing law."""
    log_const = -gammaln(p) - p * np.log(sigma) - 0.5 * np.log(2 * np.pi)

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return np.exp(log_const + (p - 0.5) * np.log(u) - u / sigma - 0.5 * x * x * u)

    cut = sigma * p
    total = 0.0
    for lo, hi in ((0.0, cut), (cut, np.inf)):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


DENSITY_GRID = [(p, s) for p in (0.6, 1.0, 3.0) for s in (0.5, 1.0, 2.0)]
X_VALUES = np.linspace(-6.0, 6.0, 20)


def check_density_quadrature(ctx):
    worst = 0.0
    for p, s in DENSITY_GRID:
        params = ModelParams(p, [[s]])
        for x in X_VALUES:
            closed = np.exp(model.log_density(params, [x]))
            worst = max(worst, abs(mixture_density(p, s, x) / closed - 1.0))
    return _at_most(worst, 1e-7)


def check_density_normalization(ctx):
    worst = 0.0
    for p, s in DENSITY_GRID:
        params = ModelParams(p, [[s]])
        total, _ = integrate.quad(
            lambda x: np.exp(model.log_density(params, [x])), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400
        )
        worst = max(worst, abs(total - 1.0))
    return _at_most(worst, 1e-8)


def check_wishart_scalar(ctx):
    """n = 1 density against the gamma law, plus quadrature normalization."""
    worst = 0.0
    for p, s in ((0.7, 0.5), (1.0, 1.0), (2.0, 1.0), (4.5, 3.0)):
        params = WishartParams(p, [[s]])
        for u in (0.1, 1.0, 2.5, 7.0):
            ref = stats.gamma(a=p, scale=s).logpdf(u)
            worst = max(worst, abs(wishart.log_density(params, [[u]]) - ref))
        total, _ = integrate.quad(lambda u: np.exp(wishart.log_density(params, [[u]])), 0, np.inf, epsrel=1e-12, epsabs=1e-13, limit=200)
        worst = max(worst, abs(total - 1.0))
    for n, p in ((2, 2.0), (3, 2.0), (4, 3.7)):
        lhs = wishart.log_multivariate_gamma(n, p + 0.5) - wishart.log_multivariate_gamma(n, p)
        rhs = np.log(np.exp(model.log_normalizer(p, n)) * (2 * np.pi) ** (n / 2))
        worst = max(worst, abs(lhs - rhs))
    return _at_most(worst, 1e-8)


def fd_errors(params: ModelParams, x: np.ndarray, rng: np.random.Generator, h: float = 1e-5, h2: float = 1e-3):
    """Errors of the analytic score against central differences.

    Directions have unit norm and steps are scaled by the smallest eigenvalue
    of ``sigma``.  The second difference is Richardson-extrapolated.  Errors are
    relative to the norm of the exact gradient and Hessian.
    """
    n = params.n
    pair = model.score(params, x)
    scale = symspace.min_eigenvalue(params.sigma)
    h, h2 = h * scale, h2 * scale
    g_err = h_err = 0.0

    def ll(s):
        return model.log_likelihood(ModelParams(params.p, s), x)

    def second(d1, d2, t):
        s = params.sigma
        return (ll(s + t * (d1 + d2)) - ll(s + t * (d1 - d2)) - ll(s - t * (d1 - d2)) + ll(s - t * (d1 + d2))) / (4 * t * t)

    for _ in range(5):
        d1, d2 = (symspace.sym(rng.standard_normal((n, n))) for _ in range(2))
        d1, d2 = d1 / np.linalg.norm(d1), d2 / np.linalg.norm(d2)
        fd = (ll(params.sigma + h * d1) - ll(params.sigma - h * d1)) / (2 * h)
        g_err = max(g_err, abs(fd - symspace.inner(pair.grad, d1)) / np.linalg.norm(pair.grad))
        fd2 = (4 * second(d1, d2, h2 / 2) - second(d1, d2, h2)) / 3
        an2 = symspace.half_vec(d1) @ pair.hess @ symspace.half_vec(d2)
        h_err = max(h_err, abs(fd2 - an2) / np.linalg.norm(pair.hess, 2))
    return g_err, h_err


def check_score_fd(ctx):
    rng = np.random.default_rng(ctx.seed + 6)
    g_worst = h_worst = 0.0
    for n in (1, 2, 3):
        params = ModelParams(n / 2 + 1.0, symspace.random_spd(n, rng))
        for _ in range(3):
            g, h = fd_errors(params, rng.standard_normal(n), rng)
            g_worst, h_worst = max(g_worst, g), max(h_worst, h)
    # ratio to the tolerances 1e-6 (gradient) and 1e-6 (Hessian)
    return _at_most(max(g_worst / 1e-6, h_worst / 1e-6), 1.0, grad_rel=g_worst, hess_rel=h_worst)


def van_trees_grid():
    for n in (1, 2, 3):
        for p in ((n - 1) / 2 + 0.3, 2.0, 6.0):
            for p1 in ((n + 3) / 2 + 0.2, 5.0, 12.0):
                for k in (1, 3):
                    yield n, p, p1, k


def check_van_trees_closed_form(ctx):
    rng = np.random.default_rng(ctx.seed + 7)
    worst = 0.0
    for n, p, p1, k in van_trees_grid():
        problem = VanTreesProblem(p, WishartParams(p1, symspace.random_spd(n, rng)), k)
        report = bounds.van_trees_bound(problem)
        numeric = np.linalg.inv(report.information.to_dense())
        worst = max(worst, np.linalg.norm(report.dense_bound - numeric) / np.linalg.norm(numeric))
        if not report.bound.is_posdef():
            worst = np.inf
    scalar = bounds.van_trees_bound(VanTreesProblem(1.0, WishartParams(4.0, [[1.0]]))).dense_bound[0, 0]
    worst = max(worst, abs(scalar - 15 / 8))
    return _at_most(worst, 1e-10, scalar_bound=scalar)


def check_van_trees_monotone(ctx):
    rng = np.random.default_rng(ctx.seed + 8)
    lowest = np.inf
    for n in (1, 2, 3):
        prior = WishartParams(n + 3.0, symspace.random_spd(n, rng))
        dense = [bounds.van_trees_bound(VanTreesProblem(2.0, prior, k)).dense_bound for k in range(1, 6)]
        for a, b in zip(dense, dense[1:]):
            lowest = min(lowest, bounds.min_gap(a, b))
    return _at_least(lowest, 0.0)


def check_boundary_vanishing(ctx):
    """``|g'(u)| lambda(u)`` decays as the smallest eigenvalue of ``u`` goes to 0."""
    worst = 0.0
    for n in (1, 2, 3):
        prior = WishartParams((n + 3) / 2 + 1.0, np.eye(n))

        def size(t):
            u = np.eye(n)
            u[0, 0] = t
            g = bounds.prior_score(prior, u)
            return np.linalg.norm(g) * np.exp(wishart.log_density(prior, u))

        ratio = size(1e-8) / size(1.0)
        worst = max(worst, ratio)
    return _at_most(worst, 1e-6)


# -- Monte Carlo -----------------------------------------------------------

def _mc(ctx, fn, tag):
    return summarize(batch_means(fn, ctx.config, tag))


def check_laplace(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = WishartParams(n / 2 + 0.8, _sigma(n, ctx.seed))
        rng = np.random.default_rng([ctx.seed, 10, n])
        ss = [symspace.random_spd(n, rng) for _ in range(5)]

        def fn(r, size, params=params, ss=ss):
            u = wishart.sample(params, r, size)
            return np.stack([np.exp(-np.einsum("ij,nji->n", s, u)) for s in ss], axis=1)

        mean, se = _mc(ctx, fn, 100 + n)
        ref = np.array([wishart.laplace_transform(params, s) for s in ss])
        worst = max(worst, tally.add(mean, se, ref))
    return tally.result(worst)


def check_wishart_mean(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = WishartParams(n / 2 + 0.4, _sigma(n, ctx.seed))
        mean, se = _mc(ctx, lambda r, size, params=params: wishart.sample(params, r, size), 110 + n)
        worst = max(worst, tally.add(mean, se, wishart.mean(params)))
    return tally.result(worst)


def check_wishart_second_moments(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = WishartParams(n / 2 + 0.7, _sigma(n, ctx.seed))

        def fn(r, size, params=params):
            u = wishart.sample(params, r, size)
            return np.stack([symspace.tensor_dense(u), symspace.congruence_dense(u)], axis=1)

        mean, se = _mc(ctx, fn, 120 + n)
        tensor, congr = wishart.second_moments(params)
        worst = max(worst, tally.add(mean[0], se[0], tensor.to_dense()), tally.add(mean[1], se[1], congr.to_dense()))
    return tally.result(worst)


INVERSE_SHAPES = {1: 5.0, 2: 6.0, 3: 7.0}


def check_wishart_inverse_moments(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = WishartParams(INVERSE_SHAPES[n], _sigma(n, ctx.seed))

        def fn(r, size, params=params):
            v = np.linalg.inv(wishart.sample(params, r, size))
            hv = symspace.half_vec(v)
            return np.concatenate(
                [hv, symspace.tensor_dense(v).reshape(size, -1), symspace.congruence_dense(v).reshape(size, -1)], axis=1
            )

        mean, se = _mc(ctx, fn, 130 + n)
        first, tensor, congr = wishart.inverse_moments(params)
        m = symspace.dim(n)
        parts = [(slice(0, m), symspace.half_vec(first), None)]
        parts.append((slice(m, m + m * m), tensor.to_dense(), (m, m)))
        parts.append((slice(m + m * m, None), congr.to_dense(), (m, m)))
        for sl, ref, shape in parts:
            est, err = mean[sl], se[sl]
            if shape:
                est, err = est.reshape(shape), err.reshape(shape)
            worst = max(worst, tally.add(est, err, ref))
    return tally.result(worst)


def check_wishart_equivariance(ctx):
    """Transformed draws ``t U t^T`` have the moments of ``gamma_{p, t sigma t^T}``."""
    tally = Tally(ctx)
    n = 2
    rng = np.random.default_rng([ctx.seed, 14])
    t = rng.standard_normal((n, n)) + 2 * np.eye(n)
    params = WishartParams(1.7, _sigma(n, ctx.seed))
    moved = WishartParams(1.7, t @ params.sigma @ t.T)

    def fn(r, size):
        u = t @ wishart.sample(params, r, size) @ t.T
        return np.stack([symspace.tensor_dense(u), symspace.congruence_dense(u)], axis=1)

    mean, se = _mc(ctx, fn, 140)
    tensor, congr = wishart.second_moments(moved)
    return tally.result(max(tally.add(mean[0], se[0], tensor.to_dense()), tally.add(mean[1], se[1], congr.to_dense())))


def check_gaussian_reduction(ctx):
    """``XX^T/2`` for ``X ~ N(0, s)`` has mean ``s/2`` and second moments of ``gamma_{1/2, s}``."""
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        s = _sigma(n, ctx.seed) / 1.7
        root = np.linalg.cholesky(s)

        def fn(r, size, root=root, n=n):
            x = r.standard_normal((size, n)) @ root.T
            u = 0.5 * x[:, :, None] * x[:, None, :]
            return np.concatenate([symspace.half_vec(u), symspace.tensor_dense(u).reshape(size, -1)], axis=1)

        mean, se = _mc(ctx, fn, 150 + n)
        m = symspace.dim(n)
        worst = max(worst, tally.add(mean[:m], se[:m], symspace.half_vec(s / 2)))
        ref = PQOperator(s, 0.5, 0.25).to_dense()
        worst = max(worst, tally.add(mean[m:].reshape(m, m), se[m:].reshape(m, m), ref))
    return tally.result(worst)


def check_wishart_normalization(ctx):
    """Importance sampling of the n = 2 density with a multivariate t proposal."""
    params = WishartParams(2.5, _sigma(2, ctx.seed))
    center = symspace.half_vec(wishart.mean(params))
    tensor, congr = wishart.second_moments(params)
    cov = tensor.to_dense() - np.outer(center, center)
    proposal = stats.multivariate_t(loc=center, shape=2.0 * cov, df=3)

    def fn(r, size):
        c = proposal.rvs(size=size, random_state=r)
        u = symspace.half_unvec(c, 2)
        return np.exp(wishart.log_density_batch(params, u) - proposal.logpdf(c))

    tally = Tally(ctx)
    mean, se = _mc(ctx, fn, 160)
    return tally.result(tally.add(np.atleast_1d(mean), np.atleast_1d(se), [1.0]), estimate=float(mean))


def check_model_normalization(ctx):
    """Importance sampling of f_{p, sigma} for n = 2, 3 using a heavier-tailed model."""
    tally = Tally(ctx)
    worst = 0.0
    for n in (2, 3):
        target = ModelParams(n / 2 + 1.5, _sigma(n, ctx.seed))
        proposal = ModelParams((n - 1) / 2 + 0.5 * (target.p - (n - 1) / 2), target.sigma)

        def fn(r, size, target=target, proposal=proposal):
            x = model.sample(proposal, r, size)
            return np.exp(model.log_density(target, x) - model.log_density(proposal, x))

        mean, se = _mc(ctx, fn, 170 + n)
        worst = max(worst, tally.add(np.atleast_1d(mean), np.atleast_1d(se), [1.0]))
    return tally.result(worst)


def check_model_second_moment(ctx):
    """``E[xx^T] = sigma^{-1} / (p - (n+1)/2)`` via the tower rule."""
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = ModelParams(n / 2 + 3.0, _sigma(n, ctx.seed))

        def fn(r, size, params=params):
            x = model.sample(params, r, size)
            return x[:, :, None] * x[:, None, :]

        mean, se = _mc(ctx, fn, 180 + n)
        worst = max(worst, tally.add(mean, se, wishart.inverse_mean(params.mixing)))
    return tally.result(worst)


def check_score_mean_zero(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2, 3):
        params = ModelParams(n / 2 + 0.5, _sigma(n, ctx.seed))

        def fn(r, size, params=params):
            return model.score_coords(params, model.sample(params, r, size), hessian=False)[0]

        mean, se = _mc(ctx, fn, 190 + n)
        worst = max(worst, tally.add(mean, se, np.zeros_like(mean)))
    return tally.result(worst)


FISHER_CASES = ((1, 1.0), (2, 2.0), (3, 3.0))


def fisher_mc(params: ModelParams, ctx, tag: int):
    """Batch estimates of ``E[l' (x) l']`` and ``-E[l'']``."""

    def fn(r, size):
        g, h = model.score_coords(params, model.sample(params, r, size))
        return np.stack([g[:, :, None] * g[:, None, :], -h], axis=1)

    return _mc(ctx, fn, tag)


def check_fisher_mc(ctx):
    tally = Tally(ctx)
    worst = 0.0
    details = {}
    for n, p in FISHER_CASES:
        params = ModelParams(p, _sigma(n, ctx.seed))
        mean, se = fisher_mc(params, ctx, 200 + n)
        ref = model.fisher_information(params).to_dense()
        z_outer, z_hess = tally.add(mean[0], se[0], ref), tally.add(mean[1], se[1], ref)
        details[f"n{n}_outer_z"], details[f"n{n}_hessian_z"] = z_outer, z_hess
        worst = max(worst, z_outer, z_hess)
    return tally.result(worst, **details)


def j_mc(params: ModelParams, ctx, tag: int):
    return _mc(ctx, lambda r, size: model.j_integrand(params, model.sample(params, r, size)), tag)


def check_j_integral(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2):
        params = ModelParams(n / 2 + 0.5, _sigma(n, ctx.seed))
        mean, se = j_mc(params, ctx, 210 + n)
        worst = max(worst, tally.add(mean, se, model.j_closed_form(params).to_dense()))
    scalar = model.j_closed_form(ModelParams(1.0, [[1.0]])).to_dense()[0, 0]
    combined = 0.5 * PQOperator.P(np.eye(2)).to_dense() - 1.5 / 4 * model.j_closed_form(ModelParams(1.0, np.eye(2))).to_dense()
    alg = _rel(combined, model.fisher_information(ModelParams(1.0, np.eye(2))).to_dense())
    if abs(scalar - 0.8) > 1e-12 or alg > 1e-12:
        worst = np.inf
    return tally.result(worst, scalar=scalar)


def check_plain_gaussian(ctx):
    tally = Tally(ctx)
    worst = 0.0
    u = _sigma(2, ctx.seed)
    for k, kind in enumerate(("precision", "covariance")):
        cov = symspace.inverse(u) if kind == "precision" else u
        root = np.linalg.cholesky(cov)

        def fn(r, size, root=root, kind=kind):
            x = r.standard_normal((size, 2)) @ root.T
            g = model.gaussian_score_coords(u, x, kind)
            return g[:, :, None] * g[:, None, :]

        mean, se = _mc(ctx, fn, 220 + k)
        worst = max(worst, tally.add(mean, se, model.plain_gaussian_fisher(u, kind).to_dense()))
    return tally.result(worst)


def _vt_problem(ctx, n: int, p: float = 3.0, p1: float | None = None, k: int = 1) -> VanTreesProblem:
    p1 = n + 4.0 if p1 is None else p1
    return VanTreesProblem(p, WishartParams(p1, _sigma(n, ctx.seed + 17)), k)


def check_density_information(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2):
        prior = _vt_problem(ctx, n).prior

        def fn(r, size, prior=prior):
            u = wishart.sample(prior, r, size)
            g = symspace.half_vec(symspace.sym(bounds.prior_score(prior, u)))
            neg_h = prior.p - (n + 1) / 2
            return np.stack([g[:, :, None] * g[:, None, :], neg_h * symspace.congruence_dense(np.linalg.inv(u))], axis=1)

        mean, se = _mc(ctx, fn, 230 + n)
        ref = bounds.density_information(prior).to_dense()
        worst = max(worst, tally.add(mean[0], se[0], ref), tally.add(mean[1], se[1], ref))
    return tally.result(worst)


def check_averaged_fisher(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2):
        problem = _vt_problem(ctx, n)

        def fn(r, size, problem=problem):
            u = wishart.sample(problem.prior, r, size)
            u_inv = np.linalg.inv(u)
            p = problem.model_p
            k = 1.0 / (2 * (2 * p + 3))
            return k * ((2 * p + 1) * symspace.congruence_dense(u_inv) - symspace.tensor_dense(u_inv))

        mean, se = _mc(ctx, fn, 240 + n)
        worst = max(worst, tally.add(mean, se, bounds.averaged_fisher(problem).to_dense()))
    return tally.result(worst)


VT_CASES = ((1, 3.0, 5), (2, 3.0, 5))


def van_trees_end_to_end(ctx, tag_base: int = 300):
    """Joint-matrix estimates for both shipped estimators on the standard cases."""
    out = {}
    for i, (n, p, k) in enumerate(VT_CASES):
        problem = _vt_problem(ctx, n, p=p, k=k)
        for j, spec in enumerate((EstimatorSpec.default_constant(problem), EstimatorSpec.default_clipped(problem))):
            est = van_trees_joint_matrix(problem, spec, ctx.vt_config, tag_base + 10 * i + j)
            out[(n, spec.kind)] = (problem, est)
    return out


def _vt_results(ctx):
    if ctx.cache.get("vt") is None:
        ctx.cache["vt"] = van_trees_end_to_end(ctx)
    return ctx.cache["vt"]


def check_van_trees_inequality(ctx):
    worst = np.inf
    details = {}
    for (n, kind), (problem, est) in _vt_results(ctx).items():
        means = est.batch_c_blocks
        bound = bounds.van_trees_bound(problem).dense_bound
        gap, gap_se = min_eig_with_se(means, bound)
        details[f"n{n}_{kind}_gap"] = gap
        details[f"n{n}_{kind}_gap_se"] = gap_se
        worst = min(worst, gap / gap_se if gap_se > 0 else (np.inf if gap >= 0 else -np.inf))
    return _at_least(worst, -ctx.z_tol, **details)


def check_joint_cross(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for (n, kind), (problem, est) in _vt_results(ctx).items():
        worst = max(worst, tally.add(est.cross_block, est.block_se("cross"), np.eye(problem.m)))
    return tally.result(worst)


def check_joint_information(ctx):
    tally = Tally(ctx)
    worst = 0.0
    for (n, kind), (problem, est) in _vt_results(ctx).items():
        ref = bounds.van_trees_information(problem).to_dense()
        worst = max(worst, tally.add(est.d_block, est.block_se("d"), ref))
    return tally.result(worst)


def check_joint_psd(ctx):
    worst = np.inf
    for (n, kind), (problem, est) in _vt_results(ctx).items():
        ratio = est.min_eig / est.min_eig_se if est.min_eig_se > 0 else np.inf
        worst = min(worst, ratio)
    return _at_least(worst, -ctx.z_tol)


def check_unbiased_moment(ctx):
    """``(p - (n+1)/2) mean_i x_i x_i^T`` is unbiased for ``u^{-1}`` under the joint law."""
    from .mcverify import draw_problem

    tally = Tally(ctx)
    worst = 0.0
    for n in (1, 2):
        problem = _vt_problem(ctx, n, k=3)

        def fn(r, size, problem=problem):
            u, xs = draw_problem(problem, r, size)
            scale = problem.model_p - (n + 1) / 2
            stat = scale * np.einsum("nki,nkj->nij", xs, xs) / problem.multiplicity
            return symspace.half_vec(stat - np.linalg.inv(u))

        mean, se = _mc(ctx, fn, 260 + n)
        worst = max(worst, tally.add(mean, se, np.zeros_like(mean)))
    return tally.result(worst)


# -- runner ----------------------------------------------------------------

@dataclass
class SuiteContext:
    seed: int
    full: bool
    config: McConfig
    vt_config: McConfig
    cache: dict = field(default_factory=dict)

    @property
    def z_tol(self) -> float:
        return family_z_tolerance(self.config.batches)


CATALOGUE: list[tuple[str, str, Callable]] = [
    ("symspace.half_vec_isometry", "orthonormal half-vectorization is an isometry", check_half_vec_isometry),
    ("symspace.rank_one", "inverse, determinant and definiteness of id - c a(x)a", check_rank_one),
    ("lops.algebra", "closed-form inverse, determinant and definiteness in L_u", check_lops_algebra),
    ("lops.conjugation", "P(s) - c s(x)s = P(s^1/2)(id - c I(x)I)P(s^1/2)", check_conjugation),
    ("wishart.scalar", "n = 1 gamma reduction, normalization and gamma-ratio identity", check_wishart_scalar),
    ("wishart.laplace", "Laplace transform det(I + sigma s)^-p", check_laplace),
    ("wishart.mean", "E[U] = p sigma", check_wishart_mean),
    ("wishart.second_moments", "E[U(x)U] and E[P(U)]", check_wishart_second_moments),
    ("wishart.inverse_moments", "E[U^-1], E[U^-1(x)U^-1] and E[P(U^-1)]", check_wishart_inverse_moments),
    ("wishart.equivariance", "t U t^T ~ gamma_{p, t sigma t^T}", check_wishart_equivariance),
    ("wishart.gaussian_reduction", "XX^T/2 ~ gamma_{1/2, s} for X ~ N(0, s)", check_gaussian_reduction),
    ("wishart.normalization", "density integrates to one (n = 2)", check_wishart_normalization),
    ("model.density_quadrature", "closed-form marginal density against the mixture integral (n = 1)", check_density_quadrature),
    ("model.density_normalization", "marginal density integrates to one (n = 1)", check_density_normalization),
    ("model.normalization_mc", "marginal density integrates to one (n = 2, 3)", check_model_normalization),
    ("model.second_moment", "E[xx^T] = sigma^-1 / (p - (n+1)/2)", check_model_second_moment),
    ("model.posterior", "posterior of the precision is gamma_{p+1/2, sigma_1}", check_posterior),
    ("model.score_fd", "score and Hessian against finite differences", check_score_fd),
    ("model.score_mean", "score has mean zero", check_score_mean_zero),
    ("model.fisher_mc", "Fisher information E[l'(x)l'] = -E[l'']", check_fisher_mc),
    ("model.j_integral", "J_p(sigma) closed form", check_j_integral),
    ("model.n_independence", "Fisher coefficients do not depend on n", check_n_independence),
    ("model.jeffreys", "determinant of the Fisher information", check_jeffreys),
    ("model.fisher_inverse", "closed-form inverse Fisher information", check_fisher_inverse),
    ("model.plain_gaussian", "Fisher information of N(0, u^-1) and N(0, u)", check_plain_gaussian),
    ("bounds.density_information", "density information of the Wishart prior", check_density_information),
    ("bounds.averaged_fisher", "prior average of the Fisher information", check_averaged_fisher),
    ("bounds.van_trees_closed_form", "closed-form Van Trees minorant against dense inversion", check_van_trees_closed_form),
    ("bounds.van_trees_monotone", "more observations give a smaller minorant", check_van_trees_monotone),
    ("bounds.boundary_vanishing", "g'(u) lambda(u) -> 0 at the boundary of the cone", check_boundary_vanishing),
    ("bounds.van_trees_inequality", "C >= D^-1 for both shipped estimators", check_van_trees_inequality),
    ("bounds.joint_cross", "E[(X - u)(x)(g' + l')] = identity", check_joint_cross),
    ("bounds.joint_information", "E[(g' + l')(x)(g' + l')] = D", check_joint_information),
    ("bounds.joint_psd", "the 2m x 2m Van Trees matrix is positive semidefinite", check_joint_psd),
    ("mcverify.unbiased_moment", "rescaled sample second moment is unbiased for u^-1", check_unbiased_moment),
]


def make_context(scope: str = "fast", config: McConfig | None = None) -> SuiteContext:
    if scope not in ("fast", "full"):
        raise ValueError(f"scope must be 'fast' or 'full', got {scope!r}")
    full = scope == "full"
    if config is None:
        config = McConfig(samples=FULL_SAMPLES if full else FAST_SAMPLES)
    vt_samples = max(config.batches, min(config.samples, 100_000) // config.batches * config.batches)
    return SuiteContext(config.seed, full, config, config.scaled(vt_samples))


def run_check(ctx: SuiteContext, check_id: str) -> CheckResult:
    for cid, ref, fn in CATALOGUE:
        if cid == check_id:
            break
    else:
        raise KeyError(check_id)
    start = time.perf_counter()
    try:
        measured, tol, cmp, ok, details = fn(ctx)
        status = "pass" if ok else "fail"
    except Exception as exc:  # a crashing check is a failed check
        measured, tol, cmp, status, details = np.nan, np.nan, "error", "fail", {"error": repr(exc)}
    elapsed = (time.perf_counter() - start) * 1e3
    return CheckResult(cid, ref, status, float(measured), float(tol), cmp, elapsed, details)


def run_verification_suite(scope: str = "fast", config: McConfig | None = None, checks=None) -> list[CheckResult]:
    """Run the catalogue; failures are report entries, never exceptions."""
    ctx = make_context(scope, config)
    ids = [cid for cid, _, _ in CATALOGUE] if checks is None else list(checks)
    return [run_check(ctx, cid) for cid in ids]
