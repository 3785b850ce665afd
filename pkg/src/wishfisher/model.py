"""
The Wishart-randomized centered Gaussian model ``f_{p, sigma}``.

A draw is ``X | U ~ N(0, U^{-1})`` with ``U ~ gamma_{p, sigma}``.  The marginal
density on ``R^n`` is

    f(x) = (2 pi)^(-n/2) Gamma(p + 1/2) / Gamma(p - (n-1)/2)
           (det sigma)^(1/2) / (1 + x^T sigma x / 2)^(p + 1/2)

and the Fisher information of ``sigma -> f_{p, sigma}`` is the element

    I_p(sigma) = ((2p + 1) P(sigma^{-1}) - sigma^{-1}(x)sigma^{-1}) / (2(2p + 3))

of ``L_{sigma^{-1}}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gammaln

from . import symspace, wishart
from .lops import PQOperator
from .wishart import WishartParams


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Shape ``p`` and parameter ``sigma`` of ``f_{p, sigma}``."""

    p: float
    sigma: np.ndarray

    def __post_init__(self):
        prior = WishartParams(self.p, self.sigma)
        object.__setattr__(self, "p", prior.p)
        object.__setattr__(self, "sigma", prior.sigma)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def mixing(self) -> WishartParams:
        """Law of the random precision matrix."""
        return WishartParams(self.p, self.sigma)


@dataclass(frozen=True, eq=False)
class ScorePair:
    """Gradient (a symmetric matrix) and Hessian (dense, orthonormal basis)."""

    grad: np.ndarray
    hess: np.ndarray


def log_normalizer(p: float, n: int) -> float:
    """Log of ``(2 pi)^(-n/2) Gamma(p + 1/2) / Gamma(p - (n-1)/2)``."""
    return -n / 2 * np.log(2 * np.pi) + gammaln(p + 0.5) - gammaln(p - (n - 1) / 2)


def _quad(sigma: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", x, sigma, x)


def log_density(params: ModelParams, x) -> float | np.ndarray:
    """``log f_{p, sigma}(x)`` for ``x`` of shape ``(n,)`` or ``(N, n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n:
        raise symspace.DimensionError(f"x has length {x.shape[-1]}, model order is {params.n}")
    p = params.p
    out = (
        log_normalizer(p, params.n)
        + 0.5 * symspace.logdet(params.sigma)
        - (p + 0.5) * np.log1p(0.5 * _quad(params.sigma, x))
    )
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood(params: ModelParams, x) -> float | np.ndarray:
    """``l_x(sigma) = log det(sigma)/2 - (p + 1/2) log(1 + x^T sigma x / 2)``."""
    x = np.asarray(x, dtype=float)
    return 0.5 * symspace.logdet(params.sigma) - (params.p + 0.5) * np.log1p(0.5 * _quad(params.sigma, x))


def sample(params: ModelParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Compound draw: ``U ~ gamma_{p, sigma}`` then ``X ~ N(0, U^{-1})``."""
    draws = sample_stacked(params.p, params.sigma[None], rng, 1 if size is None else size)
    return draws[0] if size is None else draws


def sample_stacked(p: float, sigma: np.ndarray, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """One observation of ``f_{p, sigma_k}`` per parameter in a stack ``(N, n, n)``."""
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[-1]
    factor = np.linalg.cholesky(sigma / 2)
    if size is not None and factor.shape[0] == 1:
        factor = np.broadcast_to(factor, (size, n, n))
    # U = M M^T, so M^{-T} z has covariance U^{-1}
    m = wishart.bartlett_factor(p, factor, rng)
    z = rng.standard_normal(m.shape[:-1])
    return np.linalg.solve(np.swapaxes(m, -1, -2), z[..., None])[..., 0]


def score(params: ModelParams, x) -> ScorePair:
    """First and second differentials of ``sigma -> log f_{p, sigma}(x)``.

    ``l' = sigma^{-1}/2 - (p + 1/2) (xx^T/2) / (1 + x^T sigma x / 2)`` and
    ``l'' = -P(sigma^{-1})/2 + (p + 1/2)/4 (xx^T (x) xx^T) / (1 + x^T sigma x / 2)^2``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (params.n,):
        raise symspace.DimensionError(f"x must have shape ({params.n},)")
    grad, hess = score_coords(params, x[None])
    return ScorePair(symspace.half_unvec(grad[0], params.n), hess[0])


def score_coords(params: ModelParams, x: np.ndarray, hessian: bool = True):
    """Vectorized score: gradient coordinates ``(N, m)`` and Hessians ``(N, m, m)``."""
    p, sigma = params.p, params.sigma
    sigma_inv = symspace.inverse(sigma)
    x = np.asarray(x, dtype=float)
    denom = 1.0 + 0.5 * _quad(sigma, x)
    xx = symspace.half_vec(x[:, :, None] * x[:, None, :])
    grad = 0.5 * symspace.half_vec(sigma_inv) - (p + 0.5) * 0.5 * xx / denom[:, None]
    if not hessian:
        return grad, None
    base = -0.5 * symspace.congruence_dense(sigma_inv)
    w = (p + 0.5) * 0.25 / denom**2
    hess = base + w[:, None, None] * xx[:, :, None] * xx[:, None, :]
    return grad, hess


def fisher_information(params: ModelParams) -> PQOperator:
    """``I_p(sigma)`` as an element of ``L_{sigma^{-1}}``.

    The coefficients depend on ``p`` only, not on the order ``n``.
    """
    p = params.p
    k = 1.0 / (2 * (2 * p + 3))
    return PQOperator(symspace.inverse(params.sigma), k * (2 * p + 1), -k)


def fisher_inverse(params: ModelParams) -> PQOperator:
    """``I_p(sigma)^{-1} = 2(2p+3)/(2p+1) (P(sigma) + sigma(x)sigma / (2p+1-n))``."""
    p, n = params.p, params.n
    k = 2 * (2 * p + 3) / (2 * p + 1)
    return PQOperator(params.sigma, k, k / (2 * p + 1 - n))


def j_closed_form(params: ModelParams) -> PQOperator:
    """``J_p(sigma) = E[xx^T (x) xx^T / (1 + x^T sigma x / 2)^2]`` in closed form."""
    p = params.p
    k = 4.0 / ((p + 1.5) * (p + 0.5))
    return PQOperator(symspace.inverse(params.sigma), 0.5 * k, 0.25 * k)


def j_integrand(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Dense ``xx^T (x) xx^T / (1 + x^T sigma x / 2)^2`` for a batch of ``x``."""
    xx = symspace.half_vec(x[:, :, None] * x[:, None, :])
    w = 1.0 / (1.0 + 0.5 * _quad(params.sigma, x)) ** 2
    return w[:, None, None] * xx[:, :, None] * xx[:, None, :]


def j_integral_check(params: ModelParams, samples: int, rng: np.random.Generator, batches: int = 10):
    """Monte Carlo estimate of ``J_p(sigma)`` with its batch standard error."""
    if samples % batches:
        raise ValueError("samples must be divisible by batches")
    size = samples // batches
    means = np.stack([j_integrand(params, sample(params, rng, size)).mean(axis=0) for _ in range(batches)])
    return means.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(batches)


def jeffreys_log_det(params: ModelParams) -> float:
    """``log det I_p(sigma)`` from the closed form."""
    p, n = params.p, params.n
    m = symspace.dim(n)
    return (
        m * np.log((2 * p + 1) / (2 * (2 * p + 3)))
        + np.log1p(-n / (2 * p + 1))
        - (n + 1) * symspace.logdet(params.sigma)
    )


def jeffreys_log_density(params: ModelParams) -> float:
    """Unnormalized log-density ``-log det I_p(sigma) / 2`` of the Jeffreys measure.

    Proportional to ``(n+1)/2 log det sigma``, since ``det I_p(sigma)`` scales
    like ``(det sigma)^(-n-1)``.
    """
    return -0.5 * jeffreys_log_det(params)


def posterior(params: ModelParams, x) -> WishartParams:
    """Law of the precision matrix given ``X = x``: ``gamma_{p + 1/2, sigma_1}``.

    ``sigma_1^{-1} = sigma^{-1} + xx^T / 2``.
    """
    x = np.asarray(x, dtype=float)
    prec = symspace.inverse(params.sigma) + 0.5 * np.outer(x, x)
    return WishartParams(params.p + 0.5, symspace.inverse(prec))


def gaussian_log_density(u, x) -> float:
    """``log N(0, u^{-1})(x)`` for a precision matrix ``u``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    return -n / 2 * np.log(2 * np.pi) + 0.5 * symspace.logdet(u) - 0.5 * float(x @ u @ x)


def plain_gaussian_fisher(u, parameterization: Literal["precision", "covariance"] = "precision") -> PQOperator:
    """Fisher information ``P(u^{-1})/2`` of ``N(0, u^{-1})`` or ``N(0, u)`` at ``u``.

    Both parameterizations give the same operator of the parameter: the
    change of variables ``v = u^{-1}`` maps one onto the other.
    """
    if parameterization not in ("precision", "covariance"):
        raise ValueError(f"unknown parameterization {parameterization!r}")
    return PQOperator(symspace.inverse(u), 0.5, 0.0)


def gaussian_score_coords(u, x: np.ndarray, parameterization: str = "precision") -> np.ndarray:
    """Score coordinates of ``N(0, u^{-1})`` (precision) or ``N(0, u)`` (covariance)."""
    u_inv = symspace.inverse(u)
    xx = x[:, :, None] * x[:, None, :]
    if parameterization == "precision":
        g = 0.5 * u_inv - 0.5 * xx
    elif parameterization == "covariance":
        g = 0.5 * u_inv @ xx @ u_inv - 0.5 * u_inv
    else:
        raise ValueError(f"unknown parameterization {parameterization!r}")
    return symspace.half_vec(g)
