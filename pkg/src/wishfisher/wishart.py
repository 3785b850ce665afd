"""
The Wishart family ``gamma_{p, sigma}`` on positive definite matrices.

``gamma_{p, sigma}`` is characterized by its Laplace transform
``E exp(-tr(sU)) = det(I + sigma s)^(-p)`` for ``p > (n-1)/2``.  Its mean is
``p sigma`` and it coincides with the classical Wishart law with ``2p``
degrees of freedom and scale ``sigma/2``.

Densities are with respect to Lebesgue measure in orthonormal half-vector
coordinates (unit cubes of the Euclidean space of symmetric matrices have
mass one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import symspace
from .lops import PQOperator


class ShapeDomainError(ValueError):
    """A shape parameter is below the threshold an identity needs."""


@dataclass(frozen=True, eq=False)
class WishartParams:
    """Shape ``p`` and scale ``sigma`` of ``gamma_{p, sigma}``."""

    p: float
    sigma: np.ndarray

    def __post_init__(self):
        sigma = symspace.sym(self.sigma)
        if sigma.ndim != 2:
            raise symspace.DimensionError("sigma must be a single matrix")
        symspace.chol(sigma)
        n = sigma.shape[0]
        p = float(self.p)
        if not p > (n - 1) / 2:
            raise ShapeDomainError(f"shape p = {p} must exceed (n-1)/2 = {(n - 1) / 2}")
        sigma.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    def require(self, threshold_halves: int, what: str) -> None:
        """Raise unless ``p > (n + threshold_halves)/2``."""
        bound = (self.n + threshold_halves) / 2
        if not self.p > bound:
            raise ShapeDomainError(f"{what} needs p > (n+{threshold_halves})/2 = {bound}, got p = {self.p}")


def log_multivariate_gamma(n: int, p: float) -> float:
    """Log of ``(2 pi)^(n(n-1)/4) prod_j Gamma(p - (j-1)/2)``.

    The ``(2 pi)`` power (rather than the usual ``pi^(n(n-1)/4)``) accounts for
    the orthonormal coordinates on the symmetric matrices.
    """
    if not p > (n - 1) / 2:
        raise ShapeDomainError(f"multivariate gamma needs p > (n-1)/2 = {(n - 1) / 2}, got {p}")
    j = np.arange(n)
    return float(n * (n - 1) / 4 * np.log(2 * np.pi) + np.sum(gammaln(p - j / 2)))


def log_density(params: WishartParams, u) -> float:
    """Log-density at ``u``; ``-inf`` outside the positive definite cone."""
    u = symspace.sym(u)
    try:
        ld_u = symspace.logdet(u)
    except symspace.NotPositiveDefiniteError:
        return -np.inf
    n, p = params.n, params.p
    sigma_inv = symspace.inverse(params.sigma)
    return (
        -symspace.inner(sigma_inv, u)
        + (p - (n + 1) / 2) * ld_u
        - p * symspace.logdet(params.sigma)
        - log_multivariate_gamma(n, p)
    )


def log_density_batch(params: WishartParams, u: np.ndarray) -> np.ndarray:
    """Vectorized :func:`log_density` over a stack ``(N, n, n)``."""
    u = symspace.sym(u)
    n, p = params.n, params.p
    sigma_inv = symspace.inverse(params.sigma)
    sign, ld = np.linalg.slogdet(u)
    eig_min = np.linalg.eigvalsh(u)[:, 0]
    out = (
        -np.einsum("ij,nji->n", sigma_inv, u)
        + (p - (n + 1) / 2) * ld
        - p * symspace.logdet(params.sigma)
        - log_multivariate_gamma(n, p)
    )
    return np.where((sign > 0) & (eig_min > 0), out, -np.inf)


def laplace_transform(params: WishartParams, s) -> float:
    """``det(I + sigma s)^(-p)``."""
    s = symspace.sym(s)
    sign, ld = np.linalg.slogdet(np.eye(params.n) + params.sigma @ s)
    if sign <= 0:
        raise ValueError("I + sigma s must have positive determinant")
    return float(np.exp(-params.p * ld))


def sample(params: WishartParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from ``gamma_{p, sigma}``; shape ``(n, n)`` or ``(size, n, n)``."""
    draws = sample_stacked(params.p, params.sigma[None], rng, 1 if size is None else size)
    return draws[0] if size is None else draws


def bartlett_factor(p: float, scale_chol: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Lower factors ``M`` with ``M M^T ~ gamma_{p, sigma}``.

    ``scale_chol`` is a stack ``(N, n, n)`` of Cholesky factors of ``sigma/2``.
    The Bartlett matrix has ``chi2(2p - i)`` squared diagonal (0-based ``i``)
    and standard normal strictly-lower entries.
    """
    size, n = scale_chol.shape[0], scale_chol.shape[-1]
    dof = 2 * p - np.arange(n)
    a = np.zeros((size, n, n))
    diag = np.sqrt(rng.chisquare(dof, size=(size, n)))
    a[:, np.arange(n), np.arange(n)] = diag
    low = np.tril_indices(n, -1)
    if len(low[0]):
        a[:, low[0], low[1]] = rng.standard_normal((size, len(low[0])))
    return scale_chol @ a


def sample_stacked(p: float, sigma: np.ndarray, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """One draw of ``gamma_{p, sigma_k}`` per scale in a stack ``(N, n, n)``.

    With a single scale (``N = 1``) and ``size`` given, draws ``size`` times
    from the same law.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[-1]
    if not p > (n - 1) / 2:
        raise ShapeDomainError(f"shape p = {p} must exceed (n-1)/2 = {(n - 1) / 2}")
    factor = np.linalg.cholesky(sigma / 2)
    if size is not None and factor.shape[0] == 1:
        factor = np.broadcast_to(factor, (size, n, n))
    m = bartlett_factor(p, factor, rng)
    return symspace.sym(m @ np.swapaxes(m, -1, -2))


def mean(params: WishartParams) -> np.ndarray:
    return params.p * params.sigma


def second_moments(params: WishartParams) -> tuple[PQOperator, PQOperator]:
    """``(E[U(x)U], E[P(U)])``.

    ``E[U(x)U] = p^2 sigma(x)sigma + p P(sigma)`` and
    ``E[P(U)] = (p/2) sigma(x)sigma + (p/2 + p^2) P(sigma)``.
    """
    p, s = params.p, params.sigma
    return PQOperator(s, p, p * p), PQOperator(s, p / 2 + p * p, p / 2)


def inverse_moments(params: WishartParams) -> tuple[np.ndarray, PQOperator, PQOperator]:
    """``(E[U^{-1}], E[U^{-1}(x)U^{-1}], E[P(U^{-1})])``.

    The first moment needs ``p > (n+1)/2`` and the second-order moments
    ``p > (n+3)/2``.
    """
    params.require(1, "E[U^-1]")
    params.require(3, "second moments of U^-1")
    n, p = params.n, params.p
    s_inv = symspace.inverse(params.sigma)
    first = s_inv / (p - (n + 1) / 2)
    denom = (p - (n + 3) / 2) * (p - (n + 1) / 2) * (p - n / 2)
    tensor = PQOperator(s_inv, 1.0 / denom, (p - (n + 2) / 2) / denom)
    congr = PQOperator(s_inv, (p - (n + 1) / 2) / denom, 0.5 / denom)
    return first, tensor, congr


def inverse_mean(params: WishartParams) -> np.ndarray:
    """``E[U^{-1}] = sigma^{-1} / (p - (n+1)/2)``."""
    params.require(1, "E[U^-1]")
    return symspace.inverse(params.sigma) / (params.p - (params.n + 1) / 2)
