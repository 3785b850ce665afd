"""
Cramer-Rao and Van Trees lower bounds for estimators of the model parameter.

With the parameter randomized as ``U ~ gamma_{p1, sigma1}`` (prior density
``lambda``, ``g = log lambda``) the Van Trees inequality bounds the joint mean
squared error operator of any estimator from below by ``D^{-1}`` where

    D = I_lambda + k E[I_p(U)],    I_lambda = E[g'(U) (x) g'(U)],

``k`` being the number of iid observations.  Both terms lie in
``L_{sigma1^{-1}}``, so ``D^{-1}`` lies in ``L_{sigma1}``.  All coefficients
are carried as signed totals on ``P`` and the tensor square.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lops, model, symspace
from .lops import PQOperator
from .model import ModelParams
from .wishart import ShapeDomainError, WishartParams


@dataclass(frozen=True, eq=False)
class VanTreesProblem:
    """Model shape ``p``, Wishart prior ``(p1, sigma1)`` and ``k`` observations."""

    model_p: float
    prior: WishartParams
    multiplicity: int = 1

    def __post_init__(self):
        n = self.prior.n
        if not self.model_p > (n - 1) / 2:
            raise ShapeDomainError(f"model shape p = {self.model_p} must exceed (n-1)/2 = {(n - 1) / 2}")
        self.prior.require(3, "the Van Trees prior")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")
        object.__setattr__(self, "model_p", float(self.model_p))
        object.__setattr__(self, "multiplicity", int(self.multiplicity))

    @property
    def n(self) -> int:
        return self.prior.n

    @property
    def m(self) -> int:
        return symspace.dim(self.n)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """The minorant ``D^{-1}`` together with the signed totals of ``D``.

    ``A`` and ``B_signed`` are the coefficients of ``D = A P(sigma1^{-1}) +
    B_signed sigma1^{-1}(x)sigma1^{-1}``.
    """

    bound: PQOperator
    dense_bound: np.ndarray
    A: float
    B_signed: float
    information: PQOperator

    def to_json(self, min_eig_checks: dict | None = None) -> dict:
        return {
            "A": self.A,
            "B_signed": self.B_signed,
            "bound": self.bound.to_json(),
            "dense_bound": self.dense_bound.tolist(),
            "min_eig_checks": min_eig_checks or {},
        }


def _prior_constants(prior: WishartParams):
    p1, n = prior.p, prior.n
    return {i: p1 - (n + i) / 2 for i in range(4)}


def min_gap(c_dense, bound_dense) -> float:
    c_dense = np.asarray(c_dense, dtype=float)
    bound_dense = np.asarray(bound_dense, dtype=float)
    if c_dense.shape != bound_dense.shape:
        raise symspace.DimensionError(f"shapes {c_dense.shape} and {bound_dense.shape} differ")
    diff = c_dense - bound_dense
    return float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])


def cramer_rao_gap(params: ModelParams, mse, multiplicity: int = 1) -> float:
    """Smallest eigenvalue of ``mse - I_p(sigma)^{-1} / k`` for ``k`` iid observations."""
    return min_gap(mse, model.fisher_inverse(params).to_dense() / multiplicity)


def loewner_gap(c_dense, bound: PQOperator) -> float:
    """Smallest eigenvalue of ``C - bound``; nonnegative iff ``C >= bound``."""
    return min_gap(c_dense, bound.to_dense())


def prior_score(prior: WishartParams, u) -> np.ndarray:
    """``g'(u) = -sigma1^{-1} + (p1 - (n+1)/2) u^{-1}`` for a single ``u`` or a stack."""
    u = np.asarray(u, dtype=float)
    a1 = prior.p - (prior.n + 1) / 2
    return -symspace.inverse(prior.sigma) + a1 * np.linalg.inv(u)


def prior_hessian(prior: WishartParams, u) -> PQOperator:
    """``g''(u) = -(p1 - (n+1)/2) P(u^{-1})``."""
    a1 = prior.p - (prior.n + 1) / 2
    return PQOperator(symspace.inverse(u), -a1, 0.0)


def density_information(prior: WishartParams) -> PQOperator:
    """``I_lambda = (A1 P(sigma1^{-1}) + sigma1^{-1}(x)sigma1^{-1}/2) / (A3 A0)``.

    ``A_i = p1 - (n+i)/2``; needs ``p1 > (n+3)/2``.
    """
    prior.require(3, "the density information")
    a = _prior_constants(prior)
    k = 1.0 / (a[3] * a[0])
    return PQOperator(symspace.inverse(prior.sigma), k * a[1], 0.5 * k)


def averaged_fisher(problem: VanTreesProblem) -> PQOperator:
    """``k E[I_p(U)]`` under the prior.

    For one observation this is
    ``((2p A1 + A3) P(sigma1^{-1}) - (A3 - p) sigma1^{-1}(x)sigma1^{-1}) / (2(2p+3) A3 A1 A0)``.
    """
    p = problem.model_p
    a = _prior_constants(problem.prior)
    k = problem.multiplicity / (2 * (2 * p + 3) * a[3] * a[1] * a[0])
    return PQOperator(
        symspace.inverse(problem.prior.sigma),
        k * (2 * p * a[1] + a[3]),
        -k * (a[3] - p),
    )


def van_trees_information(problem: VanTreesProblem) -> PQOperator:
    """``D = I_lambda + k E[I_p(U)]``."""
    return density_information(problem.prior) + averaged_fisher(problem)


def van_trees_bound(problem: VanTreesProblem) -> BoundReport:
    """Closed-form ``D^{-1} = a P(sigma1) + b sigma1(x)sigma1``."""
    info = van_trees_information(problem)
    bound = lops.invert(info)
    return BoundReport(bound, bound.to_dense(), info.a, info.b, info)


def van_trees_joint_terms(problem: VanTreesProblem, u, xs, estimates):
    """Per-draw vectors ``(X - u, g'(u) + sum_i l'_{x_i}(u))`` in coordinates.

    ``u`` is a stack ``(N, n, n)`` of parameters, ``xs`` a stack ``(N, k, n)``
    of observations and ``estimates`` a stack ``(N, n, n)``.  Returns the two
    coordinate blocks, each of shape ``(N, m)``.
    """
    u = np.asarray(u, dtype=float)
    xs = np.asarray(xs, dtype=float)
    u_inv = np.linalg.inv(u)
    quad = np.einsum("nki,nij,nkj->nk", xs, u, xs)
    outer = np.einsum("nki,nkj->nkij", xs, xs)
    weights = 1.0 / (1.0 + 0.5 * quad)
    p = problem.model_p
    k = problem.multiplicity
    lik = 0.5 * k * u_inv - 0.5 * (p + 0.5) * np.einsum("nk,nkij->nij", weights, outer)
    total = prior_score(problem.prior, u) + lik
    err = symspace.half_vec(np.asarray(estimates, dtype=float) - u)
    return err, symspace.half_vec(symspace.sym(total))


def assemble_joint(c_block, cross, d_block) -> np.ndarray:
    """The ``2m x 2m`` matrix ``[[C, cross], [cross^T, D]]``."""
    top = np.hstack([c_block, cross])
    bottom = np.hstack([np.asarray(cross).T, d_block])
    out = np.vstack([top, bottom])
    return 0.5 * (out + out.T)


def van_trees_joint_matrix(problem: VanTreesProblem, estimator, config):
    """Monte Carlo estimate of the ``2m x 2m`` Van Trees matrix; see :mod:`.mcverify`."""
    from .mcverify import van_trees_joint_matrix as _estimate

    return _estimate(problem, estimator, config)
