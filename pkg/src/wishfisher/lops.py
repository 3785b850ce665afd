"""
The two-dimensional operator algebra ``L_u`` spanned by ``P(u)`` and ``u (x) u``.

For a symmetric matrix ``u`` these two endomorphisms of the symmetric matrices
act as::

    P(u)(v)     = u v u
    (u (x) u)(v) = u tr(u v)

A :class:`PQOperator` stores ``a P(u) + b u(x)u`` with signed coefficients.
Writing it as ``a (P(u) - c u(x)u)`` with ``c = -b/a``, it is invertible iff
``c != 1/n``, its inverse lives over the base point ``u^{-1}``, and for
positive definite ``u`` and ``a > 0`` it is positive definite iff ``c < 1/n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import symspace
from .symspace import DimensionError, SingularOperatorError

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PQOperator:
    """``a P(u) + b u(x)u`` over the base point ``u``."""

    u: np.ndarray
    a: float
    b: float
    n: int = field(init=False)

    def __post_init__(self):
        u = symspace.sym(self.u)
        if u.ndim != 2:
            raise DimensionError("base point must be a single symmetric matrix")
        if (self.a != 0 or self.b != 0) and not np.any(u):
            raise ValueError("L_u is only defined for a nonzero base point u")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "n", u.shape[0])

    @classmethod
    def P(cls, u) -> "PQOperator":
        return cls(u, 1.0, 0.0)

    @classmethod
    def tensor(cls, u) -> "PQOperator":
        return cls(u, 0.0, 1.0)

    @property
    def m(self) -> int:
        return symspace.dim(self.n)

    @property
    def c(self) -> float:
        """Ratio ``-b/a`` of the ``a (P(u) - c u(x)u)`` form."""
        if self.a == 0:
            raise ZeroDivisionError("c is undefined for a = 0")
        return -self.b / self.a

    def same_base(self, other: "PQOperator", rtol: float = 1e-12) -> bool:
        if other.n != self.n:
            return False
        scale = max(np.max(np.abs(self.u)), np.max(np.abs(other.u)))
        return bool(np.max(np.abs(self.u - other.u)) <= rtol * scale)

    def __add__(self, other):
        if not isinstance(other, PQOperator):
            return NotImplemented
        if not self.same_base(other):
            raise ValueError("operators over different base points do not share an L_u")
        return PQOperator(self.u, self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        if not isinstance(other, PQOperator):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, k):
        if not np.isscalar(k):
            return NotImplemented
        return PQOperator(self.u, k * self.a, k * self.b)

    __rmul__ = __mul__

    def __call__(self, v) -> np.ndarray:
        return apply(self, v)

    def apply(self, v) -> np.ndarray:
        return apply(self, v)

    def to_dense(self) -> np.ndarray:
        return to_dense(self)

    def inverse(self) -> "PQOperator":
        return invert(self)

    def det(self) -> float:
        return det(self)

    def is_posdef(self) -> bool:
        return is_posdef(self)

    def to_json(self) -> dict:
        return {"u": symspace.matrix_to_json(self.u), "a": self.a, "b": self.b}

    @classmethod
    def from_json(cls, obj: dict) -> "PQOperator":
        return cls(symspace.matrix_from_json(obj["u"]), float(obj["a"]), float(obj["b"]))

    def __repr__(self):
        return f"PQOperator(n={self.n}, a={self.a!r}, b={self.b!r})"


def apply(op: PQOperator, v) -> np.ndarray:
    """``a u v u + b u tr(u v)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-2:] != (op.n, op.n):
        raise DimensionError(f"operator of order {op.n} applied to shape {v.shape}")
    u = op.u
    uvu = u @ v @ u
    tr = np.einsum("ij,...ji->...", u, v)
    return op.a * uvu + op.b * tr[..., None, None] * u


def to_dense(op: PQOperator) -> np.ndarray:
    """Coordinate matrix of ``op`` in the orthonormal basis."""
    out = op.a * symspace.congruence_dense(op.u) + op.b * symspace.tensor_dense(op.u)
    return 0.5 * (out + out.T)


def _singular(op: PQOperator) -> bool:
    # a (P(u) - c u(x)u) with 1 - nc = (a + nb)/a
    return abs(op.a + op.n * op.b) <= SINGULAR_RTOL * max(abs(op.a), abs(op.n * op.b))


def invert(op: PQOperator) -> PQOperator:
    """Inverse ``(1/a) (P(u^{-1}) + c/(1 - nc) u^{-1}(x)u^{-1})``, ``c = -b/a``."""
    if op.a == 0:
        if op.n == 1 and op.b != 0:
            return PQOperator(symspace.inverse(op.u), 0.0, 1.0 / op.b)
        raise SingularOperatorError("a pure tensor square u(x)u is singular for n >= 2")
    if _singular(op):
        raise SingularOperatorError(f"c = {op.c!r} equals 1/n = {1 / op.n!r}")
    u_inv = symspace.inverse(op.u)
    c = op.c
    return PQOperator(u_inv, 1.0 / op.a, c / (op.a * (1.0 - op.n * c)))


def det(op: PQOperator) -> float:
    """``a^m (det u)^(n+1) (1 - cn)``."""
    n, m = op.n, op.m
    det_u = np.linalg.det(op.u)
    if op.a == 0:
        return op.b * det_u**2 if m == 1 else 0.0
    return op.a**m * det_u ** (n + 1) * (1.0 - op.c * n)


def is_posdef(op: PQOperator) -> bool:
    """Positive definiteness verdict for a positive definite base point.

    Congruence by ``P(u^{1/2})`` reduces ``op`` to ``a id + b I(x)I`` whose
    eigenvalues are ``a`` (multiplicity ``m - 1``) and ``a + nb``.  For
    ``a > 0`` this is the criterion ``c < 1/n``.
    """
    symspace.chol(op.u)
    if op.m > 1 and op.a <= 0:
        return False
    if op.a > 0:
        return op.c < 1.0 / op.n
    return op.a + op.n * op.b > 0
