"""
The Euclidean space of real symmetric matrices.

Symmetric matrices are plain ``numpy`` arrays of shape ``(n, n)`` (or stacks
``(..., n, n)``) with the trace inner product ``<u, v> = tr(uv)``.  Linear maps
of this space are represented densely as ``(m, m)`` arrays, ``m = n(n+1)/2``,
in the orthonormal basis

    e_11, ..., e_nn, (e_12 + e_21)/sqrt(2), (e_13 + e_31)/sqrt(2), ...

so that half-vectorization is an isometry and symmetric endomorphisms have
symmetric coordinate matrices.
"""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

SQRT2 = np.sqrt(2.0)


class DimensionError(ValueError):
    """Operands live in spaces of incompatible orders."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky factorization failed.

    ``pivot`` is the 1-based index of the leading minor that is not positive.
    """

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class SingularOperatorError(np.linalg.LinAlgError):
    """An operator is not invertible."""


def dim(n: int) -> int:
    """Dimension ``n(n+1)/2`` of the space of symmetric matrices of order ``n``."""
    return n * (n + 1) // 2


def order(m: int) -> int:
    """Inverse of :func:`dim`."""
    n = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if dim(n) != m:
        raise DimensionError(f"{m} is not a triangular number")
    return n


def sym(a) -> np.ndarray:
    """Canonical symmetric copy ``(a + a^T)/2`` of a square array (or stack)."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}")
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@lru_cache(maxsize=None)
def _indices(n: int):
    rows = list(range(n))
    cols = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            rows.append(i)
            cols.append(j)
    weights = np.ones(dim(n))
    weights[n:] = SQRT2
    return np.array(rows), np.array(cols), weights


def basis_labels(n: int) -> list[str]:
    """Names ``e{i}{j}`` (0-based, ``i <= j``) of the basis elements in order."""
    rows, cols, _ = _indices(n)
    return [f"e{i}{j}" for i, j in zip(rows, cols)]


class OrthoBasis:
    """Orthonormal basis of the symmetric matrices of order ``n``.

    Diagonal units come first, then the normalized off-diagonal elements in
    lexicographic ``(i, j)``, ``i < j``.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("order must be positive")
        self.n = n
        self.m = dim(n)

    @property
    def vectors(self) -> np.ndarray:
        """Stack of shape ``(m, n, n)`` holding the basis elements."""
        return _basis_vectors(self.n)

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"OrthoBasis(n={self.n})"


@lru_cache(maxsize=None)
def _basis_vectors(n: int) -> np.ndarray:
    out = half_unvec(np.eye(dim(n)), n)
    out.setflags(write=False)
    return out


def basis(n: int) -> OrthoBasis:
    return OrthoBasis(n)


def half_vec(u, basis: OrthoBasis | None = None) -> np.ndarray:
    """Coordinates of ``u`` (shape ``(..., n, n)``) in the orthonormal basis.

    Only the upper triangle is read; ``u`` is assumed symmetric.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if u.ndim < 2 or u.shape[-2] != n:
        raise DimensionError(f"expected square matrices, got shape {u.shape}")
    if basis is not None and basis.n != n:
        raise DimensionError(f"basis order {basis.n} does not match matrix order {n}")
    rows, cols, w = _indices(n)
    return u[..., rows, cols] * w


def half_unvec(c, n: int | None = None) -> np.ndarray:
    """Symmetric matrix (or stack) with coordinates ``c``."""
    c = np.asarray(c, dtype=float)
    m = c.shape[-1]
    if n is None:
        n = order(m)
    elif dim(n) != m:
        raise DimensionError(f"{m} coordinates do not describe order {n}")
    rows, cols, w = _indices(n)
    out = np.zeros(c.shape[:-1] + (n, n))
    vals = c / w
    out[..., rows, cols] = vals
    out[..., cols, rows] = vals
    return out


def inner(u, v) -> float:
    """Trace inner product ``tr(uv)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionError(f"shapes {u.shape} and {v.shape} differ")
    # tr(uv) for symmetric u, v equals the entrywise sum
    return float(np.einsum("ij,ji->", u, v))


def tensor_dense(a) -> np.ndarray:
    """Dense form of ``a (x) a`` for a symmetric matrix (or stack) ``a``."""
    c = half_vec(a)
    return c[..., :, None] * c[..., None, :]


def congruence_dense(u) -> np.ndarray:
    """Dense form of ``v -> u v u^T`` for a square matrix (or stack) ``u``.

    For symmetric ``u`` this is ``P(u)``.  Works for non-symmetric ``u`` too,
    which is what congruence by a change of basis ``t`` needs.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    b = _basis_vectors(n)
    images = np.einsum("...ai,kij,...bj->...kab", u, b, u)
    # row l, column k holds <b_l, u b_k u^T>
    return np.swapaxes(half_vec(images), -1, -2)


def rank_one_update_inverse(a, c: float, tol: float = 1e-12) -> float:
    """Coefficient ``c'`` such that ``(id - c a(x)a)^{-1} = id + c' a(x)a``.

    ``a`` is any array viewed as a vector of its Euclidean space (a vector of
    ``R^k`` or a symmetric matrix under the trace inner product).
    """
    s = c * _sqnorm(a)
    if abs(1.0 - s) <= tol:
        raise SingularOperatorError(f"c*|a|^2 = {s} is 1: id - c a(x)a is singular")
    return c / (1.0 - s)


def rank_one_det(a, c: float) -> float:
    """Determinant ``1 - c|a|^2`` of ``id - c a(x)a``."""
    return 1.0 - c * _sqnorm(a)


def _sqnorm(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.ndim == 2 and a.shape[0] == a.shape[1]:
        return inner(a, a)
    return float(a.ravel() @ a.ravel())


def rank_one_dense(a, c: float) -> np.ndarray:
    """Dense ``id - c a(x)a`` in coordinates (half-vector coordinates for matrices)."""
    a = np.asarray(a, dtype=float)
    v = half_vec(a) if (a.ndim == 2 and a.shape[0] == a.shape[1]) else a.ravel()
    return np.eye(v.size) - c * np.outer(v, v)


def chol(u) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NotPositiveDefiniteError`."""
    u = sym(u)
    if u.ndim != 2:
        raise DimensionError("chol expects a single matrix")
    factor, info = lapack.dpotrf(u, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise ValueError(f"illegal argument to dpotrf ({info})")
    return factor


def is_posdef(u) -> bool:
    try:
        chol(u)
    except NotPositiveDefiniteError:
        return False
    return True


def inverse(u) -> np.ndarray:
    """Inverse of a positive definite matrix via its Cholesky factor."""
    factor = chol(u)
    inv, info = lapack.dpotri(factor, lower=1)
    if info != 0:
        raise NotPositiveDefiniteError(int(info))
    return sym(np.tril(inv) + np.tril(inv, -1).T)


def logdet(u) -> float:
    factor = chol(u)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def min_eigenvalue(u) -> float:
    return float(np.linalg.eigvalsh(sym(u))[0])


def sqrtm(u) -> np.ndarray:
    """Positive square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh(sym(u))
    if w[0] < 0:
        raise NotPositiveDefiniteError(1, "square root needs a positive semidefinite matrix")
    return sym((v * np.sqrt(w)) @ v.T)


def powm(u, power: float) -> np.ndarray:
    """``u**power`` for positive definite ``u``."""
    w, v = np.linalg.eigh(sym(u))
    if w[0] <= 0:
        raise NotPositiveDefiniteError(1, "fractional powers need a positive definite matrix")
    return sym((v * w**power) @ v.T)


def random_spd(n: int, rng: np.random.Generator, spread: float = 4.0) -> np.ndarray:
    """Random positive definite matrix, eigenvalues between ``spread**-0.5`` and ``spread**0.5``."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.exp(rng.uniform(-0.5, 0.5, n) * np.log(spread))
    return sym((q * w) @ q.T)


# -- JSON matrix files -------------------------------------------------------

def matrix_to_json(u) -> dict:
    u = np.asarray(u, dtype=float)
    return {"n": int(u.shape[0]), "rows": u.tolist()}


def matrix_from_json(obj: dict, rtol: float = 1e-9) -> np.ndarray:
    """Parse ``{"n": int, "rows": [[...], ...]}``; rejects asymmetric input."""
    try:
        n = int(obj["n"])
        rows = np.array(obj["rows"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if rows.shape != (n, n):
        raise DimensionError(f"declared order {n} but rows have shape {rows.shape}")
    scale = max(np.max(np.abs(rows)), np.finfo(float).tiny)
    asym = np.max(np.abs(rows - rows.T)) / scale
    if asym > rtol:
        raise ValueError(f"matrix is not symmetric (relative asymmetry {asym:.3g})")
    return sym(rows)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, u) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(u)), encoding="utf-8")
