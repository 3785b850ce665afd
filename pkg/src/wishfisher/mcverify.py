"""
Seeded Monte Carlo harness.

Every estimate is a mean of ``batches`` batch means.  Batch ``b`` draws from
its own generator, spawned from ``SeedSequence(seed, spawn_key=(tag,))``, so a
result depends only on ``(seed, tag, samples, batches)``: batches may run on
any number of worker threads (``WF_THREADS``) and are reduced in batch order.
Standard errors are the spread of the batch means.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import symspace, wishart
from . import model as _model
from .bounds import VanTreesProblem, assemble_joint, van_trees_bound, van_trees_joint_terms


@dataclass(frozen=True)
class McConfig:
    seed: int = 20240601
    samples: int = 100_000
    batches: int = 100

    def __post_init__(self):
        if self.batches < 2:
            raise ValueError("at least two batches are needed for a standard error")
        if self.samples < 1 or self.samples % self.batches:
            raise ValueError(f"samples ({self.samples}) must be a positive multiple of batches ({self.batches})")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def batch_size(self) -> int:
        return self.samples // self.batches

    def streams(self, tag: int = 0) -> list[np.random.Generator]:
        root = np.random.SeedSequence(self.seed, spawn_key=(tag,))
        return [np.random.default_rng(s) for s in root.spawn(self.batches)]

    def scaled(self, samples: int) -> "McConfig":
        return McConfig(self.seed, samples, self.batches)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("WF_THREADS", "1")))
    except ValueError:
        return 1


def batch_means(fn: Callable[[np.random.Generator, int], np.ndarray], config: McConfig, tag: int = 0) -> np.ndarray:
    """Stack of per-batch means of ``fn(rng, size)`` (which returns ``(size, ...)``)."""
    size = config.batch_size
    streams = config.streams(tag)

    def one(rng):
        return np.asarray(fn(rng, size), dtype=float).mean(axis=0)

    workers = min(worker_count(), config.batches)
    if workers == 1:
        return np.stack([one(r) for r in streams])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.stack(list(pool.map(one, streams)))


def summarize(means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grand mean and standard error from batch means."""
    return means.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(means.shape[0])


def mc_operator_expectation(sampler, map_to_operator, config: McConfig, tag: int = 0):
    """Mean and standard error of ``map_to_operator(sampler(rng, size))``.

    Returns ``(mean, se)`` with the shape of one mapped draw.
    """
    means = batch_means(lambda rng, size: map_to_operator(sampler(rng, size)), config, tag)
    return summarize(means)


def min_eig_with_se(means: np.ndarray, offset=0.0) -> tuple[float, float]:
    """Smallest eigenvalue of ``mean - offset`` and its batch standard error."""
    grand = means.mean(axis=0) - offset
    per_batch = np.array([np.linalg.eigvalsh(symspace.sym(b - offset))[0] for b in means])
    se = per_batch.std(ddof=1) / np.sqrt(len(per_batch))
    return float(np.linalg.eigvalsh(symspace.sym(grand))[0]), float(se)


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    """An estimator of the randomized parameter from ``k`` observations.

    ``constant`` always returns ``value``.  ``clipped_moment`` inverts the
    rescaled second-moment matrix ``(p - (n+1)/2) mean(x x^T)`` (an unbiased
    estimate of ``u^{-1}``) with its eigenvalues clipped to
    ``[eig_floor, eig_cap]``.
    """

    kind: str
    value: np.ndarray | None = None
    eig_floor: float | None = None
    eig_cap: float | None = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.value is None:
                raise ValueError("constant estimator needs a value")
            object.__setattr__(self, "value", symspace.sym(self.value))
        elif self.kind == "clipped_moment":
            if self.eig_floor is None or self.eig_cap is None:
                raise ValueError("clipped_moment needs eig_floor and eig_cap")
            if not 0 < self.eig_floor < self.eig_cap:
                raise ValueError("need 0 < eig_floor < eig_cap")
        else:
            raise ValueError(f"unknown estimator kind {self.kind!r}")

    @classmethod
    def constant(cls, value) -> "EstimatorSpec":
        return cls("constant", value=value)

    @classmethod
    def clipped_moment(cls, eig_floor: float, eig_cap: float) -> "EstimatorSpec":
        return cls("clipped_moment", eig_floor=float(eig_floor), eig_cap=float(eig_cap))

    @classmethod
    def default_clipped(cls, problem: VanTreesProblem) -> "EstimatorSpec":
        w = np.linalg.eigvalsh(problem.prior.sigma)
        return cls.clipped_moment(1e-3 * w[0], 1e3 * w[-1])

    @classmethod
    def default_constant(cls, problem: VanTreesProblem) -> "EstimatorSpec":
        return cls.constant(wishart.mean(problem.prior))

    def __call__(self, xs: np.ndarray, model_p: float) -> np.ndarray:
        """Estimates ``(N, n, n)`` from observations ``xs`` of shape ``(N, k, n)``."""
        xs = np.asarray(xs, dtype=float)
        size, k, n = xs.shape
        if self.kind == "constant":
            return np.broadcast_to(self.value, (size, n, n)).copy()
        scale = model_p - (n + 1) / 2
        if scale <= 0:
            raise ValueError(f"clipped_moment needs model p > (n+1)/2 = {(n + 1) / 2}")
        moment = scale * np.einsum("nki,nkj->nij", xs, xs) / k
        w, v = np.linalg.eigh(moment)
        with np.errstate(divide="ignore"):
            inv = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), np.inf)
        inv = np.clip(inv, self.eig_floor, self.eig_cap)
        return symspace.sym(np.einsum("nij,nj,nkj->nik", v, inv, v))

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": symspace.matrix_to_json(self.value)}
        return {"kind": self.kind, "eig_floor": self.eig_floor, "eig_cap": self.eig_cap}


def draw_problem(problem: VanTreesProblem, rng: np.random.Generator, size: int):
    """Parameters ``u ~ gamma_{p1, sigma1}`` and ``k`` observations of ``f_{p, u}`` each."""
    u = wishart.sample(problem.prior, rng, size)
    k, n = problem.multiplicity, problem.n
    reps = np.repeat(u, k, axis=0)
    xs = _model.sample_stacked(problem.model_p, reps, rng).reshape(size, k, n)
    return u, xs


def _joint_vectors(problem: VanTreesProblem, spec: EstimatorSpec, rng, size):
    u, xs = draw_problem(problem, rng, size)
    est = spec(xs, problem.model_p)
    err, total = van_trees_joint_terms(problem, u, xs, est)
    z = np.concatenate([err, total], axis=1)
    return z[:, :, None] * z[:, None, :]


def simulate_estimator(problem: VanTreesProblem, spec: EstimatorSpec, config: McConfig, tag: int = 0):
    """Empirical ``C = E[(X - u)(x)(X - u)]`` and its comparison with the bound.

    Returns ``(C, diagnostics)`` where ``diagnostics`` holds the standard
    errors of ``C``, the Loewner gap ``min eig(C - D^{-1})`` with its batch
    standard error, and the pass verdict ``gap >= -3 se``.
    """

    def fn(rng, size):
        u, xs = draw_problem(problem, rng, size)
        err = symspace.half_vec(spec(xs, problem.model_p) - u)
        return err[:, :, None] * err[:, None, :]

    means = batch_means(fn, config, tag)
    c, se = summarize(means)
    report = van_trees_bound(problem)
    gap, gap_se = min_eig_with_se(means, report.dense_bound)
    return c, {
        "se": se,
        "bound": report.dense_bound,
        "gap": gap,
        "gap_se": gap_se,
        "tolerance": -3.0 * gap_se,
        "passed": bool(gap >= -3.0 * gap_se),
    }


@dataclass(frozen=True, eq=False)
class JointMatrixEstimate:
    """Monte Carlo estimate of the ``2m x 2m`` Van Trees matrix."""

    matrix: np.ndarray
    se: np.ndarray
    min_eig: float
    min_eig_se: float
    m: int
    batch_matrices: np.ndarray | None = None

    @property
    def batch_c_blocks(self) -> np.ndarray:
        """Per-batch means of the ``C`` block, for Loewner-gap standard errors."""
        return self.batch_matrices[:, : self.m, : self.m]

    @property
    def c_block(self) -> np.ndarray:
        return self.matrix[: self.m, : self.m]

    @property
    def cross_block(self) -> np.ndarray:
        return self.matrix[: self.m, self.m :]

    @property
    def d_block(self) -> np.ndarray:
        return self.matrix[self.m :, self.m :]

    def block_se(self, which: str) -> np.ndarray:
        m = self.m
        return {
            "c": self.se[:m, :m],
            "cross": self.se[:m, m:],
            "d": self.se[m:, m:],
        }[which]


def van_trees_joint_matrix(problem: VanTreesProblem, spec: EstimatorSpec, config: McConfig, tag: int = 0):
    """Estimate ``E[z z^T]`` for ``z = (X - u, g'(u) + sum_i l'_{x_i}(u))``.

    The expectation is the block matrix ``[[C, I], [I, D]]``; its smallest
    eigenvalue is reported with a batch standard error.
    """
    means = batch_means(lambda rng, size: _joint_vectors(problem, spec, rng, size), config, tag)
    mat, se = summarize(means)
    lo, lo_se = min_eig_with_se(means)
    return JointMatrixEstimate(symspace.sym(mat), se, lo, lo_se, problem.m, means)


def assemble_reference(problem: VanTreesProblem, c_dense) -> np.ndarray:
    """``[[C, I], [I, D]]`` with the closed-form ``D``."""
    d = van_trees_bound(problem).information.to_dense()
    return assemble_joint(c_dense, np.eye(problem.m), d)
