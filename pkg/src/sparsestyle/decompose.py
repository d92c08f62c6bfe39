"""Alternating sparse factorisation ``X ~ W C`` of an animation matrix.

``X`` is F x 3N (frames by stacked joint coordinates), ``W`` F x K holds the
per-frame activations and ``C`` K x 3N the sparse components. Sparsity is a
hard cap on the non-zeros of every component row, i.e. on how many joint
coordinates a component may move.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .linalg import SparsityBudget, hard_threshold, sparse_code_rows, svd

__all__ = [
    "Decomposition",
    "BasicMotionChain",
    "init_components",
    "optimize_weights",
    "optimize_components",
    "decompose",
    "extract_basic_chain",
    "objective",
]

log = logging.getLogger(__name__)

ZERO_ROW = 1e-12


def objective(X, W, C) -> float:
    """Squared Frobenius residual ``||X - W C||_F^2``."""
    R = X - W @ C
    return float(np.vdot(R, R))


@dataclass(frozen=True, eq=False)
class Decomposition:
    W: np.ndarray
    C: np.ndarray
    sparsity: SparsityBudget
    objective_trace: tuple = field(default=())

    @property
    def n_components(self) -> int:
        return self.C.shape[0]

    def reconstruction(self) -> np.ndarray:
        return self.W @ self.C

    def row_nnz(self) -> np.ndarray:
        return np.count_nonzero(self.C, axis=1)


@dataclass(frozen=True, eq=False)
class BasicMotionChain:
    """Terms peeled off the input one after another, plus what is left."""

    terms: tuple
    residual: np.ndarray

    @property
    def schedule(self) -> list:
        return [t.sparsity for t in self.terms]

    def reconstruction(self) -> np.ndarray:
        """Sum of the term reconstructions, without the residual."""
        return sum(t.reconstruction() for t in self.terms)


def _vertex_energy(R):
    return (R * R).sum(axis=0).reshape(-1, 3).sum(axis=1)


def init_components(X, K, budget=None, method="projected", return_vertices=False):
    """Greedy max-variance initialisation.

    Each round picks the joint whose three columns carry the most energy in
    the current residual, takes the leading singular pair of that F x 3 block
    as the weight column, and subtracts the rank-one term.

    ``method="vertex"`` keeps the component supported on the chosen joint
    only. ``method="projected"`` (default) uses the same weight but sets the
    component row to the least-squares projection of the whole residual onto
    it, thresholded to ``budget``; other joints driven by the same signal are
    then absorbed in the same round instead of being picked again later.
    """
    X = np.asarray(X, dtype=float)
    F, M = X.shape
    if M % 3:
        raise DataError(f"animation matrix width {M} is not a multiple of 3")
    if not 1 <= K <= M:
        raise DataError(f"number of components must be in [1, {M}], got {K}")
    if method not in ("projected", "vertex"):
        raise DataError(f"unknown initialisation method {method!r}")
    count = M if budget is None else SparsityBudget.coerce(budget).resolve(M)

    R = X.copy()
    W = np.zeros((F, K))
    C = np.zeros((K, M))
    vertices = []
    for i in range(K):
        v = int(np.argmax(_vertex_energy(R)))
        cols = slice(3 * v, 3 * v + 3)
        top = svd(R[:, cols], rank=1)
        sigma = top.singular_values[0]
        vertices.append(v)
        if sigma == 0.0:
            # residual is exactly zero; the remaining pairs stay zero
            continue
        W[:, i] = top.U[:, 0] * sigma
        if method == "vertex":
            C[i, cols] = top.Vt[0]
        else:
            C[i] = hard_threshold(W[:, i] @ R / sigma**2, count)
        R -= np.outer(W[:, i], C[i])
    if return_vertices:
        return W, C, vertices
    return W, C


def optimize_weights(X, W, C, constraint=None):
    """One block-coordinate sweep over the weight columns.

    For each k the column is the exact minimiser with the other columns
    fixed, ``P(R_k C_k^T / (C_k C_k^T))`` with ``R_k = X - W C + W_k C_k``.
    ``constraint`` is None (no projection) or ``"box"`` (clip to [0, 1]).
    Components with an all-zero row leave their weight column untouched.
    """
    if constraint not in (None, "none", "box"):
        raise DataError(f"unknown weight constraint {constraint!r}")
    X = np.asarray(X, dtype=float)
    W = np.array(W, dtype=float)
    C = np.asarray(C, dtype=float)
    if X.shape != (W.shape[0], C.shape[1]) or W.shape[1] != C.shape[0]:
        raise DataError(f"shapes do not agree: X {X.shape}, W {W.shape}, C {C.shape}")
    E = X - W @ C
    for k in range(C.shape[0]):
        ck = C[k]
        denom = ck @ ck
        if denom < ZERO_ROW:
            log.debug("component %d is empty; weight column left unchanged", k)
            continue
        R = E + np.outer(W[:, k], ck)
        w = R @ ck / denom
        if constraint == "box":
            w = np.clip(w, 0.0, 1.0)
        E = R - np.outer(w, ck)
        W[:, k] = w
    return W


def optimize_components(X, W, budget, C0=None, iters=200, tol=1e-8):
    """Sparse components for fixed weights (thresholded gradient iteration).

    Every row of the result keeps at most ``budget.resolve(3N)`` non-zeros.
    Warm-started from ``C0`` the residual does not increase.
    """
    return sparse_code_rows(W, X, budget, iters=iters, tol=tol, X0=C0)


def decompose(
    X,
    K,
    budget,
    outer_iters=20,
    tol=1e-8,
    inner_iters=200,
    weight_constraint=None,
    init="projected",
    callback=None,
) -> Decomposition:
    """Initialise, then alternate components and weights updates.

    ``objective_trace`` holds the residual after initialisation followed by
    the value after each outer iteration. Iteration stops early once the
    relative improvement drops below ``tol``. ``callback(iteration, W, C)``
    is called after every components step.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"animation matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("animation matrix contains non-finite values")
    if outer_iters < 0:
        raise DataError("outer_iters must be >= 0")
    budget = SparsityBudget.coerce(budget)
    count = budget.resolve(X.shape[1])

    W, C = init_components(X, K, budget, method=init)
    C = hard_threshold(C, count)
    trace = [objective(X, W, C)]
    if not W.any():
        return Decomposition(W, C, budget, tuple(trace))

    for it in range(outer_iters):
        C = optimize_components(X, W, budget, C0=C, iters=inner_iters)
        if callback is not None:
            callback(it, W, C)
        W = optimize_weights(X, W, C, weight_constraint)
        trace.append(objective(X, W, C))
        log.debug("outer iteration %d: objective %.6g", it + 1, trace[-1])
        prev = trace[-2]
        if trace[-1] == 0.0 or prev - trace[-1] < tol * prev:
            break
    return Decomposition(W, C, budget, tuple(trace))


def extract_basic_chain(X, schedule, K, outer_iters=20, **kwargs) -> BasicMotionChain:
    """Peel one decomposition per sparsity level off the running residual.

    Each term decomposes what the previous terms left over (initialised
    afresh from that residual); ``sum(terms) + residual == X``.
    """
    X = np.asarray(X, dtype=float)
    if len(schedule) < 1:
        raise DataError("sparsity schedule must have at least one entry")
    residual = X.copy()
    terms = []
    for level in schedule:
        term = decompose(residual, K, level, outer_iters=outer_iters, **kwargs)
        terms.append(term)
        residual = residual - term.reconstruction()
    return BasicMotionChain(tuple(terms), residual)
