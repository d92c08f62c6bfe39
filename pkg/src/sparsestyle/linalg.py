"""Sparse coding by iterative hard thresholding, plus the SVD used downstream.

The solver minimises ``||y - D x||^2`` subject to a cap on the number of
non-zero entries of ``x``: a gradient step with a scalar step length followed
by a projection onto the sparse set (keep the largest entries, zero the rest).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DataError, NumericalError

__all__ = [
    "SparsityBudget",
    "SvdResult",
    "hard_threshold",
    "iterate_hard_threshold",
    "sparse_code",
    "sparse_code_rows",
    "spectral_norm",
    "svd",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SparsityBudget:
    """Either a count of kept entries or a fraction of the vector length."""

    count: int | None = None
    fraction: float | None = None

    def __post_init__(self):
        if (self.count is None) == (self.fraction is None):
            raise DataError("give exactly one of count or fraction")
        if self.count is not None and self.count < 1:
            raise DataError(f"count must be >= 1, got {self.count}")
        if self.fraction is not None and not 0.0 < self.fraction <= 1.0:
            raise DataError(f"fraction must lie in (0, 1], got {self.fraction}")

    @classmethod
    def full(cls) -> "SparsityBudget":
        return cls(fraction=1.0)

    @classmethod
    def coerce(cls, value) -> "SparsityBudget":
        """Accept a budget, an int (count) or a float (fraction)."""
        if isinstance(value, SparsityBudget):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls(count=int(value))
        return cls(fraction=float(value))

    def resolve(self, n: int) -> int:
        """Number of entries kept in a vector of length ``n``."""
        if self.count is not None:
            return min(self.count, n)
        # round half up; Python's round() would send 0.5 to 0
        return min(n, max(1, math.floor(self.fraction * n + 0.5)))

    def to_dict(self) -> dict:
        return {"count": self.count} if self.count is not None else {"fraction": self.fraction}


def hard_threshold(x, count, axis=-1):
    """Keep the ``count`` largest-magnitude entries along ``axis``.

    Ties at the threshold keep the lower index.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    if count >= n:
        return x.copy()
    order = np.argsort(-np.abs(x), axis=axis, kind="stable")
    keep = np.take(order, np.arange(count), axis=axis)
    out = np.zeros_like(x)
    np.put_along_axis(out, keep, np.take_along_axis(x, keep, axis=axis), axis=axis)
    return out


def spectral_norm(M, max_iter=100_000, tol=1e-15, min_iter=100) -> float:
    """Largest singular value by power iteration on ``M^T M``."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if not np.all(np.isfinite(M)):
        raise DataError("spectral_norm: non-finite entries")
    if not M.any():
        return 0.0
    # fixed start vector: deterministic and almost surely not orthogonal to the top direction
    v = np.random.default_rng(0).standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(max_iter):
        w = M.T @ (M @ v)
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            # start vector in the null space; restart on the dominant column
            v = M[np.argmax(np.abs(M).sum(axis=1))].copy()
            v /= np.linalg.norm(v)
            continue
        v = w / lam_new
        if abs(lam_new - lam) <= tol * lam_new and it + 1 >= min_iter:
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(lam)


def iterate_hard_threshold(D, y, count, step=None, x0=None) -> Iterator[np.ndarray]:
    """Yield the iterates ``x <- H(x - step * D^T (D x - y))`` forever.

    ``y`` may be a matrix, in which case the code is a matrix too and the
    projection ``H`` keeps ``count`` entries in each *row* of the code.
    A vector ``y`` gives the plain vector iteration.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    if step is None:
        step = 1.0 / spectral_norm(D) ** 2
    shape = (D.shape[1],) + y.shape[1:]
    x = np.zeros(shape) if x0 is None else hard_threshold(x0, count, axis=-1)
    while True:
        x = hard_threshold(x - step * (D.T @ (D @ x - y)), count, axis=-1)
        yield x


def _objective(D, y, x):
    r = y - D @ x
    return float(np.vdot(r, r))


def _refit(D, y, support):
    x = np.zeros(D.shape[1])
    if len(support):
        x[support] = np.linalg.lstsq(D[:, support], y, rcond=None)[0]
    return x


def _exchange(D, y, x, count, max_pairs=4096):
    """Greedy swap search over supports, starting from that of ``x``.

    Moves replace one support entry, or two at once while the pair
    neighbourhood has at most ``max_pairs`` members; the first improving move
    is taken until none is left.
    """
    n = D.shape[1]
    support = set(np.flatnonzero(x))
    for j in range(n):
        if len(support) >= count:
            break
        support.add(j)
    best = _refit(D, y, sorted(support))
    best_obj = _objective(D, y, best)
    k = len(support)
    sizes = (1, 2) if math.comb(k, 2) * math.comb(n - k, 2) <= max_pairs else (1,)
    improved = True
    while improved:
        improved = False
        outside = [j for j in range(n) if j not in support]
        for r in sizes:
            for out in itertools.combinations(sorted(support), r):
                for into in itertools.combinations(outside, r):
                    trial_support = sorted(support.difference(out).union(into))
                    trial = _refit(D, y, trial_support)
                    trial_obj = _objective(D, y, trial)
                    if trial_obj < best_obj * (1 - 1e-12):
                        support, best, best_obj = set(trial_support), trial, trial_obj
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
    return best


def _run(iterates, x, iters, tol):
    for _, x_new in zip(range(iters), iterates):
        if np.max(np.abs(x_new - x), initial=0.0) < tol:
            return x_new
        x = x_new
    return x


def _validate_dictionary(D, y):
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    if D.ndim != 2 or y.shape[0] != D.shape[0]:
        raise DataError(f"dictionary {D.shape} and signal {y.shape} do not agree")
    if not (np.all(np.isfinite(D)) and np.all(np.isfinite(y))):
        raise DataError("sparse coding input contains non-finite values")
    scale = np.linalg.norm(D, axis=0)
    if not scale.any():
        raise DataError("dictionary has zero norm")
    scale[scale == 0] = 1.0
    return D, y, scale


def sparse_code(D, y, budget, iters=200, tol=1e-8, x0=None, refine=True):
    """Sparse code of the vector ``y`` in dictionary ``D``.

    Atoms are rescaled to unit norm before iterating; the support constraint
    is invariant to that scaling, and it stops the threshold from favouring
    atoms that merely have small norms. The step is ``1 / ||D^T D||_2``.

    With ``refine`` the iterate is polished: the support found by the
    iteration is refit by least squares, then single- and pair-entry
    support swaps are tried while they lower the residual, and the whole
    procedure is restarted from each single-atom fit. The best result wins. ``refine=False`` returns
    the bare thresholded iterate.
    """
    D, y, scale = _validate_dictionary(D, y)
    if y.ndim != 1:
        raise DataError("sparse_code expects a vector signal; use sparse_code_rows for matrices")
    if iters < 1:
        raise DataError("iters must be >= 1")
    n = D.shape[1]
    count = SparsityBudget.coerce(budget).resolve(n)
    Dn = D / scale
    step = 1.0 / spectral_norm(Dn) ** 2

    starts = [np.zeros(n) if x0 is None else np.asarray(x0, dtype=float) * scale]
    if refine:
        for j in range(n):
            e = np.zeros(n)
            e[j] = Dn[:, j] @ y
            starts.append(e)

    best, best_obj = None, np.inf
    for start in starts:
        start = hard_threshold(start, count)
        x = _run(iterate_hard_threshold(Dn, y, count, step, start), start, iters, tol)
        if refine:
            x = _exchange(Dn, y, _refit(Dn, y, np.flatnonzero(x)), count)
        obj = _objective(Dn, y, x)
        if obj < best_obj:
            best, best_obj = x, obj
    return best / scale


def sparse_code_rows(D, Y, budget, iters=200, tol=1e-8, X0=None):
    """Jointly code the columns of ``Y`` with a per-row sparsity cap on the code.

    Returns an ``n x p`` code ``X`` with ``Y ~ D X`` where every row of ``X``
    keeps at most ``budget.resolve(p)`` non-zeros. Starting from a feasible
    ``X0`` the residual never increases: each thresholded step with step
    length ``1/L`` is a majorise-minimise step, and the final per-column
    least-squares refit on the found support can only lower it further.
    """
    D, Y, scale = _validate_dictionary(D, Y)
    if Y.ndim != 2:
        raise DataError("sparse_code_rows expects a matrix signal")
    p = Y.shape[1]
    count = SparsityBudget.coerce(budget).resolve(p)
    Dn = D / scale
    step = 1.0 / spectral_norm(Dn) ** 2
    start = np.zeros((D.shape[1], p)) if X0 is None else hard_threshold(np.asarray(X0, float) * scale[:, None], count)
    Z = _run(iterate_hard_threshold(Dn, Y, count, step, start), start, iters, tol)

    refit = np.zeros_like(Z)
    for j in range(p):
        refit[:, j] = _refit(Dn, Y[:, j], np.flatnonzero(Z[:, j]))
    if _objective(Dn, Y, refit) <= _objective(Dn, Y, Z):
        Z = refit
    return Z / scale[:, None]


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.Vt


def _round_robin(n):
    """Rounds of disjoint column pairs covering every pair once (circle method)."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            p, q = np.array(pairs).T
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(A, max_sweeps):
    """One-sided Jacobi on a tall matrix. Returns (A V, V) with orthogonal columns in A V."""
    m, n = A.shape
    A = A.copy()
    V = np.eye(n)
    rounds = _round_robin(n)
    tol = 4 * _EPS * math.sqrt(m)
    # columns at rounding level of the whole matrix count as zero; without
    # this, rank-deficient inputs keep rotating noise against noise forever
    negligible = (m * _EPS * np.linalg.norm(A)) ** 2
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            ap, aq = A[:, p], A[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > negligible)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for M in (A, V):
                mp, mq = M[:, p].copy(), M[:, q].copy()
                M[:, p] = c * mp - s * mq
                M[:, q] = s * mp + c * mq
        if not rotated:
            return A, V
    raise NumericalError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _complete_basis(U, good):
    """Fill the columns of U not flagged ``good`` with an orthonormal completion."""
    m, r = U.shape
    G = U[:, good]
    Q, _ = np.linalg.qr(np.hstack([G, np.eye(m)]))
    filler = Q[:, G.shape[1]:r]
    out = U.copy()
    out[:, ~good] = filler
    return out


def svd(M, rank=None, max_sweeps=60) -> SvdResult:
    """Thin SVD by one-sided Jacobi rotations.

    Singular values come out non-increasing; each column of ``U`` is signed so
    that its largest-magnitude entry is positive.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DataError(f"svd expects a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DataError("svd: non-finite entries")
    m, n = M.shape
    transposed = m < n
    A = M.T if transposed else M
    AV, V = _jacobi(A, max_sweeps)

    sigma = np.linalg.norm(AV, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, AV, V = sigma[order], AV[:, order], V[:, order]
    # same threshold under which _jacobi stops rotating a column
    cutoff = A.shape[0] * _EPS * np.linalg.norm(A)
    good = sigma > cutoff
    U = np.zeros_like(AV)
    U[:, good] = AV[:, good] / sigma[good]
    if not good.all():
        U = _complete_basis(U, good)
        sigma = np.where(good, sigma, 0.0)

    if transposed:
        U, V = V, U
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[idx, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    U = U * signs
    Vt = (V * signs).T

    if rank is not None:
        U, sigma, Vt = U[:, :rank], sigma[:rank], Vt[:rank]
    return SvdResult(U, sigma, Vt)
