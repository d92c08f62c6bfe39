"""Core components (SVD of the component matrix) and motion synthesis.

``C = (U S) V^T = K V^T``: the core ``K`` carries component magnitudes and
``V^T`` is the coordinate basis. Two motions are mixed by blending or
exchanging cores expressed in the recipient's basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decompose import Decomposition
from .errors import DataError
from .linalg import svd
from .motion import MotionClip, NormStats, Skeleton, denormalize

__all__ = [
    "CoreDecomposition",
    "core_decompose",
    "project_into_basis",
    "blend_cores",
    "exchange_basic",
    "synthesize_clip",
]


@dataclass(frozen=True, eq=False)
class CoreDecomposition:
    W: np.ndarray  # F x K
    core: np.ndarray  # K x r
    basis: np.ndarray  # r x 3N, orthonormal rows

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def components(self) -> np.ndarray:
        return self.core @ self.basis

    def reconstruction(self) -> np.ndarray:
        return self.W @ self.core @ self.basis


def core_decompose(d: Decomposition, rank=None) -> CoreDecomposition:
    """SVD of the component matrix; ``rank`` truncates the basis."""
    res = svd(d.C, rank=rank)
    return CoreDecomposition(d.W, res.U * res.singular_values, res.Vt)


def project_into_basis(target: CoreDecomposition, source) -> np.ndarray:
    """Coordinates of ``source``'s components in ``target``'s basis.

    ``source`` is a Decomposition, a CoreDecomposition or a raw component
    matrix; the result is ``C_source V_target``, shaped like a core.
    """
    if isinstance(source, Decomposition):
        C = source.C
    elif isinstance(source, CoreDecomposition):
        C = source.components
    else:
        C = np.asarray(source, dtype=float)
    if C.shape[1] != target.basis.shape[1]:
        raise DataError(f"component width {C.shape[1]} does not match basis width {target.basis.shape[1]}")
    return C @ target.basis.T


def blend_cores(cd1: CoreDecomposition, core2, alpha) -> np.ndarray:
    """``W1 ((1 - alpha) K1 + alpha K2) V1^T`` in normalised units."""
    core2 = np.asarray(core2, dtype=float)
    if not 0.0 <= alpha <= 1.0:
        raise DataError(f"alpha must lie in [0, 1], got {alpha}")
    if core2.shape != cd1.core.shape:
        raise DataError(f"core shape {core2.shape} does not match {cd1.core.shape}")
    # written as K1 + alpha (K2 - K1): alpha = 0 reproduces the recipient exactly
    return cd1.W @ (cd1.core + alpha * (core2 - cd1.core)) @ cd1.basis


def exchange_basic(chain1, chain2, index) -> np.ndarray:
    """Recipient chain with term ``index`` (0-based) driven by the donor's core.

    Both arguments are sequences of CoreDecomposition of equal length; the
    donor term is projected into the recipient term's basis first.
    """
    chain1, chain2 = list(chain1), list(chain2)
    if len(chain1) != len(chain2):
        raise DataError(f"chains differ in length: {len(chain1)} vs {len(chain2)}")
    if not 0 <= index < len(chain1):
        raise DataError(f"term index {index} out of range for a chain of {len(chain1)}")
    out = None
    for j, term in enumerate(chain1):
        if j == index:
            donor = project_into_basis(term, chain2[j])
            if donor.shape != term.core.shape:
                raise DataError(f"donor core shape {donor.shape} does not match {term.core.shape}")
            part = term.W @ donor @ term.basis
        else:
            part = term.reconstruction()
        out = part if out is None else out + part
    return out


def synthesize_clip(matrix, stats: NormStats, skeleton: Skeleton, fps) -> MotionClip:
    """Map a normalised matrix back to scene units on the recipient's skeleton."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[1] != 3 * skeleton.n_joints:
        raise DataError(f"matrix width {matrix.shape[1]} does not fit {skeleton.n_joints} joints")
    return MotionClip(skeleton, denormalize(matrix, stats), fps)
