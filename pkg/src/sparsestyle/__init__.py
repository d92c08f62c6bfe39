"""Sparse style decomposition and synthesis of skeletal motion clips."""
from __future__ import annotations

__version__ = "0.1.0"

from .bvh import load_bvh, parse_bvh
from .decompose import BasicMotionChain, Decomposition, decompose, extract_basic_chain, objective
from .dtw import WarpPath, dtw_align, foot_signal, warp_pair
from .errors import DataError, FormatError, NumericalError, SparseStyleError
from .estimators import BasicMotionChainDecomposer, LimbLengthCorrector, MotionNormalizer, SparseMotionDecomposer
from .formats import load_chain, load_clip, load_decomposition, save_chain, save_clip, save_decomposition
from .linalg import SparsityBudget, hard_threshold, sparse_code, svd
from .motion import MotionClip, NormStats, Skeleton, denormalize, normalize, select_joints, subsample
from .postprocess import enforce_limb_lengths, measure_limb_lengths
from .synth import blend_cores, core_decompose, exchange_basic, project_into_basis, synthesize_clip

__all__ = [
    "__version__",
    "load_bvh", "parse_bvh",
    "BasicMotionChain", "Decomposition", "decompose", "extract_basic_chain", "objective",
    "WarpPath", "dtw_align", "foot_signal", "warp_pair",
    "DataError", "FormatError", "NumericalError", "SparseStyleError",
    "BasicMotionChainDecomposer", "LimbLengthCorrector", "MotionNormalizer", "SparseMotionDecomposer",
    "load_chain", "load_clip", "load_decomposition", "save_chain", "save_clip", "save_decomposition",
    "SparsityBudget", "hard_threshold", "sparse_code", "svd",
    "MotionClip", "NormStats", "Skeleton", "denormalize", "normalize", "select_joints", "subsample",
    "enforce_limb_lengths", "measure_limb_lengths",
    "blend_cores", "core_decompose", "exchange_basic", "project_into_basis", "synthesize_clip",
]
