"""Versioned JSON artifacts: clips, decompositions and basic-motion chains.

Numbers are written as decimals rounded to 9 significant digits. Loading a
saved file yields exactly those rounded values, so a load/save cycle
reproduces the file byte for byte.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .decompose import BasicMotionChain, Decomposition
from .errors import DataError, FormatError
from .linalg import SparsityBudget
from .motion import MotionClip, NormStats, Skeleton

__all__ = [
    "FORMAT_VERSION",
    "quantize",
    "save_clip",
    "load_clip",
    "export_csv",
    "DecompositionRecord",
    "ChainRecord",
    "save_decomposition",
    "load_decomposition",
    "save_chain",
    "load_chain",
    "save_normalized",
    "load_normalized",
    "dumps",
]

FORMAT_VERSION = 1
SIGNIFICANT_DIGITS = 9

_number = {"type": "number"}
_vector = {"type": "array", "items": _number}
_matrix = {"type": "array", "items": _vector}

_SKELETON = {
    "joint_names": {"type": "array", "items": {"type": "string"}, "minItems": 1},
    "parents": {"type": "array", "items": {"type": "integer", "minimum": -1}},
    "ref_bone_lengths": _vector,
}
_NORM = {
    "type": "object",
    "required": ["mean_pose", "std"],
    "properties": {"mean_pose": _vector, "std": _vector},
}
_BUDGET = {
    "type": "object",
    "oneOf": [
        {"required": ["count"], "properties": {"count": {"type": "integer", "minimum": 1}}},
        {"required": ["fraction"], "properties": {"fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}}},
    ],
}
_HEADER = {"format": {"type": "string"}, "version": {"type": "integer"}, "meta": {"type": "object"}}

CLIP_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "joint_names", "parents", "ref_bone_lengths", "fps", "frames"],
    "properties": {
        **_HEADER,
        **_SKELETON,
        "fps": {"type": "number", "exclusiveMinimum": 0},
        "frames": {"type": "array", "minItems": 2, "items": {"type": "array", "items": {
            "type": "array", "items": _number, "minItems": 3, "maxItems": 3}}},
    },
}
_TERM = {
    "type": "object",
    "required": ["K", "sparsity", "W", "C_shape", "C", "objective_trace"],
    "properties": {
        "K": {"type": "integer", "minimum": 1},
        "sparsity": _BUDGET,
        "W": _matrix,
        "C_shape": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "C": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3, "prefixItems": [
            {"type": "integer", "minimum": 0}, {"type": "integer", "minimum": 0}, _number]}},
        "objective_trace": _vector,
    },
}
_CONTEXT = {
    "norm_stats": _NORM,
    "skeleton": {"type": "object", "required": list(_SKELETON), "properties": _SKELETON},
    "fps": {"type": "number", "exclusiveMinimum": 0},
}
DECOMPOSITION_SCHEMA = {
    "type": "object",
    "required": ["format", "version", *_TERM["required"], "norm_stats", "skeleton", "fps"],
    "properties": {**_HEADER, **_TERM["properties"], **_CONTEXT},
}
NORMALIZED_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "matrix", "norm_stats", "skeleton", "fps"],
    "properties": {**_HEADER, "matrix": _matrix, **_CONTEXT},
}
CHAIN_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "terms", "residual", "norm_stats", "skeleton", "fps"],
    "properties": {**_HEADER, "terms": {"type": "array", "minItems": 1, "items": _TERM}, "residual": _matrix, **_CONTEXT},
}


def quantize(a) -> np.ndarray:
    """Round to the serialisation precision (9 significant digits)."""
    a = np.asarray(a, dtype=float)
    flat = [float(f"{v:.{SIGNIFICANT_DIGITS}g}") for v in a.ravel()]
    return np.array(flat, dtype=float).reshape(a.shape)


def _listify(a):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise FormatError("refusing to serialise non-finite values")
    return quantize(a).tolist()


def _reject_constant(name):
    raise FormatError(f"non-finite value {name} in artifact")


def dumps(doc) -> str:
    return json.dumps(doc, allow_nan=False, separators=(",", ":"))


def _write(path, doc):
    Path(path).write_text(dumps(doc) + "\n")


def _read(path, kind, schema):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != kind:
        raise FormatError(f"{path}: expected a {kind!r} document")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FormatError(f"{path}: schema violation at {where}: {exc.message}") from exc
    return doc


def _skeleton_doc(skel: Skeleton) -> dict:
    return {
        "joint_names": list(skel.joint_names),
        "parents": list(skel.parents),
        "ref_bone_lengths": _listify(skel.ref_bone_lengths),
    }


def _skeleton_from(doc) -> Skeleton:
    return Skeleton(doc["joint_names"], doc["parents"], doc["ref_bone_lengths"])


def clip_document(clip: MotionClip, meta=None) -> dict:
    doc = {"format": "sparsestyle.clip", "version": FORMAT_VERSION, **_skeleton_doc(clip.skeleton)}
    doc["fps"] = float(quantize(clip.fps))
    doc["frames"] = _listify(clip.frames)
    if meta:
        doc["meta"] = meta
    return doc


def save_clip(path, clip: MotionClip, meta=None) -> None:
    _write(path, clip_document(clip, meta))


def load_clip(path, with_meta=False):
    doc = _read(path, "sparsestyle.clip", CLIP_SCHEMA)
    try:
        clip = MotionClip(_skeleton_from(doc), np.array(doc["frames"], dtype=float), doc["fps"])
    except DataError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return (clip, doc.get("meta", {})) if with_meta else clip


def export_csv(path, clip: MotionClip) -> None:
    """One row per frame, columns ``<joint>.x``, ``<joint>.y``, ``<joint>.z``."""
    header = [f"{name}.{axis}" for name in clip.skeleton.joint_names for axis in "xyz"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in quantize(clip.matrix):
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True, eq=False)
class DecompositionRecord:
    """A decomposition plus what is needed to map it back to a clip."""

    decomposition: Decomposition
    norm_stats: NormStats
    skeleton: Skeleton
    fps: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ChainRecord:
    chain: BasicMotionChain
    norm_stats: NormStats
    skeleton: Skeleton
    fps: float
    meta: dict = field(default_factory=dict)


def _term_doc(d: Decomposition) -> dict:
    C = quantize(d.C)
    rows, cols = np.nonzero(C)
    return {
        "K": int(d.n_components),
        "sparsity": d.sparsity.to_dict(),
        "W": _listify(d.W),
        "C_shape": list(C.shape),
        "C": [[int(r), int(c), float(C[r, c])] for r, c in zip(rows, cols)],
        "objective_trace": _listify(d.objective_trace),
    }


def _term_from(doc, path) -> Decomposition:
    K, M = doc["C_shape"]
    C = np.zeros((K, M))
    for r, c, v in doc["C"]:
        if not (0 <= r < K and 0 <= c < M):
            raise FormatError(f"{path}: component entry ({r}, {c}) outside {K} x {M}")
        C[r, c] = v
    W = np.array(doc["W"], dtype=float)
    if K != doc["K"] or W.ndim != 2 or W.shape[1] != K:
        raise FormatError(f"{path}: W shape {W.shape} inconsistent with K = {doc['K']}")
    budget = SparsityBudget(**doc["sparsity"])
    return Decomposition(W, C, budget, tuple(doc["objective_trace"]))


def _context_doc(norm_stats, skeleton, fps, meta) -> dict:
    doc = {
        "norm_stats": {"mean_pose": _listify(norm_stats.mean_pose), "std": _listify(norm_stats.std)},
        "skeleton": _skeleton_doc(skeleton),
        "fps": float(quantize(fps)),
    }
    if meta:
        doc["meta"] = meta
    return doc


def _context_from(doc, path):
    try:
        stats = NormStats(doc["norm_stats"]["mean_pose"], doc["norm_stats"]["std"])
        skeleton = _skeleton_from(doc["skeleton"])
    except DataError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if stats.mean_pose.shape[0] != 3 * skeleton.n_joints:
        raise FormatError(f"{path}: norm stats width does not match the skeleton")
    return stats, skeleton, doc["fps"], doc.get("meta", {})


def save_decomposition(path, record: DecompositionRecord) -> None:
    doc = {"format": "sparsestyle.decomposition", "version": FORMAT_VERSION, **_term_doc(record.decomposition)}
    doc.update(_context_doc(record.norm_stats, record.skeleton, record.fps, record.meta))
    _write(path, doc)


def load_decomposition(path) -> DecompositionRecord:
    doc = _read(path, "sparsestyle.decomposition", DECOMPOSITION_SCHEMA)
    d = _term_from(doc, path)
    stats, skeleton, fps, meta = _context_from(doc, path)
    if d.C.shape[1] != stats.mean_pose.shape[0]:
        raise FormatError(f"{path}: component width does not match the norm stats")
    return DecompositionRecord(d, stats, skeleton, fps, meta)


def save_chain(path, record: ChainRecord) -> None:
    doc = {
        "format": "sparsestyle.chain",
        "version": FORMAT_VERSION,
        "terms": [_term_doc(t) for t in record.chain.terms],
        "residual": _listify(record.chain.residual),
    }
    doc.update(_context_doc(record.norm_stats, record.skeleton, record.fps, record.meta))
    _write(path, doc)


def load_chain(path) -> ChainRecord:
    doc = _read(path, "sparsestyle.chain", CHAIN_SCHEMA)
    terms = tuple(_term_from(t, path) for t in doc["terms"])
    residual = np.array(doc["residual"], dtype=float)
    stats, skeleton, fps, meta = _context_from(doc, path)
    return ChainRecord(BasicMotionChain(terms, residual), stats, skeleton, fps, meta)


def save_normalized(path, matrix, norm_stats, skeleton, fps, meta=None) -> None:
    """Normalised F x 3N matrix with the statistics that undo it."""
    doc = {"format": "sparsestyle.normalized", "version": FORMAT_VERSION, "matrix": _listify(matrix)}
    doc.update(_context_doc(norm_stats, skeleton, fps, meta))
    _write(path, doc)


def load_normalized(path):
    """Returns ``(matrix, norm_stats, skeleton, fps, meta)``."""
    doc = _read(path, "sparsestyle.normalized", NORMALIZED_SCHEMA)
    stats, skeleton, fps, meta = _context_from(doc, path)
    matrix = np.array(doc["matrix"], dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != stats.mean_pose.shape[0]:
        raise FormatError(f"{path}: matrix shape {matrix.shape} does not match the norm stats")
    return matrix, stats, skeleton, fps, meta
