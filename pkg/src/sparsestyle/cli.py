"""Command line interface: single-stage subcommands and the full pipeline.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Failures print one JSON object ``{"error": {...}}`` on standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .bvh import load_bvh
from .config import ConfigError, PipelineConfig
from .decompose import decompose, extract_basic_chain
from .dtw import dtw_align, foot_signal, warp_pair
from .errors import DataError, NumericalError, SparseStyleError
from .formats import (
    ChainRecord,
    DecompositionRecord,
    load_chain,
    load_clip,
    load_decomposition,
    load_normalized,
    export_csv,
    save_chain,
    save_clip,
    save_decomposition,
    save_normalized,
)
from .motion import MotionClip, normalize, select_joints, subsample
from .postprocess import enforce_limb_lengths, measure_limb_lengths
from .synth import blend_cores, core_decompose, exchange_basic, project_into_basis, synthesize_clip

log = logging.getLogger("sparsestyle")

STAGES = ("load", "warp", "normalize", "decompose", "synth", "fix-limbs")


class StageFailure(Exception):
    def __init__(self, stage, cause):
        super().__init__(str(cause))
        self.stage = stage
        self.cause = cause


@contextmanager
def _timed(stage):
    start = time.perf_counter()
    try:
        yield
    except SparseStyleError as exc:
        raise StageFailure(stage, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageFailure(stage, NumericalError(str(exc))) from exc
    log.info("stage %-9s %.3f s", stage, time.perf_counter() - start)


# ----------------------------------------------------------------- helpers


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _float_list(text):
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _read_clip(path, joints=None, fps=None) -> MotionClip:
    """Clip from a BVH or clip-JSON file, optionally reduced and subsampled."""
    path = Path(path)
    if path.suffix.lower() == ".bvh":
        try:
            text = path.read_text()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        clip = load_bvh(text, joints=joints)
    else:
        clip = load_clip(path)
        if joints is not None:
            clip = select_joints(clip, joints)
    if fps is not None and clip.fps != fps:
        clip = subsample(clip, fps)
    return clip


def _doc_format(path):
    try:
        with open(path) as fh:
            return json.load(fh).get("format")
    except (OSError, ValueError, AttributeError):
        return None


def _read_matrix(path):
    """``(X, stats, skeleton, fps)`` from a normalised artifact or a clip."""
    if _doc_format(path) == "sparsestyle.normalized":
        X, stats, skeleton, fps, _ = load_normalized(path)
        return X, stats, skeleton, fps
    clip = _read_clip(path)
    X, stats = normalize(clip)
    return X, stats, clip.skeleton, clip.fps


def _meta(cfg, stage):
    return {"config_hash": cfg.hash(), "stage": stage, "tool": f"sparsestyle {__version__}"}


def _check_finite(clip):
    if not np.all(np.isfinite(clip.frames)):
        raise NumericalError("synthesised positions are not finite")
    return clip


def _finish(clip, fix_limbs):
    # MotionClip rejects non-finite frames itself; report that as numerical
    try:
        return enforce_limb_lengths(clip) if fix_limbs else clip
    except DataError as exc:
        raise NumericalError(f"limb correction failed: {exc}") from exc


def _blend(rec1, rec2, alpha, rank):
    if rec1.decomposition.C.shape != rec2.decomposition.C.shape:
        raise DataError(
            f"decompositions are incompatible: components {rec1.decomposition.C.shape} vs {rec2.decomposition.C.shape}"
        )
    cd1 = core_decompose(rec1.decomposition, rank=rank)
    cd2 = core_decompose(rec2.decomposition, rank=rank)
    matrix = blend_cores(cd1, project_into_basis(cd1, cd2), alpha)
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("blended matrix is not finite")
    return synthesize_clip(matrix, rec1.norm_stats, rec1.skeleton, rec1.fps)


def _exchange(rec1, rec2, term, rank):
    t1, t2 = rec1.chain.terms, rec2.chain.terms
    if len(t1) != len(t2) or any(a.C.shape != b.C.shape for a, b in zip(t1, t2)):
        raise DataError("chains are incompatible: term counts or component shapes differ")
    cores1 = [core_decompose(t, rank=rank) for t in t1]
    cores2 = [core_decompose(t, rank=rank) for t in t2]
    matrix = exchange_basic(cores1, cores2, term - 1) + rec1.chain.residual
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("exchanged matrix is not finite")
    return synthesize_clip(matrix, rec1.norm_stats, rec1.skeleton, rec1.fps)


def _overrides(args):
    """Config overrides from the flags that were actually given."""
    o = {}

    def put(section, key, value):
        if value is not None:
            (o.setdefault(section, {}) if section else o)[key] = value

    g = vars(args)
    put(None, "joints", _csv_list(g["joints"]) if g.get("joints") else None)
    put(None, "fps", g.get("fps"))
    put("dtw", "joint", g.get("joint"))
    put("dtw", "axis", g.get("axis"))
    put("dtw", "band", g.get("band"))
    put("decompose", "K", g.get("K"))
    put("decompose", "f", g.get("sparsity"))
    put("decompose", "schedule", g.get("schedule"))
    put("decompose", "outer_iters", g.get("outer_iters"))
    put("decompose", "tol", g.get("tol"))
    put("decompose", "weight_constraint", g.get("weight_constraint"))
    put("synth", "mode", g.get("mode"))
    put("synth", "alpha", g.get("alpha"))
    put("synth", "rank", g.get("rank"))
    put("synth", "exchange_index", g.get("term"))
    if g.get("no_fix_limbs"):
        put("synth", "fix_limbs", False)
    return o


def _config(args, extra_io=None):
    overrides = _overrides(args)
    if extra_io:
        overrides["io"] = extra_io
    return PipelineConfig.load(getattr(args, "config", None), overrides)


# ------------------------------------------------------------- subcommands


def cmd_convert(args):
    cfg = _config(args)
    with _timed("load"):
        joints = cfg["joints"]
        clip = _read_clip(args.input, joints=joints, fps=args.fps)
        if Path(args.output).suffix.lower() == ".csv":
            export_csv(args.output, clip)
        else:
            save_clip(args.output, clip, _meta(cfg, "load"))
    log.info("%d frames, %d joints, %g fps -> %s", clip.n_frames, clip.n_joints, clip.fps, args.output)


def cmd_info(args):
    with _timed("load"):
        clip = _read_clip(args.input)
        measured = measure_limb_lengths(clip)
    skel = clip.skeleton
    if args.json:
        bones = [
            {"joint": n, "parent": None if p < 0 else skel.joint_names[p], "ref_length": float(r), "mean_length": float(m)}
            for n, p, r, m in zip(skel.joint_names, skel.parents, skel.ref_bone_lengths, measured)
        ]
        print(json.dumps({"frames": clip.n_frames, "joints": clip.n_joints, "fps": clip.fps, "bones": bones}, indent=2))
        return
    print(f"frames: {clip.n_frames}")
    print(f"joints: {clip.n_joints}")
    print(f"fps:    {clip.fps:g}")
    print(f"{'joint':<16}{'parent':<16}{'ref length':>12}{'mean length':>13}")
    for n, p, r, m in zip(skel.joint_names, skel.parents, skel.ref_bone_lengths, measured):
        print(f"{n:<16}{'-' if p < 0 else skel.joint_names[p]:<16}{r:>12.6g}{m:>13.6g}")


def cmd_normalize(args):
    cfg = _config(args)
    with _timed("normalize"):
        clip = _read_clip(args.input)
        X, stats = normalize(clip)
        save_normalized(args.output, X, stats, clip.skeleton, clip.fps, _meta(cfg, "normalize"))


def cmd_warp(args):
    cfg = _config(args)
    d = cfg["dtw"]
    with _timed("warp"):
        a, b = _read_clip(args.clip_a), _read_clip(args.clip_b)
        path, cost = dtw_align(foot_signal(a, d["joint"], d["axis"]), foot_signal(b, d["joint"], d["axis"]), d["band"])
        wa, wb = warp_pair(a, b, path)
        save_clip(args.out_a, wa, _meta(cfg, "warp"))
        save_clip(args.out_b, wb, _meta(cfg, "warp"))
    log.info("DTW cost %.6g, path length %d", cost, len(path))


def _decompose_matrix(X, cfg):
    dec = cfg["decompose"]
    d = decompose(X, dec["K"], dec["f"], outer_iters=dec["outer_iters"], tol=dec["tol"],
                  weight_constraint=dec["weight_constraint"])
    log.info("objective trace: %s", ", ".join(f"{v:.6g}" for v in d.objective_trace))
    return d


def _chain_matrix(X, cfg):
    dec = cfg["decompose"]
    chain = extract_basic_chain(X, dec["schedule"], dec["K"], outer_iters=dec["outer_iters"], tol=dec["tol"],
                                weight_constraint=dec["weight_constraint"])
    for f, t in zip(dec["schedule"], chain.terms):
        log.info("term f=%g objective trace: %s", f, ", ".join(f"{v:.6g}" for v in t.objective_trace))
    return chain


def cmd_decompose(args):
    cfg = _config(args)
    with _timed("decompose"):
        X, stats, skel, fps = _read_matrix(args.input)
        d = _decompose_matrix(X, cfg)
        save_decomposition(args.output, DecompositionRecord(d, stats, skel, fps, _meta(cfg, "decompose")))


def cmd_chain(args):
    cfg = _config(args)
    with _timed("decompose"):
        X, stats, skel, fps = _read_matrix(args.input)
        chain = _chain_matrix(X, cfg)
        save_chain(args.output, ChainRecord(chain, stats, skel, fps, _meta(cfg, "decompose")))


def cmd_synth_blend(args):
    cfg = _config(args)
    s = cfg["synth"]
    with _timed("synth"):
        clip = _blend(load_decomposition(args.recipient), load_decomposition(args.donor), s["alpha"], s["rank"])
    with _timed("fix-limbs"):
        clip = _check_finite(_finish(clip, s["fix_limbs"]))
        save_clip(args.output, clip, _meta(cfg, "synth"))


def cmd_synth_exchange(args):
    cfg = _config(args)
    s = cfg["synth"]
    with _timed("synth"):
        rec1, rec2 = load_chain(args.recipient), load_chain(args.donor)
        if not 1 <= s["exchange_index"] <= len(rec1.chain.terms):
            raise ConfigError(f"--term must lie in 1..{len(rec1.chain.terms)}")
        clip = _exchange(rec1, rec2, s["exchange_index"], s["rank"])
    with _timed("fix-limbs"):
        clip = _check_finite(_finish(clip, s["fix_limbs"]))
        save_clip(args.output, clip, _meta(cfg, "synth"))


def cmd_fix_limbs(args):
    cfg = _config(args)
    with _timed("fix-limbs"):
        clip = _read_clip(args.input)
        ref = None
        if args.measure_from:
            source = _read_clip(args.measure_from)
            if source.skeleton.joint_names != clip.skeleton.joint_names:
                raise DataError("--measure-from clip has a different joint set")
            ref = measure_limb_lengths(source)
        save_clip(args.output, enforce_limb_lengths(clip, ref), _meta(cfg, "fix-limbs"))


# ---------------------------------------------------------------- pipeline


class Pipeline:
    """Stage runner writing one artifact per stage into ``workdir``.

    Every stage reads only the artifacts of earlier stages, so a run can be
    restarted from any stage with ``start``.
    """

    def __init__(self, cfg: PipelineConfig, workdir, start="load"):
        self.cfg = cfg
        self.workdir = Path(workdir)
        self.start = STAGES.index(start)
        self.written = []
        self.completed = []
        self.result = None  # final clip before serialisation rounding

    def p(self, name):
        return self.workdir / name

    def _save_clip(self, name, clip, stage):
        save_clip(self.p(name), clip, _meta(self.cfg, stage))
        self.written.append(name)

    def run(self):
        self.workdir.mkdir(parents=True, exist_ok=True)
        try:
            for i, stage in enumerate(STAGES):
                if i < self.start:
                    continue
                with _timed(stage):
                    getattr(self, "stage_" + stage.replace("-", "_"))()
                self.completed.append(stage)
        except StageFailure:
            self._manifest("failed")
            raise
        self._manifest("ok")
        out = self.cfg["io"]["output"]
        if out:
            save_clip(out, load_clip(self.p("06_output.json")), _meta(self.cfg, "fix-limbs"))
        return self.p("06_output.json")

    def _manifest(self, status):
        doc = {
            "status": status,
            "config_hash": self.cfg.hash(),
            "config": self.cfg.data,
            "completed_stages": self.completed,
            "artifacts": self.written,
            "partial": status != "ok",
        }
        self.p("manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def stage_load(self):
        inputs = self.cfg["io"]["inputs"]
        if len(inputs) != 2:
            raise ConfigError("the pipeline needs exactly two input clips (recipient, donor)")
        for tag, path in zip("ab", inputs):
            clip = _read_clip(path, joints=self.cfg["joints"], fps=self.cfg["fps"])
            self._save_clip(f"01_input_{tag}.json", clip, "load")

    def stage_warp(self):
        d = self.cfg["dtw"]
        a, b = load_clip(self.p("01_input_a.json")), load_clip(self.p("01_input_b.json"))
        path, cost = dtw_align(foot_signal(a, d["joint"], d["axis"]), foot_signal(b, d["joint"], d["axis"]), d["band"])
        log.info("DTW cost %.6g, path length %d", cost, len(path))
        wa, wb = warp_pair(a, b, path)
        self._save_clip("02_warped_a.json", wa, "warp")
        self._save_clip("02_warped_b.json", wb, "warp")

    def stage_normalize(self):
        for tag in "ab":
            clip = load_clip(self.p(f"02_warped_{tag}.json"))
            X, stats = normalize(clip)
            name = f"03_normalized_{tag}.json"
            save_normalized(self.p(name), X, stats, clip.skeleton, clip.fps, _meta(self.cfg, "normalize"))
            self.written.append(name)

    def stage_decompose(self):
        exchange = self.cfg["synth"]["mode"] == "exchange"
        for tag in "ab":
            X, stats, skel, fps, _ = load_normalized(self.p(f"03_normalized_{tag}.json"))
            meta = _meta(self.cfg, "decompose")
            if exchange:
                name = f"04_chain_{tag}.json"
                save_chain(self.p(name), ChainRecord(_chain_matrix(X, self.cfg), stats, skel, fps, meta))
            else:
                name = f"04_decomposition_{tag}.json"
                save_decomposition(self.p(name), DecompositionRecord(_decompose_matrix(X, self.cfg), stats, skel, fps, meta))
            self.written.append(name)

    def stage_synth(self):
        s = self.cfg["synth"]
        if s["mode"] == "exchange":
            clip = _exchange(load_chain(self.p("04_chain_a.json")), load_chain(self.p("04_chain_b.json")),
                             s["exchange_index"], s["rank"])
        else:
            clip = _blend(load_decomposition(self.p("04_decomposition_a.json")),
                          load_decomposition(self.p("04_decomposition_b.json")), s["alpha"], s["rank"])
        self._save_clip("05_synth.json", clip, "synth")

    def stage_fix_limbs(self):
        clip = load_clip(self.p("05_synth.json"))
        clip = _check_finite(_finish(clip, self.cfg["synth"]["fix_limbs"]))
        self.result = clip
        self._save_clip("06_output.json", clip, "fix-limbs")


def cmd_pipeline(args):
    io = {"workdir": args.workdir}
    if args.inputs:
        io["inputs"] = args.inputs
    if args.output:
        io["output"] = args.output
    cfg = _config(args, io)
    out = Pipeline(cfg, cfg["io"]["workdir"], start=args.start).run()
    log.info("output clip: %s (config %s)", out, cfg.hash())


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsestyle", description="Sparse style decomposition and synthesis of motion clips.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("--config", help="JSON (or TOML on Python 3.11+) config; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    def dtw_flags(p):
        p.add_argument("--joint", help="joint whose coordinate drives the alignment (default LeftFoot)")
        p.add_argument("--axis", choices="xyz", help="coordinate axis (default y)")
        p.add_argument("--band", type=float, help="optional band half-width in frames")

    def decompose_flags(p):
        p.add_argument("-K", "--components", dest="K", type=int, help="number of components (default 10)")
        p.add_argument("--outer-iters", type=int, help="alternating iterations (default 20)")
        p.add_argument("--tol", type=float, help="relative improvement stopping tolerance")
        p.add_argument("--weight-constraint", choices=["box"], help="project weights onto [0, 1]")

    def synth_flags(p):
        p.add_argument("--rank", type=int, help="truncate the core basis to this rank")
        p.add_argument("--no-fix-limbs", action="store_true", help="skip limb-length correction")

    p = add("convert", cmd_convert, "convert BVH or clip JSON to clip JSON (.json) or CSV (.csv)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--joints", help="comma-separated joint names to keep")
    p.add_argument("--fps", type=float, help="subsample to this frame rate (integer stride)")

    p = add("info", cmd_info, "print frame count, joint count, fps and bone lengths")
    p.add_argument("input")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = add("normalize", cmd_normalize, "z-normalise a clip into an animation matrix artifact")
    p.add_argument("input")
    p.add_argument("output")

    p = add("warp", cmd_warp, "time-align two clips by DTW on a joint coordinate")
    p.add_argument("clip_a")
    p.add_argument("clip_b")
    p.add_argument("out_a")
    p.add_argument("out_b")
    dtw_flags(p)

    p = add("decompose", cmd_decompose, "sparse decomposition of a clip or normalised matrix")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("-f", "--sparsity", type=float, help="non-zero fraction per component row (default 0.1)")
    decompose_flags(p)

    p = add("chain", cmd_chain, "basic-motion chain over a sparsity schedule")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--schedule", type=_float_list, help="comma-separated fractions (default 0.1,0.3,0.6)")
    decompose_flags(p)

    p = add("synth-blend", cmd_synth_blend, "blend the donor's core into the recipient")
    p.add_argument("recipient")
    p.add_argument("donor")
    p.add_argument("output")
    p.add_argument("--alpha", type=float, help="blend weight in [0, 1] (default 0.5)")
    synth_flags(p)

    p = add("synth-exchange", cmd_synth_exchange, "swap one basic-motion term for the donor's")
    p.add_argument("recipient")
    p.add_argument("donor")
    p.add_argument("output")
    p.add_argument("--term", type=int, help="1-based index of the exchanged term (default 1)")
    synth_flags(p)

    p = add("fix-limbs", cmd_fix_limbs, "rescale bones to reference lengths")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--measure-from", help="take reference lengths as mean bone lengths of this clip")

    p = add("pipeline", cmd_pipeline, "run load, warp, normalize, decompose, synth and fix-limbs")
    p.add_argument("inputs", nargs="*", help="recipient and donor clips (BVH or clip JSON)")
    p.add_argument("--workdir", default="work", help="directory for stage artifacts")
    p.add_argument("-o", "--output", help="also copy the final clip here")
    p.add_argument("--start", choices=STAGES, default="load", help="restart from this stage using existing artifacts")
    p.add_argument("--joints", help="comma-separated joint names to keep")
    p.add_argument("--fps", type=float, help="target frame rate (default 30)")
    p.add_argument("--mode", choices=["blend", "exchange"])
    p.add_argument("-f", "--sparsity", type=float)
    p.add_argument("--schedule", type=_float_list)
    p.add_argument("--alpha", type=float)
    p.add_argument("--term", type=int)
    dtw_flags(p)
    decompose_flags(p)
    synth_flags(p)
    return parser


def _report(exc, stage=None):
    err = {"type": type(exc).__name__, "exit_code": exc.exit_code, "message": str(exc)}
    if stage:
        err["stage"] = stage
    print(json.dumps({"error": err}), file=sys.stderr)
    return exc.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        args.func(args)
    except StageFailure as exc:
        return _report(exc.cause, exc.stage)
    except SparseStyleError as exc:
        return _report(exc)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
