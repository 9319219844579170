"""Command-line entry point: ``skesim <subcommand> ...``.

Exit codes: 0 success, 1 I/O failure (missing or unreadable files), 2 invalid
input or configuration. Diagnostics go to stderr; data goes to files only.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SkesimError
from .lobe import Lobe, LobeParams, build_lobe, region_polygon
from .netpbm import read_gray, write_pbm, write_ppm
from .render import render_skeleton, render_slice
from .skeleton import Skeleton, read_csv, validate, write_csv
from .stats import TrainingStats, extract_samples, fit, load_stats, save_stats
from .synthesis import GrowthConfig, RegionBoundary, load_region, synthesize
from .thinning import BinaryImage, extract_graph, thin
from .volume import CHANNEL, LOBE, ChannelParams, GridSpec, LabeledGrid3, rasterize

__all__ = ["main", "RunConfig", "load_run_config", "run_pipeline", "derive_seed", "SEED_STRIDE"]

log = logging.getLogger("skesim")

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2
SEED_STRIDE = 10007
# root sits this fraction of the lobe length inside the apex, so it is strictly inside the outline
ROOT_INSET = 0.02


class StageError(Exception):
    def __init__(self, stage: str, code: int, message: str):
        super().__init__(message)
        self.stage, self.code = stage, code


def _exit_code(exc: BaseException) -> int:
    return EXIT_IO if isinstance(exc, OSError) else EXIT_INVALID


class _Stage:
    """Context manager that tags failures with a pipeline stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, et, exc, tb):
        if exc is None or isinstance(exc, StageError):
            return False
        if isinstance(exc, (OSError, SkesimError, ValueError, KeyError, TypeError)):
            raise StageError(self.name, _exit_code(exc), _describe(exc)) from exc
        return False


def _describe(exc: BaseException) -> str:
    if isinstance(exc, FileNotFoundError):
        return f"no such file: {exc.filename}"
    if isinstance(exc, OSError) and exc.filename:
        return f"{exc.filename}: {exc.strerror}"
    if isinstance(exc, KeyError):
        return f"missing key {exc}"
    return str(exc)


def derive_seed(seed: int, lobe_index: int, system_index: int) -> int:
    return int(seed) + lobe_index * SEED_STRIDE + system_index


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


# ---------------------------------------------------------------- run config

@dataclass
class RunConfig:
    training_image: Path
    root_hint: tuple[float, float]
    lobes: list[LobeParams]
    channel: ChannelParams
    growth: dict = field(default_factory=dict)
    systems_per_lobe: int = 1
    system_depth_step: float = 0.0
    length_scale: float = 1.0
    invert: bool = False
    prune: int = 3
    grid: dict = field(default_factory=lambda: {"dims": [128, 128, 64]})
    seed: int = 0
    output: Path = Path("out")
    name: str = "run"

    def check(self) -> None:
        if int(self.systems_per_lobe) < 1:
            raise ConfigError("systems_per_lobe must be >= 1")
        if not self.lobes:
            raise ConfigError("config lists no lobes")
        if not self.length_scale > 0:
            raise ConfigError("length_scale must be positive")
        if not self.training_image.is_file():
            raise FileNotFoundError(2, "No such file or directory", str(self.training_image))
        unknown = set(self.growth) - {"max_bif_steps", "root_mark", "min_edge_length"}
        if unknown:
            raise ConfigError(f"unknown growth keys: {sorted(unknown)}")


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    base = path.parent
    try:
        cfg = RunConfig(
            training_image=base / obj["training_image"],
            root_hint=tuple(float(v) for v in obj["root_hint"]),
            lobes=[LobeParams.from_json(o) for o in obj["lobes"]],
            channel=ChannelParams.from_json(obj["channel"]),
            growth=dict(obj.get("growth", {})),
            systems_per_lobe=int(obj.get("systems_per_lobe", 1)),
            system_depth_step=float(obj.get("system_depth_step", 0.0)),
            length_scale=float(obj.get("length_scale", 1.0)),
            invert=bool(obj.get("invert", False)),
            prune=int(obj.get("prune", 3)),
            grid=dict(obj.get("grid", {"dims": [128, 128, 64]})),
            seed=int(obj.get("seed", 0)),
            output=base / obj.get("output", "out"),
            name=str(obj.get("name", path.stem)),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from exc
    cfg.check()
    return cfg


def lobe_root(lobe: Lobe) -> tuple[tuple[float, float], tuple[float, float]]:
    """Root point just inside the lobe apex and the inflow along the lobe axis."""
    x, y = lobe.to_world(ROOT_INSET * lobe.length, 0.0)
    return (float(x), float(y)), lobe.axis_direction()


def grid_for(lobes: list[Lobe], grid: dict) -> GridSpec:
    if "origin" in grid and "spacing" in grid:
        return GridSpec(tuple(grid["origin"]), float(grid["spacing"]), tuple(grid["dims"]))
    lo = np.min([lb.bounds()[0] for lb in lobes], axis=0)
    hi = np.max([lb.bounds()[1] for lb in lobes], axis=0)
    return GridSpec.covering(lo, hi, grid.get("dims", [128, 128, 64]))


def _training_stats(cfg: RunConfig) -> tuple[Skeleton, TrainingStats]:
    with _Stage("skeletonize"):
        img = BinaryImage.from_gray(read_gray(cfg.training_image), invert=cfg.invert)
        sk = extract_graph(thin(img), cfg.root_hint, prune_length=cfg.prune)
    with _Stage("stats"):
        st = fit(extract_samples(sk))
        if cfg.length_scale != 1.0:
            st = TrainingStats(st.signed_angles, [v * cfg.length_scale for v in st.lengths],
                               st.angle_dist, st.length_dist.scaled(cfg.length_scale))
    return sk, st


def run_pipeline(cfg: RunConfig, out_dir: Path | None = None) -> dict:
    """Execute a whole run and return the manifest (also written to disk)."""
    out = Path(out_dir) if out_dir is not None else cfg.output
    with _Stage("output"):
        out.mkdir(parents=True, exist_ok=True)

    training, st = _training_stats(cfg)
    files: list[Path] = []
    with _Stage("stats"):
        write_csv(training, out / "training_skeleton.csv")
        save_stats(st, out / "stats.json")
        files += [out / "training_skeleton.csv", out / "stats.json"]

    with _Stage("lobe"):
        lobes = [build_lobe(p) for p in cfg.lobes]
        regions = [region_polygon(lb) for lb in lobes]
        spec = grid_for(lobes, cfg.grid)

    seeds, lobe_reports = [], []
    grid = LabeledGrid3.empty(spec)
    for li, (lobe, region) in enumerate(zip(lobes, regions)):
        systems = []
        root, inflow = lobe_root(lobe)
        for si in range(int(cfg.systems_per_lobe)):
            s = derive_seed(cfg.seed, li, si)
            with _Stage("synth"):
                gcfg = GrowthConfig(root_point=root, root_inflow=inflow, region=region,
                                    **cfg.growth)
                sk = synthesize(st, gcfg, s)
                bad = validate(sk)
                if bad:
                    raise ConfigError(f"lobe {li} system {si}: invalid skeleton: {bad[0]}")
                csv_path = out / f"lobe{li}_system{si}.csv"
                write_csv(sk, csv_path)
            files.append(csv_path)
            seeds.append({"lobe": li, "system": si, "seed": s, "skeleton": csv_path.name,
                          "edges": len(sk.edges)})
            systems.append((sk, cfg.channel, si * cfg.system_depth_step))
        with _Stage("rasterize"), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            own = rasterize(lobe, systems, spec)
            np.maximum(grid.labels, own.labels, out=grid.labels)
        for w in caught:
            log.warning("lobe %d: %s", li, w.message)
        c = own.counts()
        lobe_reports.append({"lobe": li, "lobe_cells": c[LOBE] + c[CHANNEL],
                             "channel_cells": c[CHANNEL]})

    with _Stage("write"):
        jpath, rpath = grid.write(out / "grid")
        files += [jpath, rpath]
        manifest = {
            "tool": "skesim",
            "version": __version__,
            "name": cfg.name,
            "seed": cfg.seed,
            "seed_rule": f"seed + lobe_index * {SEED_STRIDE} + system_index",
            "systems": seeds,
            "lobes": lobe_reports,
            "grid": {"dims": list(spec.dims), "origin": list(spec.origin),
                     "spacing": spec.spacing, "counts": grid.counts()},
            "inputs": {cfg.training_image.name: sha256_file(cfg.training_image)},
            "outputs": {p.name: sha256_file(p) for p in sorted(files)},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return manifest


def verify_manifest(path: str | Path) -> list[str]:
    """Names of outputs whose content no longer matches the manifest hash."""
    path = Path(path)
    m = json.loads(path.read_text(encoding="utf-8"))
    bad = []
    for name, digest in sorted(m.get("outputs", {}).items()):
        p = path.parent / name
        if not p.is_file() or sha256_file(p) != digest:
            bad.append(name)
    return bad


# ---------------------------------------------------------------- subcommands

def cmd_skeletonize(args) -> int:
    with _Stage("skeletonize"):
        img = BinaryImage.from_gray(read_gray(args.input), invert=args.invert)
        ps = thin(img)
        if args.thinned:
            write_pbm(args.thinned, ps.skeleton)
        sk = extract_graph(ps, args.root_hint, prune_length=args.prune)
        write_csv(sk, args.out)
    log.info("%s: %d nodes, %d edges", args.out, len(sk.nodes), len(sk.edges))
    return EXIT_OK


def cmd_stats(args) -> int:
    with _Stage("stats"):
        sk = read_csv(args.skeleton)
        st = fit(extract_samples(sk))
        if st.angle_dist.degenerate or st.length_dist.degenerate:
            log.warning("degenerate distribution fitted from %d edge(s): angle U[%g, %g], "
                        "length U[%g, %g]", len(sk.edges), st.angle_dist.lo, st.angle_dist.hi,
                        st.length_dist.lo, st.length_dist.hi)
        save_stats(st, args.out)
    return EXIT_OK


def _region_file(path) -> tuple[RegionBoundary | None, dict]:
    if path is None:
        return None, {}
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    extra = obj if isinstance(obj, dict) else {}
    return load_region(path), extra


def cmd_synth(args) -> int:
    with _Stage("synth"):
        st = load_stats(args.stats)
        region, extra = _region_file(args.region)
        root = args.root or tuple(extra.get("root", ()))
        if not root:
            root = tuple(region.centroid()) if region is not None else (0.0, 0.0)
        inflow = args.inflow or tuple(extra.get("inflow", (1.0, 0.0)))
        cfg = GrowthConfig(max_bif_steps=args.steps, root_point=tuple(root), root_inflow=inflow,
                           root_mark=args.root_mark, region=region,
                           min_edge_length=args.min_edge_length)
        sk = synthesize(st, cfg, args.seed)
        write_csv(sk, args.out)
        if args.plot:
            write_ppm(args.plot, render_skeleton(sk, region))
    log.info("%s: %d nodes, %d edges", args.out, len(sk.nodes), len(sk.edges))
    return EXIT_OK


def cmd_run(args) -> int:
    with _Stage("config"):
        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
    m = run_pipeline(cfg, args.out)
    for rep in m["lobes"]:
        log.info("lobe %d: %d lobe cells, %d channel cells", rep["lobe"], rep["lobe_cells"],
                 rep["channel_cells"])
    return EXIT_OK


def cmd_slice(args) -> int:
    with _Stage("slice"):
        grid = LabeledGrid3.read(args.grid)
        write_ppm(args.out, render_slice(grid, args.axis, args.index))
    return EXIT_OK


def cmd_verify(args) -> int:
    with _Stage("verify"):
        bad = verify_manifest(args.manifest)
    for name in bad:
        log.error("hash mismatch: %s", name)
    return EXIT_INVALID if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skesim", description="Tree-like channel system simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("skeletonize", help="thin a training image and extract its skeleton")
    p.add_argument("--in", dest="input", required=True, help="training image (PGM/PBM)")
    p.add_argument("--root-hint", type=_pair, required=True, metavar="X,Y",
                   help="pixel (column, row) near the channel source")
    p.add_argument("--out", required=True, help="skeleton CSV")
    p.add_argument("--thinned", help="also write the thinned bitmap (PBM)")
    p.add_argument("--invert", action="store_true", help="treat light pixels as channel")
    p.add_argument("--prune", type=int, default=3, metavar="N", help="spur length to remove")
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("stats", help="fit angle and length laws to a skeleton")
    p.add_argument("--skeleton", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="grow one skeleton realization")
    p.add_argument("--stats", required=True)
    p.add_argument("--region", help="region polygon JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="PPM plot of the realization")
    p.add_argument("--root", type=_pair, metavar="X,Y")
    p.add_argument("--inflow", type=_pair, metavar="DX,DY")
    p.add_argument("--root-mark", type=int, default=2, choices=(1, 2))
    p.add_argument("--min-edge-length", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="full pipeline from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("slice", help="render one slice of a voxel grid")
    p.add_argument("--grid", required=True, help="grid JSON header")
    p.add_argument("--axis", default="z", choices=("x", "y", "z"))
    p.add_argument("--index", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("verify", help="re-check the hashes in a run manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # a fresh handler per call so it always writes to the current stderr
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("skesim: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        return args.func(args)
    except StageError as exc:
        print(f"skesim {args.command}: {exc.stage}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    raise SystemExit(main())
