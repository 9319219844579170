"""Synthetic training image and the three demo run configurations.

``python -m skesim.demo DIR`` regenerates ``DIR/training_tree.pgm`` and the
``scenario_*.json`` configs shipped in ``configs/``.
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from .netpbm import write_pgm

__all__ = ["tree_segments", "draw_training_image", "scenario_configs", "write_demo"]

TRAINING_SHAPE = (160, 224)  # rows, cols
TRAINING_ROOT = (12, 80)  # (col, row) image coordinates of the trunk start

# (left turn, right turn) in degrees and child length per generation
_TURNS = [(28.0, -34.0), (38.0, -22.0), (25.0, -30.0)]
_LENGTHS = [44.0, 34.0, 26.0, 20.0]


def tree_segments():
    """Centre lines of a depth-3 binary tree as ``((c0, r0), (c1, r1))`` pairs."""
    segs = []
    c0, r0 = TRAINING_ROOT

    def grow(c, r, heading, gen):
        length = _LENGTHS[gen]
        c1 = c + length * math.cos(heading)
        r1 = r - length * math.sin(heading)  # rows grow downward
        segs.append(((c, r), (c1, r1)))
        if gen < len(_TURNS):
            for turn in _TURNS[gen]:
                grow(c1, r1, heading + math.radians(turn), gen + 1)

    grow(float(c0), float(r0), 0.0, 0)
    return segs


def draw_training_image(shape=TRAINING_SHAPE, radius: float = 2.2) -> np.ndarray:
    """8-bit grey image: dark channels (0) on a white background (255)."""
    h, w = shape
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    ink = np.zeros(shape, dtype=bool)
    for (c0, r0), (c1, r1) in tree_segments():
        dc, dr = c1 - c0, r1 - r0
        t = np.clip(((cols - c0) * dc + (rows - r0) * dr) / (dc * dc + dr * dr), 0.0, 1.0)
        ink |= np.hypot(cols - (c0 + t * dc), rows - (r0 + t * dr)) <= radius
    return np.where(ink, 0, 255).astype(np.uint8)


def _base(name: str) -> dict:
    return {
        "name": name,
        "training_image": "training_tree.pgm",
        "root_hint": list(TRAINING_ROOT),
        "invert": False,
        "prune": 3,
        "length_scale": 0.6,
        "growth": {"max_bif_steps": 8, "root_mark": 2, "min_edge_length": 2.0},
        "channel": {"half_width": 3.5, "depth": 2.5, "taper": 0.92},
        "systems_per_lobe": 1,
        "system_depth_step": 0.0,
        "grid": {"dims": [128, 128, 64]},
        "seed": 20240601,
        "output": f"out/{name}",
    }


def _lobe(length, width, depth, dx=0.0, dy=0.0, rot=0.0, top="flat", relief=0.5) -> dict:
    return {"L": length, "W": width, "D": depth,
            "placement": {"dx": dx, "dy": dy, "rot_deg": rot},
            "top_mode": top, "relief": relief}


def scenario_configs() -> dict[str, dict]:
    one = _base("scenario_one_system")
    one["lobes"] = [_lobe(120.0, 80.0, 40.0)]

    three_lobes = _base("scenario_three_lobes")
    three_lobes["length_scale"] = 0.45
    three_lobes["lobes"] = [
        _lobe(90.0, 50.0, 30.0, 0.0, 0.0, 0.0),
        _lobe(80.0, 45.0, 26.0, 0.0, 8.0, 35.0, top="mounded", relief=0.5),
        _lobe(80.0, 45.0, 26.0, 0.0, -8.0, -35.0, top="mounded", relief=0.5),
    ]

    three_systems = _base("scenario_three_systems")
    three_systems["lobes"] = [_lobe(120.0, 80.0, 40.0, top="mounded", relief=0.4)]
    three_systems["systems_per_lobe"] = 3
    three_systems["system_depth_step"] = 6.0
    return {c["name"]: c for c in (one, three_lobes, three_systems)}


def write_demo(directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = [d / "training_tree.pgm"]
    write_pgm(written[0], draw_training_image())
    for name, cfg in scenario_configs().items():
        p = d / f"{name}.json"
        p.write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")
        written.append(p)
    return written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m skesim.demo", description=__doc__.splitlines()[0])
    ap.add_argument("directory", nargs="?", default="configs")
    args = ap.parse_args(argv)
    for p in write_demo(args.directory):
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
