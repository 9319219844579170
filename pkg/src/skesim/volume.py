"""
Channel volumes and voxelisation.

A channel system is the union, over skeleton edges, of half-elliptic
troughs: a point whose plan-view distance to edge ``e`` is ``t`` lies inside
when ``t <= w_e`` and ``-d_e * sqrt(1 - (t / w_e)**2) <= z <= 0``. Using the
distance to the whole segment gives rounded caps at the nodes.

Grids sample cell centres only; label 2 (channel) overrides 1 (lobe).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .lobe import Lobe
from .skeleton import Skeleton

__all__ = [
    "ChannelParams",
    "ChannelVolume",
    "ProjectedVolume",
    "GridSpec",
    "LabeledGrid3",
    "CoarseGridWarning",
    "point_in_channel",
    "project_downward",
    "rasterize",
    "BACKGROUND",
    "LOBE",
    "CHANNEL",
]

BACKGROUND, LOBE, CHANNEL = 0, 1, 2


class CoarseGridWarning(UserWarning):
    pass


@dataclass
class ChannelParams:
    half_width: float = 3.0
    depth: float = 1.5
    taper: float = 1.0

    def __post_init__(self):
        if not (self.half_width > 0 and self.depth > 0):
            raise InvalidArgumentError("channel half-width and depth must be positive")
        if not 0.0 < self.taper <= 1.0:
            raise InvalidArgumentError("taper must lie in (0, 1]")

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelParams":
        return cls(float(obj["half_width"]), float(obj["depth"]), float(obj.get("taper", 1.0)))

    def to_json(self) -> dict:
        return {"half_width": self.half_width, "depth": self.depth, "taper": self.taper}


def _edge_table(sk: Skeleton, cp: ChannelParams) -> np.ndarray:
    """Rows ``fx, fy, sx, sy, w_e, d_e`` with per-generation taper."""
    gen = sk.generations()
    rows = []
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        f, s = sk.nodes[e.father].p, sk.nodes[e.son].p
        k = cp.taper ** gen.get(e.father, 0)
        rows.append((f.x, f.y, s.x, s.y, cp.half_width * k, cp.depth * k))
    return np.array(rows, dtype=np.float64).reshape(-1, 6)


def _segment_distance(x, y, fx, fy, sx, sy):
    dx, dy = sx - fx, sy - fy
    l2 = dx * dx + dy * dy
    t = ((x - fx) * dx + (y - fy) * dy) / l2 if l2 > 0 else np.zeros_like(x)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(x - (fx + t * dx), y - (fy + t * dy))


def _trough_depth(t, w, d):
    """Depth of one trough at plan distance ``t``; -1 where ``t > w``."""
    r = t / w
    return np.where(t <= w, d * np.sqrt(np.maximum(0.0, 1.0 - r * r)), -1.0)


class ChannelVolume:
    """Membership query for one channel system in its own (unprojected) frame."""

    def __init__(self, sk: Skeleton, cp: ChannelParams):
        self.skeleton = sk
        self.params = cp
        self.table = _edge_table(sk, cp)

    def depth_at(self, x, y) -> np.ndarray:
        """Deepest trough below each column, -1 where no edge is within reach."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        best = np.full(np.broadcast(x, y).shape, -1.0)
        for fx, fy, sx, sy, w, d in self.table:
            # cheap reject by bounding box before the exact distance
            near = ((x >= min(fx, sx) - w) & (x <= max(fx, sx) + w)
                    & (y >= min(fy, sy) - w) & (y <= max(fy, sy) + w))
            if not near.any():
                continue
            t = _segment_distance(x, y, fx, fy, sx, sy)
            best = np.where(near, np.maximum(best, _trough_depth(t, w, d)), best)
        return best

    @staticmethod
    def inside(depth, z) -> np.ndarray:
        return (depth >= 0.0) & (z <= 0.0) & (z >= -depth)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return self.inside(self.depth_at(pts[:, 0], pts[:, 1]), pts[:, 2])


class ProjectedVolume:
    """A channel volume shifted down onto the lobe's top surface.

    Membership at ``(x, y, z)`` equals the unshifted membership at
    ``(x, y, z - z_top(x, y) + offset)``; columns outside the outline are empty.
    ``offset`` pushes a whole system deeper (stacked systems in one lobe).
    """

    def __init__(self, volume: ChannelVolume, lobe: Lobe, offset: float = 0.0):
        self.volume = volume
        self.lobe = lobe
        self.offset = float(offset)

    def column(self, x, y):
        """``(depth, z_top)`` per column; NaN z_top outside the outline."""
        return self.volume.depth_at(x, y), self.lobe.top_surface_many(x, y)

    def inside(self, depth, z_top, z) -> np.ndarray:
        ok = ~np.isnan(z_top)
        zrel = np.where(ok, z - np.where(ok, z_top, 0.0) + self.offset, np.inf)
        return ok & ChannelVolume.inside(depth, zrel)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        depth, z_top = self.column(pts[:, 0], pts[:, 1])
        return self.inside(depth, z_top, pts[:, 2])


def point_in_channel(sk: Skeleton, cp: ChannelParams, q) -> bool:
    """Scalar membership test, edge by edge."""
    qx, qy, qz = map(float, q)
    if qz > 0.0:
        return False
    for fx, fy, sx, sy, w, d in _edge_table(sk, cp):
        t = float(_segment_distance(np.float64(qx), np.float64(qy), fx, fy, sx, sy))
        if t <= w and qz >= -d * math.sqrt(max(0.0, 1.0 - (t / w) ** 2)):
            return True
    return False


def project_downward(volume: ChannelVolume, lobe: Lobe, offset: float = 0.0) -> ProjectedVolume:
    return ProjectedVolume(volume, lobe, offset)


@dataclass
class GridSpec:
    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]  # (nx, ny, nz)

    def __post_init__(self):
        self.origin = tuple(float(v) for v in self.origin)
        self.spacing = float(self.spacing)
        self.dims = tuple(int(v) for v in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise InvalidArgumentError("grid dims must be three integers >= 1")
        if not self.spacing > 0:
            raise InvalidArgumentError("grid spacing must be positive")

    @classmethod
    def covering(cls, lo, hi, dims) -> "GridSpec":
        """Smallest uniform grid with ``dims`` cells that covers the box, centred on it.

        The z origin is lowered by under one cell so that ``hi[2]`` (the flat
        lobe top) falls on a cell face; a top plane cutting through a row of
        cell centres would bias the lobe volume by up to half a cell layer.
        """
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        dims = np.asarray(dims, int)
        h = float(np.max((hi - lo) / dims))
        centre = (lo + hi) / 2.0
        origin = centre - dims * h / 2.0
        above = math.floor((origin[2] + dims[2] * h - hi[2]) / h + 1e-9)
        origin[2] = hi[2] - (dims[2] - above) * h
        return cls(tuple(origin), h, tuple(int(v) for v in dims))

    def axes(self):
        """Cell-centre coordinates along x, y, z."""
        return tuple(self.origin[a] + (np.arange(self.dims[a]) + 0.5) * self.spacing
                     for a in range(3))

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(tuple(obj["origin"]), float(obj["spacing"]), tuple(obj["dims"]))


@dataclass
class LabeledGrid3:
    spec: GridSpec
    labels: np.ndarray  # (nz, ny, nx) uint8, so the raw byte order is x-fastest

    @classmethod
    def empty(cls, spec: GridSpec) -> "LabeledGrid3":
        nx, ny, nz = spec.dims
        return cls(spec, np.zeros((nz, ny, nx), dtype=np.uint8))

    def counts(self) -> dict[int, int]:
        c = np.bincount(self.labels.ravel(), minlength=3)
        return {BACKGROUND: int(c[0]), LOBE: int(c[1]), CHANNEL: int(c[2])}

    def header(self, raw_name: str) -> dict:
        return {
            "dims": list(self.spec.dims),
            "origin": list(self.spec.origin),
            "spacing": self.spec.spacing,
            "labels": "uint8",
            "order": "x-fastest",
            "values": {"0": "background", "1": "lobe", "2": "channel"},
            "cell_centres": "origin + (index + 0.5) * spacing",
            "raw": raw_name,
        }

    def write(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        jpath, rpath = stem.with_suffix(".json"), stem.with_suffix(".raw")
        rpath.write_bytes(np.ascontiguousarray(self.labels, dtype=np.uint8).tobytes())
        jpath.write_text(json.dumps(self.header(rpath.name), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
        return jpath, rpath

    @classmethod
    def read(cls, json_path: str | Path) -> "LabeledGrid3":
        jpath = Path(json_path)
        hdr = json.loads(jpath.read_text(encoding="utf-8"))
        spec = GridSpec(tuple(hdr["origin"]), hdr["spacing"], tuple(hdr["dims"]))
        nx, ny, nz = spec.dims
        raw = (jpath.parent / hdr.get("raw", jpath.with_suffix(".raw").name)).read_bytes()
        if len(raw) != nx * ny * nz:
            raise InvalidInputError(f"raw file holds {len(raw)} bytes, expected {nx * ny * nz}")
        return cls(spec, np.frombuffer(raw, dtype=np.uint8).reshape(nz, ny, nx).copy())


def rasterize(lobe: Lobe, systems, grid: GridSpec | LabeledGrid3) -> LabeledGrid3:
    """Label cell centres: 1 inside the lobe, 2 where a projected channel is too.

    ``systems`` holds ``(Skeleton, ChannelParams)`` or
    ``(Skeleton, ChannelParams, offset)`` tuples. Passing a
    :class:`LabeledGrid3` paints into it (cellwise maximum), which is how
    several lobes share one grid.
    """
    out = grid if isinstance(grid, LabeledGrid3) else LabeledGrid3.empty(grid)
    spec = out.spec
    xs, ys, zs = spec.axes()
    X, Y = np.meshgrid(xs, ys)  # (ny, nx)
    Z = zs[:, None, None]

    lx, ly = lobe.to_local(X, Y)
    in_lobe = lobe._contains_local(lx[None], ly[None], Z)

    in_channel = np.zeros_like(in_lobe)
    for item in systems:
        sk, cp = item[0], item[1]
        offset = item[2] if len(item) > 2 else 0.0
        if spec.spacing > min(cp.half_width, cp.depth):
            warnings.warn(
                f"grid spacing {spec.spacing:g} exceeds channel size "
                f"min(w_c, d_c) = {min(cp.half_width, cp.depth):g}", CoarseGridWarning,
                stacklevel=2)
        if not sk.edges:
            continue
        proj = ProjectedVolume(ChannelVolume(sk, cp), lobe, offset)
        depth, z_top = proj.column(X, Y)
        in_channel |= proj.inside(depth[None], z_top[None], Z)

    labels = np.where(in_lobe, np.where(in_channel, CHANNEL, LOBE), BACKGROUND).astype(np.uint8)
    np.maximum(out.labels, labels, out=out.labels)
    return out
