"""
Stochastic skeleton growth by iterated bifurcation.

One growth step (``bif_step``) snapshots every node that can still grow
(mark 1 or 2), draws candidate edges for all of them, shuffles the candidates
and inserts them one at a time. An insertion that runs into the existing
skeleton is cut at the first contact and joined there; one that leaves the
region is cut at the boundary and sealed; anything shorter than
``min_edge_length`` after cutting is dropped.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError, InvalidInsertionError, InvalidOutlineError
from .skeleton import (EPS, Point2, Skeleton, point_segment_distance, rotate,
                       segment_intersection, unit)
from .stats import TrainingStats, make_rng, sample

__all__ = [
    "RegionBoundary",
    "GrowthConfig",
    "ProposedEdge",
    "InsertStatus",
    "InsertionReport",
    "StepLog",
    "propose_children",
    "insert_edge",
    "bif_step",
    "synthesize",
    "load_region",
    "save_region",
]


def _bbox_hits(seg: np.ndarray, a, b, eps: float = EPS) -> np.ndarray:
    """Indices of segments whose bounding box meets the box of ``a-b``."""
    if len(seg) == 0:
        return np.empty(0, dtype=np.int64)
    x0, x1 = min(a[0], b[0]) - eps, max(a[0], b[0]) + eps
    y0, y1 = min(a[1], b[1]) - eps, max(a[1], b[1]) + eps
    sx0 = np.minimum(seg[:, 0], seg[:, 2])
    sx1 = np.maximum(seg[:, 0], seg[:, 2])
    sy0 = np.minimum(seg[:, 1], seg[:, 3])
    sy1 = np.maximum(seg[:, 1], seg[:, 3])
    return np.flatnonzero((sx0 <= x1) & (sx1 >= x0) & (sy0 <= y1) & (sy1 >= y0))


class RegionBoundary:
    """Simple polygon bounding the growth; points on the boundary count as inside."""

    def __init__(self, vertices, check_simple: bool = True):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidOutlineError("region needs at least 3 vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        if not np.isfinite(v).all():
            raise InvalidOutlineError("region vertices must be finite")
        signed = 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
        if abs(signed) <= EPS:
            raise InvalidOutlineError("region has zero area")
        if signed < 0:
            v = v[::-1].copy()
        self.vertices = v
        self.edges = np.hstack([v, np.roll(v, -1, axis=0)])
        self.area = abs(signed)
        if check_simple and not self.is_simple():
            raise InvalidOutlineError("region polygon self-intersects")

    def __len__(self):
        return len(self.vertices)

    def is_simple(self) -> bool:
        e = self.edges
        n = len(e)
        lo_x = np.minimum(e[:, 0], e[:, 2]); hi_x = np.maximum(e[:, 0], e[:, 2])
        lo_y = np.minimum(e[:, 1], e[:, 3]); hi_y = np.maximum(e[:, 1], e[:, 3])
        ov = ((lo_x[:, None] <= hi_x[None, :]) & (lo_x[None, :] <= hi_x[:, None])
              & (lo_y[:, None] <= hi_y[None, :]) & (lo_y[None, :] <= hi_y[:, None]))
        ov = np.triu(ov, k=2)
        ov[0, n - 1] = False  # first and last edge share vertex 0
        for i, j in zip(*np.nonzero(ov)):
            a1, a2, b1, b2 = e[i, :2], e[i, 2:], e[j, :2], e[j, 2:]
            if segment_intersection(a1, a2, b1, b2) is not None:
                return False
            if point_segment_distance(a1, b1, b2) <= EPS:
                return False
        return True

    def contains(self, p) -> bool:
        return bool(self.contains_points(np.asarray([p], dtype=np.float64))[0])

    def contains_points(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        x, y = pts[:, 0:1], pts[:, 1:2]
        x1, y1, x2, y2 = (self.edges[:, k][None, :] for k in range(4))
        straddle = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside = np.count_nonzero(straddle & (x < xc), axis=1) % 2 == 1
        # boundary inclusive: distance to the nearest edge within EPS
        dx, dy = x2 - x1, y2 - y1
        l2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / l2, 0.0, 1.0)
        t = np.where(l2 > 0, t, 0.0)
        d = np.hypot(x - (x1 + t * dx), y - (y1 + t * dy)).min(axis=1)
        return inside | (d <= EPS)

    def first_contact(self, a, b) -> float | None:
        """Smallest ``t`` in (0, 1] where segment ``a->b`` touches the boundary."""
        best = None
        for i in _bbox_hits(self.edges, a, b):
            e = self.edges[i]
            res = segment_intersection(a, b, e[:2], e[2:])
            if res is not None and (best is None or res[1] < best):
                best = res[1]
        return best

    def centroid(self) -> Point2:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        return Point2(float(((x + xn) * cr).sum() / (6 * a)), float(((y + yn) * cr).sum() / (6 * a)))

    def to_json(self) -> list:
        return [[float(x), float(y)] for x, y in self.vertices]


def load_region(path: str | Path) -> RegionBoundary:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    if isinstance(obj, dict):
        obj = obj.get("polygon", obj.get("vertices"))
    return RegionBoundary(obj)


def save_region(region: RegionBoundary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(region.to_json()) + "\n", encoding="utf-8")


@dataclass
class GrowthConfig:
    max_bif_steps: int = 8
    root_point: tuple[float, float] = (0.0, 0.0)
    root_inflow: tuple[float, float] = (1.0, 0.0)
    root_mark: int = 2
    region: RegionBoundary | None = None
    min_edge_length: float = 1.0

    def check(self) -> None:
        if int(self.max_bif_steps) < 1:
            raise ConfigError("max_bif_steps must be >= 1")
        if self.root_mark not in (1, 2):
            raise ConfigError("root_mark must be 1 or 2")
        if not self.min_edge_length > 0:
            raise ConfigError("min_edge_length must be positive")
        try:
            unit(self.root_inflow)
        except ValueError:
            raise ConfigError("root_inflow must be a non-zero vector") from None
        if self.region is not None and not self.region.contains(self.root_point):
            raise ConfigError(f"root point {tuple(self.root_point)} lies outside the region")


@dataclass
class ProposedEdge:
    father: int
    son_point: Point2
    angle: float = 0.0
    length: float = 0.0


class InsertStatus(enum.Enum):
    CLEAN = "clean"
    TRUNCATED_INTERSECT = "truncated-intersect"
    TRUNCATED_BOUNDARY = "truncated-boundary"
    REJECTED = "rejected"


@dataclass
class InsertionReport:
    status: InsertStatus
    edge: int | None = None
    son: int | None = None
    hit_edge: int | None = None
    length: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.status is not InsertStatus.REJECTED


def propose_children(sk: Skeleton, nid: int, stats: TrainingStats,
                     rng: np.random.Generator) -> list[ProposedEdge]:
    """Candidate edges for node ``nid``: two for mark 1, one for mark 2, none for 3.

    Each child turns the parent direction by a sampled angle and gets a
    sampled length. The two children of a mark-1 node get angles of opposite
    sign: when both draws share a sign the second one is negated.
    """
    node = sk.nodes[nid]
    if node.mark >= 3:
        return []
    u = sk.parent_direction(nid)
    if u is None:
        raise InvalidInsertionError(f"node {nid} has no arrival direction")
    draws = []
    for _ in range(3 - node.mark):
        angle = sample(stats.angle_dist, rng)
        length = sample(stats.length_dist, rng)
        draws.append((angle, length))
    if len(draws) == 2 and draws[0][0] * draws[1][0] > 0:
        draws[1] = (-draws[1][0], draws[1][1])
    out = []
    for angle, length in draws:
        d = rotate(u, angle)
        out.append(ProposedEdge(nid, Point2(node.p.x + length * d[0], node.p.y + length * d[1]),
                                angle, length))
    return out


def _first_skeleton_hit(sk: Skeleton, a, b, seg_cache=None):
    ids, seg = seg_cache if seg_cache is not None else sk.segments()
    best = None
    for k in _bbox_hits(seg, a, b):
        s = seg[k]
        res = segment_intersection(a, b, s[:2], s[2:])
        if res is not None and (best is None or res[1] < best[1]):
            best = (res[0], res[1], int(ids[k]))
    return best


def insert_edge(sk: Skeleton, pe: ProposedEdge, region: RegionBoundary | None = None,
                min_edge_length: float = 1.0, seg_cache=None) -> InsertionReport:
    """Insert one proposed edge, truncating it where needed. Mutates ``sk``."""
    father = sk.nodes.get(pe.father)
    if father is None:
        raise InvalidInsertionError(f"unknown father node {pe.father}")
    if father.mark >= 3:
        raise InvalidInsertionError(f"node {pe.father} already has mark 3")
    a = father.p
    b = pe.son_point
    full = math.hypot(b[0] - a.x, b[1] - a.y)
    if full <= EPS:
        return InsertionReport(InsertStatus.REJECTED)

    hit = _first_skeleton_hit(sk, a, b, seg_cache)
    t_bnd = region.first_contact(a, b) if region is not None else None
    t_hit = hit[1] if hit is not None else None

    if t_hit is None and t_bnd is None:
        if region is not None and not region.contains(b):
            return InsertionReport(InsertStatus.REJECTED)
        direction = unit((b[0] - a.x, b[1] - a.y))
        son = sk.add_node(b, mark=1, alpha=[direction])
        eid = sk.add_edge(pe.father, son)
        father.mark += 1
        return InsertionReport(InsertStatus.CLEAN, eid, son, None, full)

    if t_bnd is not None and (t_hit is None or t_bnd < t_hit):
        t = t_bnd
        status = InsertStatus.TRUNCATED_BOUNDARY
    else:
        t = t_hit
        status = InsertStatus.TRUNCATED_INTERSECT
    if t * full < min_edge_length:
        return InsertionReport(InsertStatus.REJECTED)
    x = Point2(a.x + t * (b[0] - a.x), a.y + t * (b[1] - a.y))
    direction = unit((b[0] - a.x, b[1] - a.y))

    if status is InsertStatus.TRUNCATED_BOUNDARY:
        if not region.contains(x):
            return InsertionReport(InsertStatus.REJECTED)
        son = sk.add_node(x, mark=3, alpha=[direction])
        eid = sk.add_edge(pe.father, son)
        father.mark += 1
        return InsertionReport(status, eid, son, None, t * full)

    hit_eid = hit[2]
    he = sk.edges[hit_eid]
    # contact exactly at an existing node cannot be split; drop the proposal
    for nid in (he.father, he.son):
        if math.hypot(x.x - sk.nodes[nid].p.x, x.y - sk.nodes[nid].p.y) <= EPS:
            return InsertionReport(InsertStatus.REJECTED)
    junction = sk.split_edge(hit_eid, x, mark=3)
    sk.nodes[junction].alpha.append(direction)
    eid = sk.add_edge(pe.father, junction)
    father.mark += 1
    return InsertionReport(status, eid, junction, hit_eid, t * full)


def _fisher_yates(n: int, rng: np.random.Generator) -> list[int]:
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


@dataclass
class StepLog:
    expanded: list[int] = field(default_factory=list)
    reports: list[InsertionReport] = field(default_factory=list)

    @property
    def changed(self) -> bool:
        return any(r.accepted for r in self.reports)


def bif_step(sk: Skeleton, stats: TrainingStats, cfg: GrowthConfig,
             rng: np.random.Generator, log: StepLog | None = None) -> Skeleton:
    """Apply one growth step in place and return ``sk``."""
    log = log if log is not None else StepLog()
    fathers = [nid for nid in sorted(sk.nodes) if sk.nodes[nid].mark in (1, 2)]
    log.expanded.extend(fathers)
    proposals = []
    for nid in fathers:
        proposals.extend(propose_children(sk, nid, stats, rng))
    cache = None
    for k in _fisher_yates(len(proposals), rng):
        if cache is None:
            cache = sk.segments()
        rep = insert_edge(sk, proposals[k], cfg.region, cfg.min_edge_length, cache)
        if rep.accepted:
            cache = None
        log.reports.append(rep)
    return sk


def synthesize(stats: TrainingStats, cfg: GrowthConfig, seed: int,
               history: list[StepLog] | None = None) -> Skeleton:
    """Grow a skeleton from a bare root for ``cfg.max_bif_steps`` steps.

    Stops early once a whole step inserts nothing.
    """
    cfg.check()
    if stats.angle_dist is None or stats.length_dist is None:
        raise ConfigError("stats must carry fitted distributions")
    rng = make_rng(seed)
    sk = Skeleton.with_root(cfg.root_point, cfg.root_inflow, cfg.root_mark)
    for _ in range(int(cfg.max_bif_steps)):
        step = StepLog()
        bif_step(sk, stats, cfg, rng, step)
        if history is not None:
            history.append(step)
        if not step.changed:
            break
    return sk
