"""
Skeleton graph model and the planar predicates the rest of the package uses.

A skeleton is a directed planar graph with straight edges. Every node carries
a *mark* in {1, 2, 3}: the number of edges touching it, clamped to 3. Nodes
with mark 1 or 2 can still grow, mark 3 is terminal.

The root is special: it may carry a virtual inflow direction and a
``root_bias`` that is added to its incident-edge count, so a bare root can
already have mark 1 or 2.

Coordinates are plain floats in grid units. One absolute tolerance, ``EPS``,
is used by every geometric predicate.
"""
from __future__ import annotations

import copy
import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError

__all__ = [
    "EPS",
    "Point2",
    "Node",
    "Edge",
    "Skeleton",
    "Violation",
    "signed_angle",
    "rotate",
    "unit",
    "segment_intersection",
    "point_segment_distance",
    "validate",
    "write_csv",
    "read_csv",
    "skeleton_to_csv",
]

EPS = 1e-9
CSV_HEADER = ["edge_id", "father_id", "son_id", "fx", "fy", "sx", "sy", "father_mark", "son_mark"]


class Point2(NamedTuple):
    x: float
    y: float


@dataclass
class Node:
    id: int
    p: Point2
    alpha: list[tuple[float, float]] = field(default_factory=list)
    mark: int = 1
    is_root: bool = False


@dataclass
class Edge:
    id: int
    father: int
    son: int


# ---------------------------------------------------------------------------
# vector helpers
# ---------------------------------------------------------------------------

def unit(v) -> tuple[float, float]:
    x, y = float(v[0]), float(v[1])
    n = math.hypot(x, y)
    if n <= EPS:
        raise InvalidArgumentError(f"zero-length vector {v!r}")
    return (x / n, y / n)


def rotate(v, angle: float) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def signed_angle(u, v) -> float:
    """Counter-clockwise rotation (radians, in (-pi, pi]) taking ``u`` onto ``v``."""
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    if math.hypot(ux, uy) <= EPS or math.hypot(vx, vy) <= EPS:
        raise InvalidArgumentError("signed_angle needs non-zero vectors")
    a = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
    return math.pi if a == -math.pi else a


# ---------------------------------------------------------------------------
# segment predicates
# ---------------------------------------------------------------------------

def point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def segment_intersection(a1, a2, b1, b2, eps: float = EPS):
    """First contact of segment ``a1->a2`` with the closed segment ``b1-b2``.

    Returns ``(Point2, t)`` with ``t`` the parameter along ``a``, or ``None``.
    Contacts at ``t == 0`` (within ``eps`` of ``a1``) are ignored: a new edge
    may touch the skeleton at its own father point. A collinear overlap that
    starts at ``a1`` and runs along ``a`` is reported with ``t = 0``.
    """
    ax, ay = float(a1[0]), float(a1[1])
    dx, dy = float(a2[0]) - ax, float(a2[1]) - ay
    bx, by = float(b1[0]), float(b1[1])
    ex, ey = float(b2[0]) - bx, float(b2[1]) - by
    la = math.hypot(dx, dy)
    lb = math.hypot(ex, ey)
    if la <= eps or lb <= eps:
        raise InvalidArgumentError("degenerate segment")

    wx, wy = bx - ax, by - ay
    denom = dx * ey - dy * ex
    if abs(denom) <= eps * la * lb:
        # parallel; only collinear configurations can touch
        if abs(wx * dy - wy * dx) / la > eps:
            return None
        l2 = la * la
        t1 = (wx * dx + wy * dy) / l2
        t2 = ((bx + ex - ax) * dx + (by + ey - ay) * dy) / l2
        lo = max(min(t1, t2), 0.0)
        hi = min(max(t1, t2), 1.0)
        if (hi - lo) * la < -eps or hi * la <= eps:
            return None
        t = 0.0 if lo * la <= eps else lo
        return Point2(ax + t * dx, ay + t * dy), t

    t = (wx * ey - wy * ex) / denom
    u = (wx * dy - wy * dx) / denom
    if t * la <= eps or t * la > la + eps:
        return None
    if u * lb < -eps or u * lb > lb + eps:
        return None
    t = min(t, 1.0)
    return Point2(ax + t * dx, ay + t * dy), t


# ---------------------------------------------------------------------------
# graph container
# ---------------------------------------------------------------------------

@dataclass
class Skeleton:
    nodes: dict[int, Node] = field(default_factory=dict)
    edges: dict[int, Edge] = field(default_factory=dict)
    root: int = 0
    root_bias: int = 0
    root_inflow: tuple[float, float] | None = None

    def __post_init__(self):
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}
        for nid in self.nodes:
            self._out.setdefault(nid, [])
            self._in.setdefault(nid, [])
        for e in self.edges.values():
            self._out.setdefault(e.father, []).append(e.id)
            self._in.setdefault(e.son, []).append(e.id)

    # -- construction -------------------------------------------------------
    @classmethod
    def with_root(cls, point, inflow=None, root_mark: int = 2) -> "Skeleton":
        """Bare skeleton holding only a root with the given mark (1 or 2)."""
        if root_mark not in (1, 2):
            raise InvalidArgumentError("root_mark must be 1 or 2")
        inflow = unit(inflow) if inflow is not None else None
        root = Node(0, Point2(float(point[0]), float(point[1])),
                    [inflow] if inflow else [], root_mark, True)
        return cls({0: root}, {}, 0, root_bias=root_mark, root_inflow=inflow)

    def _next_node_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def _next_edge_id(self) -> int:
        return max(self.edges, default=-1) + 1

    def add_node(self, point, mark: int = 1, alpha=None) -> int:
        nid = self._next_node_id()
        self.nodes[nid] = Node(nid, Point2(float(point[0]), float(point[1])), list(alpha or []), mark)
        self._out[nid] = []
        self._in[nid] = []
        return nid

    def add_edge(self, father: int, son: int) -> int:
        eid = self._next_edge_id()
        self.edges[eid] = Edge(eid, father, son)
        self._out.setdefault(father, []).append(eid)
        self._in.setdefault(son, []).append(eid)
        return eid

    def split_edge(self, eid: int, point, mark: int = 3) -> int:
        """Insert a node on edge ``eid``; the edge keeps its id for the first half."""
        e = self.edges[eid]
        old_son = e.son
        direction = self.direction(eid)
        j = self.add_node(point, mark=mark, alpha=[direction])
        self._in[old_son].remove(eid)
        e.son = j
        self._in[j].append(eid)
        self.add_edge(j, old_son)
        return j

    def copy(self) -> "Skeleton":
        return copy.deepcopy(self)

    # -- queries ------------------------------------------------------------
    def out_edges(self, nid: int) -> list[int]:
        return list(self._out.get(nid, ()))

    def in_edges(self, nid: int) -> list[int]:
        return list(self._in.get(nid, ()))

    def degree(self, nid: int) -> int:
        """True number of incident edges (marks are clamped, this is not)."""
        return len(self._out.get(nid, ())) + len(self._in.get(nid, ()))

    def vector(self, eid: int) -> tuple[float, float]:
        e = self.edges[eid]
        f, s = self.nodes[e.father].p, self.nodes[e.son].p
        return (s.x - f.x, s.y - f.y)

    def direction(self, eid: int) -> tuple[float, float]:
        return unit(self.vector(eid))

    def length(self, eid: int) -> float:
        return math.hypot(*self.vector(eid))

    def parent_direction(self, nid: int) -> tuple[float, float] | None:
        """Direction a node was reached from: first arrival, or the root inflow."""
        node = self.nodes[nid]
        if node.alpha:
            return node.alpha[0]
        ins = self._in.get(nid)
        if ins:
            return self.direction(sorted(ins)[0])
        if node.is_root and self.root_inflow is not None:
            return self.root_inflow
        return None

    def expected_mark(self, nid: int) -> int:
        extra = self.root_bias if nid == self.root else 0
        return min(3, self.degree(nid) + extra)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge ids and an (E, 4) array ``fx, fy, sx, sy`` in id order."""
        ids = np.array(sorted(self.edges), dtype=np.int64)
        seg = np.empty((len(ids), 4))
        for k, eid in enumerate(ids):
            e = self.edges[int(eid)]
            f, s = self.nodes[e.father].p, self.nodes[e.son].p
            seg[k] = (f.x, f.y, s.x, s.y)
        return ids, seg

    def generations(self) -> dict[int, int]:
        """Hop distance of every node from the root, ignoring edge direction."""
        gen = {self.root: 0}
        queue = deque([self.root])
        while queue:
            n = queue.popleft()
            for eid in sorted(self._out.get(n, []) + self._in.get(n, [])):
                e = self.edges[eid]
                m = e.son if e.father == n else e.father
                if m not in gen:
                    gen[m] = gen[n] + 1
                    queue.append(m)
        return gen

    def total_length(self) -> float:
        return sum(self.length(eid) for eid in self.edges)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    invariant: str
    ids: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.invariant} {self.ids}: {self.detail}"


def _bbox_candidates(seg: np.ndarray, eps: float) -> np.ndarray:
    lo_x = np.minimum(seg[:, 0], seg[:, 2])
    hi_x = np.maximum(seg[:, 0], seg[:, 2])
    lo_y = np.minimum(seg[:, 1], seg[:, 3])
    hi_y = np.maximum(seg[:, 1], seg[:, 3])
    overlap = (
        (lo_x[:, None] <= hi_x[None, :] + eps)
        & (lo_x[None, :] <= hi_x[:, None] + eps)
        & (lo_y[:, None] <= hi_y[None, :] + eps)
        & (lo_y[None, :] <= hi_y[:, None] + eps)
    )
    i, j = np.nonzero(np.triu(overlap, k=1))
    return np.stack([i, j], axis=1)


def _pair_contact(sk: Skeleton, ea: Edge, eb: Edge, eps: float) -> bool:
    pa = (sk.nodes[ea.father].p, sk.nodes[ea.son].p)
    pb = (sk.nodes[eb.father].p, sk.nodes[eb.son].p)
    shared = {ea.father, ea.son} & {eb.father, eb.son}
    if len(shared) == 2:
        return True
    if shared:
        n = shared.pop()
        p = sk.nodes[n].p
        oa = pa[1] if ea.father == n else pa[0]
        ob = pb[1] if eb.father == n else pb[0]
        return segment_intersection(p, oa, p, ob, eps) is not None
    if segment_intersection(pa[0], pa[1], pb[0], pb[1], eps) is not None:
        return True
    return point_segment_distance(pa[0], pb[0], pb[1]) <= eps


def validate(sk: Skeleton, eps: float = EPS) -> list[Violation]:
    """All invariant violations of ``sk``; an empty list means it is valid."""
    out: list[Violation] = []
    if sk.root not in sk.nodes:
        return [Violation("root", (sk.root,), "root id is not a node")]

    geometry_ok = True
    for eid, e in sorted(sk.edges.items()):
        if e.father not in sk.nodes or e.son not in sk.nodes:
            out.append(Violation("dangling-edge", (eid,), "endpoint is not a node"))
            geometry_ok = False
            continue
        if e.father == e.son:
            out.append(Violation("self-loop", (eid,), "father == son"))
            geometry_ok = False
        elif sk.length(eid) <= eps:
            out.append(Violation("edge-length", (eid,), "zero-length edge"))
            geometry_ok = False

    for nid, node in sorted(sk.nodes.items()):
        if node.mark not in (1, 2, 3):
            out.append(Violation("mark-range", (nid,), f"mark {node.mark}"))
        expected = sk.expected_mark(nid)
        # a leaf sealed at the region boundary is terminal: mark 3, one arrival
        sealed = (nid != sk.root and node.mark == 3 and sk.degree(nid) == 1
                  and len(sk.in_edges(nid)) == 1)
        if node.mark != expected and not sealed:
            out.append(Violation("mark-consistency", (nid,),
                                 f"mark {node.mark}, expected {expected}"))
        for a in node.alpha:
            if abs(math.hypot(a[0], a[1]) - 1.0) > eps:
                out.append(Violation("alpha-norm", (nid,), f"non-unit direction {a}"))

    # connectivity, ignoring direction
    seen = {sk.root}
    queue = deque([sk.root])
    while queue:
        n = queue.popleft()
        for eid in sk.out_edges(n) + sk.in_edges(n):
            e = sk.edges[eid]
            for m in (e.father, e.son):
                if m not in seen and m in sk.nodes:
                    seen.add(m)
                    queue.append(m)
    missing = sorted(set(sk.nodes) - seen)
    if missing:
        out.append(Violation("connectivity", tuple(missing), "unreachable from root"))

    # directed acyclicity (Kahn)
    indeg = {n: len(sk.in_edges(n)) for n in sk.nodes}
    queue = deque(n for n, d in indeg.items() if d == 0)
    visited = 0
    while queue:
        n = queue.popleft()
        visited += 1
        for eid in sk.out_edges(n):
            s = sk.edges[eid].son
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    if visited != len(sk.nodes):
        cyc = tuple(sorted(n for n, d in indeg.items() if d > 0))
        out.append(Violation("acyclic", cyc, "directed cycle"))

    if geometry_ok and len(sk.edges) > 1:
        ids, seg = sk.segments()
        for i, j in _bbox_candidates(seg, eps):
            ea, eb = sk.edges[int(ids[i])], sk.edges[int(ids[j])]
            if _pair_contact(sk, ea, eb, eps):
                out.append(Violation("planarity", (ea.id, eb.id), "edges intersect"))
    return out


# ---------------------------------------------------------------------------
# CSV exchange format
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".9g")


def skeleton_to_csv(sk: Skeleton) -> str:
    buf = io.StringIO()
    write_csv(sk, buf)
    return buf.getvalue()


def write_csv(sk: Skeleton, dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_csv(sk, fh)
        return
    dest.write(f"# root={sk.root}\n")
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        f, s = sk.nodes[e.father], sk.nodes[e.son]
        w.writerow([eid, e.father, e.son, _fmt(f.p.x), _fmt(f.p.y), _fmt(s.p.x), _fmt(s.p.y),
                    f.mark, s.mark])


def read_csv(src: str | Path | TextIO | Iterable[str]) -> Skeleton:
    if isinstance(src, (str, Path)):
        with open(src, encoding="utf-8") as fh:
            return read_csv(fh)
    root = None
    rows = []
    header_seen = False
    for line in src:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "root":
                root = int(val)
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != CSV_HEADER:
                raise InvalidInputError(f"unexpected skeleton CSV header: {line!r}")
            header_seen = True
            continue
        rows.append(next(csv.reader([line])))
    if not header_seen:
        raise InvalidInputError("skeleton CSV has no header")

    nodes: dict[int, Node] = {}
    edges: dict[int, Edge] = {}
    try:
        for r in rows:
            eid, fid, sid = int(r[0]), int(r[1]), int(r[2])
            fx, fy, sx, sy = map(float, r[3:7])
            fm, sm = int(r[7]), int(r[8])
            nodes.setdefault(fid, Node(fid, Point2(fx, fy), [], fm))
            nodes.setdefault(sid, Node(sid, Point2(sx, sy), [], sm))
            edges[eid] = Edge(eid, fid, sid)
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"malformed skeleton CSV row: {exc}") from exc

    if root is None:
        sons = {e.son for e in edges.values()}
        roots = sorted(set(nodes) - sons)
        root = roots[0] if roots else 0
    sk = Skeleton(nodes, edges, root)
    for nid, node in nodes.items():
        node.is_root = nid == root
        node.alpha = [sk.direction(eid) for eid in sorted(sk.in_edges(nid))]
    if root in nodes:
        sk.root_bias = max(0, nodes[root].mark - sk.degree(root))
    return sk
