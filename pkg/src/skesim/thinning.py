"""
Raster side of the pipeline: binary training image -> one-pixel skeleton ->
training :class:`~skesim.skeleton.Skeleton`.

Neighbourhood convention
------------------------
The 8 neighbours of a pixel ``P1`` are named as in Zhang & Suen::

    P9 P2 P3        NW N NE
    P8 P1 P4   =    W  .  E
    P7 P6 P5        SW S SE

and packed into an 8-bit code, bit ``k-2`` holding ``Pk``:
bit0 N, bit1 NE, bit2 E, bit3 SE, bit4 S, bit5 SW, bit6 W, bit7 NW.
All decisions below are table lookups on that code.

Pixel coordinates in the public API are ``(x, y) = (column, row)`` with row 0
at the top. Skeleton coordinates flip the row axis (``y_world = H - 1 - row``)
so that counter-clockwise angles look counter-clockwise on screen.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InvalidInputError, InvalidRootError, MultipleComponentsError
from .skeleton import Edge, Node, Point2, Skeleton, unit, validate

log = logging.getLogger(__name__)

__all__ = [
    "BinaryImage",
    "PixelSkeleton",
    "thin",
    "classify_pixels",
    "prune_spurs",
    "extract_graph",
    "rasterize_edges",
    "neighbour_counts",
    "count_components",
    "has_2x2_block",
]

EIGHT = np.ones((3, 3), dtype=bool)

# (drow, dcol) for bits 0..7
_OFFSETS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _bits(code: int) -> list[int]:
    return [(code >> k) & 1 for k in range(8)]


def _build_tables():
    B = np.zeros(256, dtype=np.uint8)
    A = np.zeros(256, dtype=np.uint8)
    zs1 = np.zeros(256, dtype=bool)
    zs2 = np.zeros(256, dtype=bool)
    simple = np.zeros(256, dtype=bool)
    for code in range(256):
        p2, p3, p4, p5, p6, p7, p8, p9 = _bits(code)
        seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
        b = sum(seq[:8])
        a = sum(1 for i in range(8) if seq[i] == 0 and seq[i + 1] == 1)
        B[code], A[code] = b, a
        base = 2 <= b <= 6 and a == 1
        zs1[code] = base and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        zs2[code] = base and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
        # Yokoi 8-connectivity number, neighbours counter-clockwise from E
        x = [p4, p3, p2, p9, p8, p7, p6, p5]
        xb = [1 - v for v in x] + [1 - x[0], 1 - x[1]]
        nc8 = sum(xb[k] - xb[k] * xb[k + 1] * xb[k + 2] for k in (0, 2, 4, 6))
        simple[code] = nc8 == 1
    return B, A, zs1, zs2, simple


NEIGHBOURS, TRANSITIONS, ZS_FIRST, ZS_SECOND, SIMPLE = _build_tables()
# deletable in the sequential check: topology-preserving and not an end point
_REMOVABLE = SIMPLE & (NEIGHBOURS >= 2)


@dataclass
class BinaryImage:
    foreground: np.ndarray  # (height, width) bool

    def __post_init__(self):
        self.foreground = np.asarray(self.foreground, dtype=bool)
        if self.foreground.ndim != 2 or min(self.foreground.shape) < 1:
            raise InvalidInputError("binary image must be a non-empty 2-D array")

    @property
    def width(self) -> int:
        return self.foreground.shape[1]

    @property
    def height(self) -> int:
        return self.foreground.shape[0]

    @classmethod
    def from_gray(cls, gray: np.ndarray, invert: bool = False) -> "BinaryImage":
        """Dark pixels (< 128) are channel material unless ``invert``."""
        gray = np.asarray(gray)
        fg = gray >= 128 if invert else gray < 128
        return cls(fg)


@dataclass
class PixelSkeleton:
    skeleton: np.ndarray  # (height, width) bool

    @property
    def shape(self):
        return self.skeleton.shape


def neighbour_codes(mask: np.ndarray) -> np.ndarray:
    m = np.pad(np.asarray(mask, dtype=np.uint8), 1)
    h, w = mask.shape
    code = np.zeros((h, w), dtype=np.uint8)
    for bit, (dr, dc) in enumerate(_OFFSETS):
        code |= m[1 + dr:1 + dr + h, 1 + dc:1 + dc + w] << bit
    return code


def neighbour_counts(mask: np.ndarray) -> np.ndarray:
    return NEIGHBOURS[neighbour_codes(mask)].astype(np.int32)


def count_components(mask: np.ndarray) -> int:
    return int(ndimage.label(np.asarray(mask, dtype=bool), structure=EIGHT)[1])


def has_2x2_block(mask: np.ndarray) -> bool:
    m = np.asarray(mask, dtype=bool)
    return bool(np.any(m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]))


def _sequential_delete(mask: np.ndarray, sel: np.ndarray) -> bool:
    """Delete ``sel`` pixels in raster order, each only if still removable."""
    h, w = mask.shape
    W = w + 2
    flat = bytearray(np.pad(mask.astype(np.uint8), 1).tobytes())
    o0, o1, o2, o3, o4, o5, o6, o7 = [dr * W + dc for dr, dc in _OFFSETS]
    removable = _REMOVABLE
    r, c = np.nonzero(sel)
    changed = False
    for i in ((r + 1) * W + (c + 1)).tolist():
        code = (flat[i + o0] | flat[i + o1] << 1 | flat[i + o2] << 2 | flat[i + o3] << 3
                | flat[i + o4] << 4 | flat[i + o5] << 5 | flat[i + o6] << 6 | flat[i + o7] << 7)
        if removable[code]:
            flat[i] = 0
            changed = True
    if changed:
        mask[...] = np.frombuffer(bytes(flat), dtype=np.uint8).reshape(h + 2, W)[1:-1, 1:-1] == 1
    return changed


def _zs_step(mask: np.ndarray, sel: np.ndarray, before: np.ndarray, n_before: int):
    """Delete ``sel`` at once unless that would split or erase a component.

    Components whose topology the parallel step would break (Zhang-Suen's
    known failure on 2x2 squares and two-pixel diagonals) fall back to the
    sequential simple-point check. Returns the labelling of the new mask.
    """
    trial = mask & ~sel
    after, n_after = ndimage.label(trial, structure=EIGHT)
    kept = np.bincount(before[trial], minlength=n_before + 1)[1:] > 0
    if n_after == n_before and kept.all():
        mask &= ~sel
        return after, n_after
    pairs = np.unique(before[trial].astype(np.int64) * (n_after + 1) + after[trial])
    per_old = np.bincount(pairs // (n_after + 1), minlength=n_before + 1)
    bad = np.flatnonzero(per_old[1:] != 1) + 1
    risky = sel & np.isin(before, bad)
    mask &= ~(sel & ~risky)
    _sequential_delete(mask, risky)
    return ndimage.label(mask, structure=EIGHT)


def thin(img: BinaryImage | np.ndarray) -> PixelSkeleton:
    """Zhang-Suen thinning with a connectivity-preservation check.

    Each sub-iteration deletes the Zhang-Suen candidates in parallel, except in
    components where that would change the component structure; there the
    candidates are removed in raster order, each only while it is still a
    simple point that is not an end point. When Zhang-Suen stalls, remaining
    simple non-end pixels (staircase corners, 2x2 blocks) are removed the
    same sequential way, then Zhang-Suen resumes.
    """
    fg = img.foreground if isinstance(img, BinaryImage) else np.asarray(img, dtype=bool)
    if not fg.any():
        raise InvalidInputError("training image has no foreground pixels")
    # work on the foreground bounding box plus a one-pixel margin
    rows, cols = np.nonzero(fg)
    r0, r1 = max(rows.min() - 1, 0), min(rows.max() + 2, fg.shape[0])
    c0, c1 = max(cols.min() - 1, 0), min(cols.max() + 2, fg.shape[1])
    mask = fg[r0:r1, c0:c1].copy()
    labels, n = ndimage.label(mask, structure=EIGHT)

    while True:
        changed = False
        for table in (ZS_FIRST, ZS_SECOND):
            sel = mask & table[neighbour_codes(mask)]
            if sel.any():
                before = int(mask.sum())
                labels, n = _zs_step(mask, sel, labels, n)
                changed |= int(mask.sum()) != before
        if changed:
            continue
        if not _sequential_delete(mask, mask & _REMOVABLE[neighbour_codes(mask)]):
            break
        labels, n = ndimage.label(mask, structure=EIGHT)
    out = np.zeros_like(fg)
    out[r0:r1, c0:c1] = mask
    return PixelSkeleton(out)


def classify_pixels(ps: PixelSkeleton | np.ndarray):
    """End points (exactly one neighbour) and branch points (three or more).

    Both lists hold ``(x, y)`` pixel coordinates in raster order.
    """
    sk = ps.skeleton if isinstance(ps, PixelSkeleton) else np.asarray(ps, dtype=bool)
    n = neighbour_counts(sk)
    br = np.argwhere(sk & (n >= 3))
    en = np.argwhere(sk & (n == 1))
    return [(int(c), int(r)) for r, c in br], [(int(c), int(r)) for r, c in en]


def _neighbours(sk: np.ndarray, r: int, c: int):
    h, w = sk.shape
    for dr, dc in _OFFSETS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and sk[rr, cc]:
            yield rr, cc


def prune_spurs(skel: np.ndarray, prune_length: int = 3) -> np.ndarray:
    """Remove end-point branches shorter than ``prune_length`` pixels (single pass).

    Expects thinned input. Pixels a removed spur leaves removable (the stub
    where it joined the main branch) are cleaned up afterwards.
    """
    sk = np.array(skel, dtype=bool)
    if prune_length <= 0:
        return sk
    counts = neighbour_counts(sk)
    doomed = []
    for r, c in np.argwhere(sk & (counts == 1)):
        path = [(int(r), int(c))]
        prev = None
        cur = (int(r), int(c))
        reached_branch = False
        while True:
            nxt = [p for p in _neighbours(sk, *cur) if p != prev and p not in path]
            if not nxt:
                break
            step = nxt[0]
            if counts[step] >= 3:
                reached_branch = True
                break
            if counts[step] != 2 or len(path) >= prune_length:
                break
            prev, cur = cur, step
            path.append(step)
        if reached_branch and len(path) < prune_length:
            doomed.extend(path)
    for p in doomed:
        sk[p] = False
    if doomed:
        while _sequential_delete(sk, sk & _REMOVABLE[neighbour_codes(sk)]):
            pass
    return sk


def _to_world(row: float, col: float, height: int) -> tuple[float, float]:
    return float(col), float(height - 1 - row)


def extract_graph(ps: PixelSkeleton | np.ndarray, root_hint, prune_length: int = 3,
                  merge_radius: float = 2.0, root_radius: float = 5.0) -> Skeleton:
    """Turn a pixel skeleton into a rooted straight-edge :class:`Skeleton`.

    ``root_hint`` is an ``(x, y)`` pixel coordinate. The node nearest to it
    becomes the root; edges are oriented away from it in breadth-first order.
    """
    raw = ps.skeleton if isinstance(ps, PixelSkeleton) else np.asarray(ps, dtype=bool)
    raw = np.asarray(raw, dtype=bool)
    if not raw.any():
        raise InvalidInputError("pixel skeleton is empty")
    labels, ncomp = ndimage.label(raw, structure=EIGHT)
    if ncomp > 1:
        sizes = np.bincount(labels.ravel())[1:]
        raise MultipleComponentsError(sorted(sizes.tolist(), reverse=True))

    sk = prune_spurs(raw, prune_length)
    height = sk.shape[0]
    pix = np.argwhere(sk)
    hx, hy = float(root_hint[0]), float(root_hint[1])
    d_hint = np.hypot(pix[:, 1] - hx, pix[:, 0] - hy)
    if d_hint.min() > root_radius:
        raise InvalidRootError(
            f"root hint ({hx:g}, {hy:g}) is {d_hint.min():.1f} px from the skeleton"
        )

    counts = neighbour_counts(sk)
    node_pix = np.argwhere(sk & ((counts == 1) | (counts >= 3) | (counts == 0)))
    if len(node_pix) == 0:
        raise InvalidInputError("skeleton is a closed loop without end or branch points")

    # merge node pixels closer than merge_radius (union-find over KD-tree pairs)
    parent = list(range(len(node_pix)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(cKDTree(node_pix).query_pairs(merge_radius)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = sorted({find(i) for i in range(len(node_pix))})
    cluster_index = {r: k for k, r in enumerate(roots)}
    cluster = np.full(sk.shape, -1, dtype=np.int64)
    members: list[list[tuple[int, int]]] = [[] for _ in roots]
    for i, (r, c) in enumerate(node_pix):
        k = cluster_index[find(i)]
        cluster[r, c] = k
        members[k].append((int(r), int(c)))
    centre = [tuple(np.mean(m, axis=0)) for m in members]  # (row, col)

    # trace the pixel path leaving every cluster
    visited = np.zeros(sk.shape, dtype=bool)
    links: list[tuple[int, int]] = []
    for k, mem in enumerate(members):
        for q in mem:
            for r0 in _neighbours(sk, *q):
                if cluster[r0] == k or visited[r0]:
                    continue
                if cluster[r0] >= 0:
                    links.append((k, int(cluster[r0])))
                    continue
                # path pixels have exactly two neighbours, so the walk is unique
                prev, cur = q, r0
                visited[cur] = True
                end = None
                while True:
                    nbrs = [p for p in _neighbours(sk, *cur) if p != prev]
                    hit = [p for p in nbrs if cluster[p] >= 0]
                    if hit:
                        end = int(cluster[hit[0]])
                        break
                    nxt = [p for p in nbrs if not visited[p]]
                    if not nxt:
                        break
                    prev, cur = cur, nxt[0]
                    visited[cur] = True
                if end is not None:
                    links.append((k, end))

    undirected: dict[frozenset, tuple[int, int]] = {}
    for a, b in links:
        if a == b:
            log.warning("dropping loop path at cluster %d", a)
            continue
        undirected.setdefault(frozenset((a, b)), (a, b))

    adj: dict[int, list[int]] = {k: [] for k in range(len(members))}
    for a, b in undirected.values():
        adj[a].append(b)
        adj[b].append(a)

    d_centre = [math.hypot(c - hx, r - hy) for r, c in centre]
    root_cluster = int(np.argmin(d_centre))

    order = {root_cluster: 0}
    queue = deque([root_cluster])
    bfs = [root_cluster]
    while queue:
        k = queue.popleft()
        for m in sorted(adj[k]):
            if m not in order:
                order[m] = len(order)
                bfs.append(m)
                queue.append(m)
    if len(order) != len(members):
        # cannot happen for a connected skeleton; guard against tracing bugs
        raise InvalidInputError("graph extraction produced disconnected nodes")

    new_id = {k: i for i, k in enumerate(bfs)}
    nodes = {}
    for k in bfs:
        r, c = centre[k]
        nid = new_id[k]
        nodes[nid] = Node(nid, Point2(*_to_world(r, c, height)), [], 1, nid == 0)
    oriented = []
    for a, b in undirected.values():
        fa, fb = new_id[a], new_id[b]
        oriented.append((fa, fb) if fa < fb else (fb, fa))
    edges = {i: Edge(i, f, s) for i, (f, s) in enumerate(sorted(oriented))}
    out = Skeleton(nodes, edges, root=0)
    for nid, node in nodes.items():
        node.mark = max(1, min(3, out.degree(nid)))
        node.alpha = [unit(out.vector(eid)) for eid in sorted(out.in_edges(nid))]
    problems = validate(out)
    if problems:
        log.warning("extracted skeleton violates %d invariants, first: %s", len(problems), problems[0])
    return out


def _line_pixels(r0: int, c0: int, r1: int, c1: int):
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        yield r, c
        if r == r1 and c == c1:
            return
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr


def rasterize_edges(sk: Skeleton, shape) -> np.ndarray:
    """Draw every edge as an 8-connected Bresenham line on a ``shape`` raster."""
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    for e in sk.edges.values():
        f, s = sk.nodes[e.father].p, sk.nodes[e.son].p
        r0, c0 = int(round(h - 1 - f.y)), int(round(f.x))
        r1, c1 = int(round(h - 1 - s.y)), int(round(s.x))
        for r, c in _line_pixels(r0, c0, r1, c1):
            if 0 <= r < h and 0 <= c < w:
                out[r, c] = True
    return out
