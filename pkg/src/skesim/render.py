"""Quick-look raster renders: skeleton plots and voxel-grid slices (RGB arrays)."""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError
from .skeleton import Skeleton
from .synthesis import RegionBoundary
from .thinning import _line_pixels
from .volume import LabeledGrid3

__all__ = ["render_skeleton", "render_slice", "LABEL_COLOURS"]

LABEL_COLOURS = np.array([[255, 255, 255], [222, 196, 140], [40, 90, 200]], dtype=np.uint8)


def render_skeleton(sk: Skeleton, region: RegionBoundary | None = None,
                    size: int = 512, margin: int = 8) -> np.ndarray:
    """White canvas, grey region, black edges, red root; y points up."""
    pts = [n.p for n in sk.nodes.values()]
    if region is not None:
        pts += [tuple(v) for v in region.vertices]
    xy = np.array(pts, dtype=np.float64).reshape(-1, 2)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    scale = (size - 1 - 2 * margin) / span

    def px(p):
        return (int(round(size - 1 - margin - (p[1] - lo[1]) * scale)),
                int(round(margin + (p[0] - lo[0]) * scale)))

    img = np.full((size, size, 3), 255, dtype=np.uint8)
    if region is not None:
        rows, cols = np.mgrid[0:size, 0:size]
        wx = lo[0] + (cols.ravel() - margin) / scale
        wy = lo[1] + (size - 1 - margin - rows.ravel()) / scale
        inside = region.contains_points(np.column_stack([wx, wy])).reshape(size, size)
        img[inside] = 215
    for e in sk.edges.values():
        (r0, c0), (r1, c1) = px(sk.nodes[e.father].p), px(sk.nodes[e.son].p)
        for r, c in _line_pixels(r0, c0, r1, c1):
            if 0 <= r < size and 0 <= c < size:
                img[r, c] = 0
    r, c = px(sk.nodes[sk.root].p)
    img[max(r - 2, 0):r + 3, max(c - 2, 0):c + 3] = (220, 0, 0)
    return img


def render_slice(grid: LabeledGrid3, axis: str = "z", index: int | None = None) -> np.ndarray:
    """One grid slice coloured by label, with the second axis pointing up."""
    axis = axis.lower()
    if axis not in ("x", "y", "z"):
        raise InvalidArgumentError(f"axis must be x, y or z, not {axis!r}")
    a = "zyx".index(axis)  # array axis for (nz, ny, nx) labels
    n = grid.labels.shape[a]
    if index is None:
        index = n // 2
    if not 0 <= index < n:
        raise InvalidArgumentError(f"slice index {index} outside [0, {n})")
    plane = np.take(grid.labels, index, axis=a)
    return LABEL_COLOURS[plane[::-1]]
