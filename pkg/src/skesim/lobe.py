"""
Parametric turbidite lobe.

The lobe lives in a local frame with its long axis on +x (apex at x=0, toe at
x=L) and its top at z=0. Two mirror-image B-splines in the xy plane give the
half-width w(x); a third B-spline in the xz plane gives the bottom depth d(x).
Each cross-section at fixed x is the quarter-ellipse pair

    |y| <= w(x),   -d(x) * sqrt(1 - (y / w(x))**2) <= z <= 0

and a placement (translation + rotation about z) maps the local frame to
world coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidArgumentError, InvalidOutlineError, InvalidTemplateError
from .skeleton import Point2
from .synthesis import RegionBoundary

__all__ = [
    "BSplineCurve",
    "bspline_eval",
    "LobeParams",
    "Lobe",
    "build_lobe",
    "point_in_lobe",
    "region_polygon",
    "top_surface",
    "DEFAULT_OUTLINE",
    "DEFAULT_PROFILE",
    "half_ellipse_templates",
]

TABLE_SAMPLES = 2048


def clamped_uniform_knots(n_ctrl: int, degree: int) -> np.ndarray:
    inner = np.linspace(0.0, 1.0, n_ctrl - degree + 1)
    return np.concatenate([np.zeros(degree), inner, np.ones(degree)])


@dataclass
class BSplineCurve:
    degree: int
    control_points: np.ndarray
    knots: np.ndarray = None

    def __post_init__(self):
        self.control_points = np.asarray(self.control_points, dtype=np.float64)
        p = int(self.degree)
        n = len(self.control_points)
        if p < 1:
            raise InvalidArgumentError("B-spline degree must be >= 1")
        if self.control_points.ndim != 2 or self.control_points.shape[1] != 2 or n < p + 1:
            raise InvalidArgumentError(f"need at least {p + 1} 2-D control points")
        if self.knots is None:
            self.knots = clamped_uniform_knots(n, p)
        self.knots = np.asarray(self.knots, dtype=np.float64)
        k = self.knots
        if len(k) != n + p + 1:
            raise InvalidArgumentError("knot vector must have len(control) + degree + 1 entries")
        if np.any(np.diff(k) < 0):
            raise InvalidArgumentError("knot vector must be non-decreasing")
        if not (np.all(k[:p + 1] == 0.0) and np.all(k[-p - 1:] == 1.0)):
            raise InvalidArgumentError("knot vector must be clamped on [0, 1]")

    def __call__(self, t: float) -> Point2:
        return bspline_eval(self, t)

    def sample(self, ts) -> np.ndarray:
        """Vectorised de Boor over an array of parameters; returns ``(m, 2)``."""
        ts = np.asarray(ts, dtype=np.float64).ravel()
        if ts.size and not (np.all(ts >= 0.0) and np.all(ts <= 1.0)):
            raise DomainError("curve parameters must lie in [0, 1]")
        p, k, P = self.degree, self.knots, self.control_points
        n = len(P)
        span = np.clip(np.searchsorted(k, ts, side="right") - 1, p, n - 1)
        d = P[span[:, None] - p + np.arange(p + 1)[None, :]].copy()
        for r in range(1, p + 1):
            for j in range(p, r - 1, -1):
                i = j + span - p
                den = k[i + p - r + 1] - k[i]
                with np.errstate(divide="ignore", invalid="ignore"):
                    a = np.where(den == 0.0, 0.0, (ts - k[i]) / den)
                d[:, j] = (1.0 - a)[:, None] * d[:, j - 1] + a[:, None] * d[:, j]
        out = d[:, p]
        out[ts >= 1.0] = P[-1]
        return out

    def mirrored_y(self) -> "BSplineCurve":
        cp = self.control_points.copy()
        cp[:, 1] *= -1.0
        return BSplineCurve(self.degree, cp, self.knots.copy())


def bspline_eval(c: BSplineCurve, t: float) -> Point2:
    """de Boor's algorithm on a clamped curve; ``t`` must lie in [0, 1]."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"curve parameter {t} outside [0, 1]")
    p, k, P = c.degree, c.knots, c.control_points
    n = len(P)
    if t >= 1.0:
        return Point2(float(P[-1, 0]), float(P[-1, 1]))
    span = int(np.searchsorted(k, t, side="right")) - 1
    span = min(max(span, p), n - 1)
    d = [P[j + span - p].copy() for j in range(p + 1)]
    for r in range(1, p + 1):
        for j in range(p, r - 1, -1):
            i = j + span - p
            den = k[i + p - r + 1] - k[i]
            a = 0.0 if den == 0 else (t - k[i]) / den
            d[j] = (1.0 - a) * d[j - 1] + a * d[j]
    return Point2(float(d[p][0]), float(d[p][1]))


# control points as fractions: outline (x/L, y/W), profile (x/L, z/D)
DEFAULT_OUTLINE = ((0.0, 0.0), (0.15, 0.25), (0.5, 0.5), (0.85, 0.25), (1.0, 0.0))
DEFAULT_PROFILE = ((0.0, 0.0), (0.3, -1.0), (0.7, -1.0), (1.0, 0.0))


def half_ellipse_templates(segments: int = 256):
    """Degree-1 templates tracing w = W/2*sqrt(1-s^2) and d = D*sqrt(1-s^2), s = 2x/L - 1."""
    th = np.linspace(0.0, math.pi, segments + 1)
    xs = (1.0 - np.cos(th)) / 2.0
    s = np.sin(th)
    s[[0, -1]] = 0.0
    outline = [(float(x), float(0.5 * v)) for x, v in zip(xs, s)]
    profile = [(float(x), float(-v)) for x, v in zip(xs, s)]
    return outline, profile


@dataclass
class LobeParams:
    length: float = 100.0
    width: float = 40.0
    depth: float = 10.0
    outline: Sequence = DEFAULT_OUTLINE
    profile: Sequence = DEFAULT_PROFILE
    outline_degree: int = 3
    profile_degree: int = 3
    normalize: bool = True  # rescale so max half-width is W/2 and max depth is D
    dx: float = 0.0
    dy: float = 0.0
    rot_deg: float = 0.0
    top_mode: str = "flat"
    relief: float = 0.5

    @classmethod
    def from_json(cls, obj: dict) -> "LobeParams":
        place = obj.get("placement", {})
        kw = dict(
            length=float(obj["L"]), width=float(obj["W"]), depth=float(obj["D"]),
            dx=float(place.get("dx", 0.0)), dy=float(place.get("dy", 0.0)),
            rot_deg=float(place.get("rot_deg", 0.0)),
            top_mode=obj.get("top_mode", "flat"), relief=float(obj.get("relief", 0.5)),
        )
        if obj.get("template") == "half-ellipse":
            o, p = half_ellipse_templates()
            kw.update(outline=o, profile=p, outline_degree=1, profile_degree=1)
        if "outline" in obj:
            kw["outline"] = [tuple(map(float, q)) for q in obj["outline"]]
            kw["outline_degree"] = int(obj.get("outline_degree", 3))
        if "profile" in obj:
            kw["profile"] = [tuple(map(float, q)) for q in obj["profile"]]
            kw["profile_degree"] = int(obj.get("profile_degree", 3))
        if "normalize" in obj:
            kw["normalize"] = bool(obj["normalize"])
        return cls(**kw)

    def to_json(self) -> dict:
        return {
            "L": self.length, "W": self.width, "D": self.depth,
            "placement": {"dx": self.dx, "dy": self.dy, "rot_deg": self.rot_deg},
            "top_mode": self.top_mode, "relief": self.relief,
            "outline": [list(q) for q in self.outline], "outline_degree": self.outline_degree,
            "profile": [list(q) for q in self.profile], "profile_degree": self.profile_degree,
            "normalize": self.normalize,
        }


def _monotone_table(pts: np.ndarray, what: str):
    xs = pts[:, 0]
    if np.any(np.diff(xs) < -1e-9):
        raise InvalidTemplateError(f"{what} curve is not monotone in x")
    return np.maximum.accumulate(xs), pts[:, 1]


@dataclass
class Lobe:
    params: LobeParams
    b_right: BSplineCurve
    b_left: BSplineCurve
    profile: BSplineCurve
    table_x_w: np.ndarray = field(repr=False, default=None)
    table_w: np.ndarray = field(repr=False, default=None)
    table_x_d: np.ndarray = field(repr=False, default=None)
    table_d: np.ndarray = field(repr=False, default=None)

    @property
    def length(self) -> float:
        return self.params.length

    # -- lookup tables --------------------------------------------------------
    def w(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.table_x_w, self.table_w)
        return np.where((x >= 0.0) & (x <= self.length), out, 0.0)

    def d(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.table_x_d, self.table_d)
        return np.where((x >= 0.0) & (x <= self.length), out, 0.0)

    # -- frames ---------------------------------------------------------------
    def to_local(self, x, y):
        th = math.radians(self.params.rot_deg)
        c, s = math.cos(th), math.sin(th)
        x = np.asarray(x, dtype=np.float64) - self.params.dx
        y = np.asarray(y, dtype=np.float64) - self.params.dy
        return c * x + s * y, -s * x + c * y

    def to_world(self, x, y):
        th = math.radians(self.params.rot_deg)
        c, s = math.cos(th), math.sin(th)
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return c * x - s * y + self.params.dx, s * x + c * y + self.params.dy

    def axis_direction(self) -> tuple[float, float]:
        th = math.radians(self.params.rot_deg)
        return (math.cos(th), math.sin(th))

    # -- membership -----------------------------------------------------------
    def contains(self, pts) -> np.ndarray:
        """Vectorised membership of world points ``(N, 3)``; boundary counts as inside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        x, y = self.to_local(pts[:, 0], pts[:, 1])
        z = pts[:, 2]
        return self._contains_local(x, y, z)

    def _contains_local(self, x, y, z) -> np.ndarray:
        w = self.w(x)
        d = self.d(x)
        ok = (x >= 0.0) & (x <= self.length) & (z <= 0.0) & (w > 0.0) & (np.abs(y) <= w)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.clip(np.where(w > 0.0, y / w, 1.0), -2.0, 2.0)
        floor = -d * np.sqrt(np.maximum(0.0, 1.0 - r * r))
        return ok & (z >= floor)

    def inside_outline(self, x, y) -> np.ndarray:
        lx, ly = self.to_local(x, y)
        w = self.w(lx)
        return (lx >= 0.0) & (lx <= self.length) & (w > 0.0) & (np.abs(ly) <= w)

    def top_surface_many(self, x, y) -> np.ndarray:
        """Top elevation for world columns; NaN outside the outline."""
        lx, ly = self.to_local(x, y)
        w = self.w(lx)
        inside = (lx >= 0.0) & (lx <= self.length) & (w > 0.0) & (np.abs(ly) <= w)
        if self.params.top_mode == "flat":
            z = np.zeros_like(lx)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(w > 0.0, ly / w, 1.0)
            s = np.sqrt(np.maximum(0.0, 1.0 - r * r))
            z = -self.params.relief * self.d(lx) * (1.0 - s)
        return np.where(inside, z, np.nan)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """World bounding box ``(lo, hi)`` as 3-vectors."""
        ts = np.linspace(0.0, 1.0, 257)
        pts = np.vstack([self.b_right.sample(ts), self.b_left.sample(ts)])
        wx, wy = self.to_world(pts[:, 0], pts[:, 1])
        zmin = -float(np.max(self.table_d)) if len(self.table_d) else 0.0
        return (np.array([wx.min(), wy.min(), zmin]), np.array([wx.max(), wy.max(), 0.0]))


def build_lobe(p: LobeParams) -> Lobe:
    L, W, D = float(p.length), float(p.width), float(p.depth)
    if not (L > 0 and W > 0 and D > 0):
        raise InvalidArgumentError("lobe length, width and depth must be positive")
    if p.top_mode not in ("flat", "mounded"):
        raise InvalidArgumentError(f"unknown top_mode {p.top_mode!r}")
    if not 0.0 <= p.relief <= 1.0:
        raise InvalidArgumentError("relief must lie in [0, 1]")

    ts = np.linspace(0.0, 1.0, TABLE_SAMPLES)
    o = np.array(p.outline, dtype=np.float64) * (L, W)
    o[:, 1] = np.abs(o[:, 1])
    left = BSplineCurve(p.outline_degree, o)
    left_pts = left.sample(ts)
    pr = np.array(p.profile, dtype=np.float64) * (L, D)
    pr[:, 1] = -np.abs(pr[:, 1])
    profile = BSplineCurve(p.profile_degree, pr)
    prof_pts = profile.sample(ts)

    if p.normalize:
        wmax = float(left_pts[:, 1].max())
        dmax = float(-prof_pts[:, 1].min())
        if wmax <= 0 or dmax <= 0:
            raise InvalidTemplateError("template has zero width or depth")
        left.control_points[:, 1] *= (W / 2.0) / wmax
        profile.control_points[:, 1] *= D / dmax
        left_pts[:, 1] *= (W / 2.0) / wmax
        prof_pts[:, 1] *= D / dmax

    xw, w = _monotone_table(left_pts, "outline")
    xd, z = _monotone_table(prof_pts, "profile")
    w = np.maximum(w, 0.0)
    d = np.maximum(-z, 0.0)
    # the clamped curves interpolate their end controls; pin the extremes exactly
    w[0] = w[-1] = 0.0
    d[0] = d[-1] = 0.0
    return Lobe(p, left.mirrored_y(), left, profile, xw, w, xd, d)


def point_in_lobe(lobe: Lobe, q) -> bool:
    return bool(lobe.contains(np.asarray(q, dtype=np.float64).reshape(1, 3))[0])


def region_polygon(lobe: Lobe, n: int = 128) -> RegionBoundary:
    """World-space outline: ``b_right`` forward, then ``b_left`` backward."""
    if n < 8:
        raise InvalidArgumentError("need at least 8 samples per side")
    ts = np.linspace(0.0, 1.0, n)
    right = lobe.b_right.sample(ts)
    left = lobe.b_left.sample(ts[::-1])[1:-1]
    pts = np.vstack([right, left])
    wx, wy = lobe.to_world(pts[:, 0], pts[:, 1])
    poly = np.column_stack([wx, wy])
    ext = float(np.ptp(poly, axis=0).max())
    signed = 0.5 * float(np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1]))
    if abs(signed) <= 1e-9 * ext * ext:
        raise InvalidOutlineError("lobe outline has zero area")
    return RegionBoundary(poly)


def top_surface(lobe: Lobe, x: float, y: float) -> float:
    z = float(lobe.top_surface_many(np.array([x]), np.array([y]))[0])
    if math.isnan(z):
        raise DomainError(f"({x}, {y}) lies outside the lobe outline")
    return z
