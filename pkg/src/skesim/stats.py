"""Bifurcation-angle and edge-length samples, and the uniform laws fitted to them."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySkeletonError, InsufficientDataError, InvalidInputError
from .skeleton import Skeleton, signed_angle

__all__ = [
    "UniformDistribution",
    "TrainingStats",
    "extract_samples",
    "fit_uniform",
    "fit",
    "sample",
    "make_rng",
    "save_stats",
    "load_stats",
]


def make_rng(seed: int) -> np.random.Generator:
    """The run's generator: numpy PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class UniformDistribution:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise InvalidInputError(f"invalid uniform support [{self.lo}, {self.hi}]")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def scaled(self, factor: float) -> "UniformDistribution":
        return UniformDistribution(self.lo * factor, self.hi * factor)


def fit_uniform(samples) -> UniformDistribution:
    s = [float(v) for v in samples]
    if not s:
        raise InsufficientDataError("cannot fit a distribution to zero samples")
    return UniformDistribution(min(s), max(s))


def sample(dist: UniformDistribution, rng: np.random.Generator) -> float:
    """One draw from ``dist``; always inside ``[lo, hi]``."""
    if dist.degenerate:
        # keep the stream position independent of the distribution's width
        rng.random()
        return dist.lo
    v = dist.lo + (dist.hi - dist.lo) * rng.random()
    return min(max(v, dist.lo), dist.hi)


@dataclass
class TrainingStats:
    signed_angles: list[float] = field(default_factory=list)
    lengths: list[float] = field(default_factory=list)
    angle_dist: UniformDistribution | None = None
    length_dist: UniformDistribution | None = None

    def to_json(self) -> dict:
        def d(u):
            return None if u is None else {"lo": u.lo, "hi": u.hi}
        return {
            "angles": list(self.signed_angles),
            "lengths": list(self.lengths),
            "angle_dist": d(self.angle_dist),
            "length_dist": d(self.length_dist),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainingStats":
        def d(u):
            return None if u is None else UniformDistribution(float(u["lo"]), float(u["hi"]))
        try:
            return cls(
                [float(a) for a in obj.get("angles", [])],
                [float(v) for v in obj.get("lengths", [])],
                d(obj.get("angle_dist")),
                d(obj.get("length_dist")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed stats document: {exc}") from exc

    @classmethod
    def degenerate(cls, angle: float, length: float) -> "TrainingStats":
        """Stats whose laws always return ``+angle`` and ``length``."""
        return cls([angle], [length], UniformDistribution(angle, angle),
                   UniformDistribution(length, length))


def extract_samples(sk: Skeleton) -> TrainingStats:
    """Signed bifurcation angle and length of every edge.

    The angle of an edge is measured from the direction its father was reached
    by. Root edges are measured from the root inflow; a skeleton without an
    inflow (e.g. one read back from CSV) uses the direction of the root's
    lowest-id outgoing edge, which makes that edge's angle 0.
    """
    if not sk.edges:
        raise EmptySkeletonError("skeleton has no edges")
    angles, lengths = [], []
    inflow = sk.root_inflow
    if inflow is None:
        outs = sorted(sk.out_edges(sk.root))
        inflow = sk.direction(outs[0]) if outs else None
    for eid in sorted(sk.edges):
        e = sk.edges[eid]
        lengths.append(sk.length(eid))
        if e.father == sk.root:
            u = inflow
        else:
            ins = sorted(sk.in_edges(e.father))
            u = sk.direction(ins[0]) if ins else None
        if u is not None:
            angles.append(signed_angle(u, sk.direction(eid)))
    return TrainingStats(angles, lengths)


def fit(stats: TrainingStats) -> TrainingStats:
    return TrainingStats(stats.signed_angles, stats.lengths,
                         fit_uniform(stats.signed_angles), fit_uniform(stats.lengths))


def save_stats(stats: TrainingStats, path: str | Path) -> None:
    Path(path).write_text(json.dumps(stats.to_json(), indent=2) + "\n", encoding="utf-8")


def load_stats(path: str | Path) -> TrainingStats:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    st = TrainingStats.from_json(obj)
    if st.angle_dist is None or st.length_dist is None:
        st = fit(st)
    return st
