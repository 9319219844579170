"""Stochastic simulation of tree-like channel systems inside parametric lobes."""
from .errors import SkesimError
from .lobe import LobeParams, build_lobe, point_in_lobe, region_polygon, top_surface
from .skeleton import Skeleton, read_csv, validate, write_csv
from .stats import TrainingStats, extract_samples, fit, load_stats, save_stats
from .synthesis import GrowthConfig, RegionBoundary, bif_step, synthesize
from .thinning import BinaryImage, extract_graph, thin
from .volume import ChannelParams, GridSpec, LabeledGrid3, point_in_channel, rasterize

__version__ = "0.1.0"

__all__ = [
    "SkesimError",
    "LobeParams",
    "build_lobe",
    "point_in_lobe",
    "region_polygon",
    "top_surface",
    "Skeleton",
    "read_csv",
    "validate",
    "write_csv",
    "TrainingStats",
    "extract_samples",
    "fit",
    "load_stats",
    "save_stats",
    "GrowthConfig",
    "RegionBoundary",
    "bif_step",
    "synthesize",
    "BinaryImage",
    "extract_graph",
    "thin",
    "ChannelParams",
    "GridSpec",
    "LabeledGrid3",
    "point_in_channel",
    "rasterize",
]
