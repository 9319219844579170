import math

import numpy as np
import pytest

from skesim.skeleton import Skeleton
from skesim.stats import TrainingStats, UniformDistribution


def line_raster(shape=(9, 16), row=4, cols=range(3, 13)):
    img = np.zeros(shape, dtype=bool)
    img[row, list(cols)] = True
    return img


def y_raster(size=50, tail=20, arm=15):
    """1-px Y: horizontal tail from column 5, two diagonal arms at +/-45 degrees."""
    img = np.zeros((size, size), dtype=bool)
    r0, cj = size // 2, 5 + tail
    img[r0, 5:cj + 1] = True
    for k in range(1, arm + 1):
        img[r0 - k, cj + k] = True
        img[r0 + k, cj + k] = True
    return img, (5, r0), (cj, r0)


def diagonal_cross(size=21, arm=6):
    """1-px x-shaped cross: the centre pixel has exactly four neighbours."""
    img = np.zeros((size, size), dtype=bool)
    c = size // 2
    for k in range(-arm, arm + 1):
        img[c + k, c + k] = True
        img[c + k, c - k] = True
    return img, (c, c)


def plus_raster(size=41, arm=15, width=1):
    img = np.zeros((size, size), dtype=bool)
    c = size // 2
    h = width // 2
    img[c - h:c + h + 1, c - arm:c + arm + 1] = True
    img[c - arm:c + arm + 1, c - h:c + h + 1] = True
    return img, c


def trunk_with_children(angle=math.pi / 6, child_len=5.0, trunk_len=10.0):
    """Root at the origin, trunk along +x, two children at +/-angle."""
    sk = Skeleton.with_root((0.0, 0.0), (1.0, 0.0), root_mark=2)
    j = sk.add_node((trunk_len, 0.0), mark=3, alpha=[(1.0, 0.0)])
    sk.add_edge(sk.root, j)
    sk.nodes[sk.root].mark = 3
    for s in (1, -1):
        d = (math.cos(s * angle), math.sin(s * angle))
        k = sk.add_node((trunk_len + child_len * d[0], child_len * d[1]), mark=1, alpha=[d])
        sk.add_edge(j, k)
    return sk


class HTreeRng:
    """Scripted generator that makes growth an H-tree: right-angle turns, halving lengths.

    Works with stats whose angle law is U[pi/2, pi/2] and whose length law is
    ``LENGTH_LAW``. Length draws return the value that maps to 64 / 2**g for
    generation ``g``, worked out from how many draws each step consumes.
    """

    LENGTH_LAW = UniformDistribution(0.01, 100.0)

    def __init__(self):
        self.calls = 0

    def _generation(self, k):
        # step 1 draws 2 numbers; step m >= 2 draws 4 * 2**(m - 2)
        if k < 2:
            return 0
        k -= 2
        m = 2
        while k >= 4 * 2 ** (m - 2):
            k -= 4 * 2 ** (m - 2)
            m += 1
        return m - 1

    def random(self):
        k = self.calls
        self.calls += 1
        if k % 2 == 0:
            return 0.5  # angle draw; the angle law is degenerate
        length = 64.0 / 2 ** self._generation(k)
        lo, hi = self.LENGTH_LAW.lo, self.LENGTH_LAW.hi
        return (length - lo) / (hi - lo)

    def integers(self, lo, hi=None):
        return lo


@pytest.fixture
def htree_stats():
    return TrainingStats([math.pi / 2], [1.0], UniformDistribution(math.pi / 2, math.pi / 2),
                         HTreeRng.LENGTH_LAW)


@pytest.fixture
def wide_stats():
    return TrainingStats([], [], UniformDistribution(-0.7, 0.7), UniformDistribution(8.0, 20.0))
