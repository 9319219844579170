"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run alone with ``pytest -m acceptance -v tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from conftest import HTreeRng, plus_raster, y_raster
from oracles import bruteforce_crossings, components8, disk, has_2x2, random_tree, thick_segment
from oracles import winding_inside
from skesim.cli import derive_seed, load_run_config, lobe_root, run_pipeline
from skesim.demo import TRAINING_ROOT, draw_training_image, write_demo
from skesim.lobe import LobeParams, build_lobe, half_ellipse_templates, region_polygon
from skesim.skeleton import Skeleton, rotate, validate
from skesim.stats import TrainingStats, UniformDistribution, extract_samples, fit
from skesim.synthesis import GrowthConfig, StepLog, bif_step, synthesize
from skesim.thinning import BinaryImage, extract_graph, thin
from skesim.volume import CHANNEL, LOBE, ChannelParams, GridSpec, rasterize

pytestmark = pytest.mark.acceptance

N_SEEDS = 100


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# ---------------------------------------------------------------- shared fixtures

def _training():
    img = BinaryImage.from_gray(draw_training_image())
    return extract_graph(thin(img), TRAINING_ROOT)


@pytest.fixture(scope="module")
def training():
    return _training()


@pytest.fixture(scope="module")
def seed_suite(training):
    """100 realizations grown in the default lobe outline, plus the time they took."""
    st = fit(extract_samples(training))
    st = TrainingStats(st.signed_angles, st.lengths, st.angle_dist, st.length_dist.scaled(0.3))
    lobe = build_lobe(LobeParams())
    region = region_polygon(lobe)
    root, inflow = lobe_root(lobe)
    cfg = GrowthConfig(max_bif_steps=8, root_point=root, root_inflow=inflow, region=region)
    t0 = time.perf_counter()
    sks = [synthesize(st, cfg, derive_seed(1000, 0, s)) for s in range(N_SEEDS)]
    return lobe, region, sks, time.perf_counter() - t0


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    write_demo(d)
    return d


# ---------------------------------------------------------------- 1: thinning

def _corpus():
    rng = np.random.default_rng(2024)
    out = []
    for w, ang in [(3, 0), (5, 30), (7, 60), (4, 90), (9, 135)]:
        c = np.array([32.0, 32.0])
        d = 24 * np.array([math.sin(math.radians(ang)), math.cos(math.radians(ang))])
        out.append((f"bar w={w} {ang}deg", thick_segment((64, 64), c - d, c + d, w / 2)))
    for r in (3, 6, 10, 15):
        out.append((f"disk r={r}", disk((2 * r + 8, 2 * r + 8), (r + 4, r + 4), r)))
    for w in (1, 3, 5):
        img, _, _ = y_raster()
        out.append((f"Y width {w}", _dilate(img, w)))
        pimg, _ = plus_raster(width=w)
        out.append((f"plus width {w}", pimg))
    ring = disk((40, 40), (20, 20), 15) & ~disk((40, 40), (20, 20), 9)
    out.append(("annulus", ring))
    for size in (64, 128, 192, 256, 256):
        out.append((f"tree {size}", random_tree(rng, size=size, depth=4, radius=2.5)))
    out.append(("tree 256 thick", random_tree(rng, size=256, depth=5, radius=4.0)))
    return out


def _dilate(img, w):
    from scipy import ndimage

    if w <= 1:
        return img
    return ndimage.binary_dilation(img, np.ones((3, 3), bool), iterations=(w - 1) // 2)


def test_criterion_01_thinning_suite(capsys):
    corpus = _corpus()
    bad, worst = [], 0.0
    for name, img in corpus:
        t0 = time.perf_counter()
        sk = thin(BinaryImage(img)).skeleton
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        again = thin(BinaryImage(sk)).skeleton
        if components8(sk) != components8(img):
            bad.append(f"{name}: components")
        if has_2x2(sk):
            bad.append(f"{name}: 2x2 block")
        if not np.array_equal(again, sk):
            bad.append(f"{name}: not idempotent")
        if dt >= 1.0:
            bad.append(f"{name}: {dt:.2f} s")
    ok = len(corpus) >= 20 and not bad
    report(capsys, 1, ok, f"{len(corpus)} images, slowest {worst * 1000:.0f} ms, failures {bad}")


# ---------------------------------------------------------------- 2: graph extraction

def test_criterion_02_graph_extraction(capsys):
    img, tail, _ = y_raster()
    y = extract_graph(thin(BinaryImage(img)), tail)
    marks = sorted(n.mark for n in y.nodes.values())
    y_ok = marks == [1, 1, 1, 3] and len(y.edges) == 3 and validate(y) == []
    pimg, c = plus_raster(width=3)
    p = extract_graph(thin(BinaryImage(pimg)), (c - 15, c))
    clamped = [n for n in p.nodes.values() if p.degree(n.id) == 4 and n.mark == 3]
    p_ok = len(clamped) == 1 and len(p.edges) == 4 and validate(p) == []
    report(capsys, 2, y_ok and p_ok,
           f"Y marks {marks}, {len(y.edges)} edges; plus: degree-4 node clamped to 3 = {bool(clamped)}")


# ---------------------------------------------------------------- 3: recurrence

def test_criterion_03_recurrence(capsys):
    stats = TrainingStats([], [], UniformDistribution(math.pi / 2, math.pi / 2), HTreeRng.LENGTH_LAW)
    rows, ok = [], True
    for k in range(1, 9):
        sk = Skeleton.with_root((0, 0), (1, 0), root_mark=2)
        rng = HTreeRng()
        for _ in range(k):
            bif_step(sk, stats, GrowthConfig(), rng, StepLog())
        good = len(sk.edges) == 2 ** k - 1 and len(sk.nodes) == 2 ** k and validate(sk) == []
        ok &= good
        rows.append(f"k={k}:{len(sk.edges)}/{len(sk.nodes)}")
    report(capsys, 3, ok, " ".join(rows))


# ---------------------------------------------------------------- 4: planarity

def test_criterion_04_planarity(seed_suite, capsys):
    lobe, region, sks, elapsed = seed_suite
    poly = [tuple(v) for v in region.vertices]
    crossings = bad_marks = outside = 0
    edges_total = 0
    t0 = time.perf_counter()
    for sk in sks:
        nodes = {i: (n.p.x, n.p.y) for i, n in sk.nodes.items()}
        edges = {i: (e.father, e.son) for i, e in sk.edges.items()}
        edges_total += len(edges)
        crossings += len(bruteforce_crossings(nodes, edges))
        bad_marks += sum(n.mark not in (1, 2, 3) for n in sk.nodes.values())
        outside += sum(not winding_inside(poly, p) for p in nodes.values())
    elapsed += time.perf_counter() - t0
    ok = crossings == 0 and bad_marks == 0 and outside == 0 and elapsed < 30.0
    report(capsys, 4, ok,
           f"{len(sks)} seeds, {edges_total} edges, crossings {crossings}, bad marks {bad_marks}, "
           f"nodes outside {outside}, {elapsed:.1f} s")


# ---------------------------------------------------------------- 5: determinism

def test_criterion_05_determinism(demo_dir, tmp_path, capsys):
    cfg = load_run_config(demo_dir / "scenario_three_systems.json")
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b")
    names = ["grid.raw"] + [f"lobe0_system{i}.csv" for i in range(3)]
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    report(capsys, 5, all(same), f"identical bytes: {dict(zip(names, same))}")


# ---------------------------------------------------------------- 6: stationarity

def _moved(sk, theta, tx, ty):
    out = sk.copy()
    for n in out.nodes.values():
        x, y = rotate((n.p.x, n.p.y), theta)
        n.p = type(n.p)(x + tx, y + ty)
        n.alpha = [rotate(a, theta) for a in n.alpha]
    if sk.root_inflow is not None:
        out.root_inflow = rotate(sk.root_inflow, theta)
    return out


def test_criterion_06_stationarity(training, capsys):
    base = np.sort(extract_samples(training).signed_angles)
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        theta = rng.uniform(-math.pi, math.pi)
        tx, ty = rng.uniform(-1e3, 1e3, 2)
        got = np.sort(extract_samples(_moved(training, theta, tx, ty)).signed_angles)
        worst = max(worst, float(np.max(np.abs(got - base))))
    report(capsys, 6, worst <= 1e-9, f"{len(base)} angles, 20 rigid motions, max deviation {worst:.2e}")


# ---------------------------------------------------------------- 7: lobe volume

def test_criterion_07_lobe_volume(capsys):
    L, W, D = 100.0, 40.0, 10.0
    t0 = time.perf_counter()
    o, p = half_ellipse_templates()
    lobe = build_lobe(LobeParams(L, W, D, o, p, 1, 1))
    want = 2 / 3 * math.pi * (L / 2) * (W / 2) * D
    lo, hi = lobe.bounds()
    rng = np.random.default_rng(7)
    pts = lo + rng.random((1_000_000, 3)) * (hi - lo)
    mc = lobe.contains(pts).mean() * float(np.prod(hi - lo))
    g = rasterize(lobe, [], GridSpec.covering(lo, hi, (128, 128, 128)))
    raster = g.counts()[LOBE] * g.spec.spacing ** 3
    dt = time.perf_counter() - t0
    e_mc, e_r = abs(mc - want) / want, abs(raster - want) / want
    ok = e_mc < 0.02 and e_r < 0.03 and dt < 20.0
    report(capsys, 7, ok, f"analytic {want:.1f}, Monte Carlo {mc:.1f} ({e_mc:.2%}), "
                          f"128^3 raster {raster:.1f} ({e_r:.2%}), {dt:.1f} s")


# ---------------------------------------------------------------- 8: channel volume

def test_criterion_08_channel_volume(capsys):
    w, d, length = 4.0, 2.0, 200.0
    h = w / 8
    lobe = build_lobe(LobeParams(length=400, width=100, depth=20))
    sk = Skeleton.with_root((100, 0), (1, 0), root_mark=1)
    son = sk.add_node((100 + length, 0))
    sk.add_edge(sk.root, son)
    spec = GridSpec((100 - w - 2, -w - 2, -d - 2), h, (int((length + 2 * w + 4) / h), 24, 8))
    g = rasterize(lobe, [(sk, ChannelParams(w, d))], spec)
    got = g.counts()[CHANNEL] * h ** 3
    want = math.pi / 2 * w * d * length
    err = abs(got - want) / want
    report(capsys, 8, err < 0.05, f"spacing {h}, raster {got:.1f} vs analytic {want:.1f} ({err:.2%}; "
                                  f"rounded end caps account for {2 / 3 * math.pi * w * w * d / want:.2%})")


# ---------------------------------------------------------------- 9: containment

def test_criterion_09_containment(seed_suite, capsys):
    lobe, _, sks, _ = seed_suite
    lo, hi = lobe.bounds()
    spec = GridSpec.covering(lo, hi, (128, 64, 32))
    xs, ys, zs = spec.axes()
    cp = ChannelParams(3.0, 1.5, 0.92)
    violations = channel_cells = 0
    for sk in sks:
        g = rasterize(lobe, [(sk, cp)], spec)
        k, j, i = np.nonzero(g.labels == CHANNEL)
        channel_cells += len(k)
        violations += int((~lobe.contains(np.column_stack([xs[i], ys[j], zs[k]]))).sum())
    ok = violations == 0 and channel_cells > 0
    report(capsys, 9, ok, f"{len(sks)} rasters, {channel_cells} channel cells, {violations} outside the lobe")


# ---------------------------------------------------------------- 10: scenarios

def test_criterion_10_scenarios(demo_dir, tmp_path, capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("scenario_one_system", "scenario_three_lobes", "scenario_three_systems"):
        cfg = load_run_config(demo_dir / f"{name}.json")
        m = run_pipeline(cfg, tmp_path / name)
        cells = [r["channel_cells"] for r in m["lobes"]]
        ok &= all(c > 0 for c in cells) and m["grid"]["dims"] == [128, 128, 64]
        parts.append(f"{name} channel cells {cells}")
    dt = time.perf_counter() - t0
    ok &= dt < 120.0
    report(capsys, 10, ok, "; ".join(parts) + f"; {dt:.1f} s combined")
