import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cox_de_boor_point, shoelace, uniform_clamped
from skesim.errors import (
    DomainError,
    InvalidArgumentError,
    InvalidOutlineError,
    InvalidTemplateError,
)
from skesim.lobe import (
    BSplineCurve,
    LobeParams,
    bspline_eval,
    build_lobe,
    half_ellipse_templates,
    point_in_lobe,
    region_polygon,
    top_surface,
)

EPS = 1e-7


@pytest.fixture(scope="module")
def default_lobe():
    return build_lobe(LobeParams(length=100, width=40, depth=10))


# ---------------------------------------------------------------- B-splines

def test_linear_midpoint():
    c = BSplineCurve(1, [(0, 0), (10, 2)])
    assert tuple(bspline_eval(c, 0.5)) == pytest.approx((5, 1))


def test_clamped_endpoints():
    c = BSplineCurve(3, [(0, 0), (1, 3), (3, 3), (4, 0), (6, 1)])
    assert tuple(bspline_eval(c, 0.0)) == (0.0, 0.0)
    assert tuple(bspline_eval(c, 1.0)) == pytest.approx((6.0, 1.0), abs=1e-12)


def test_cubic_matches_cox_de_boor():
    ctrl = [(0, 0), (1, 3), (3, 3), (4, 0)]
    c = BSplineCurve(3, ctrl)
    want = cox_de_boor_point(ctrl, 3, uniform_clamped(4, 3), 0.5)
    assert tuple(bspline_eval(c, 0.5)) == pytest.approx(tuple(want), abs=1e-12)
    assert tuple(want) == pytest.approx((2.0, 2.25))  # Bezier midpoint by hand


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.integers(0, 5),
       st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=8, max_size=8),
       st.floats(0, 1))
def test_random_curves_match_cox_de_boor(degree, extra, ctrl, t):
    ctrl = ctrl[:degree + 1 + extra] if degree + 1 + extra <= 8 else ctrl
    c = BSplineCurve(degree, ctrl)
    want = cox_de_boor_point(ctrl, degree, uniform_clamped(len(ctrl), degree), t)
    assert tuple(bspline_eval(c, t)) == pytest.approx(tuple(want), abs=1e-9)


@pytest.mark.parametrize("t", [-1e-6, 1.000001, math.nan])
def test_eval_outside_domain(t):
    with pytest.raises(DomainError):
        bspline_eval(BSplineCurve(1, [(0, 0), (1, 1)]), t)


def test_curve_validation():
    with pytest.raises(InvalidArgumentError):
        BSplineCurve(0, [(0, 0), (1, 1)])
    with pytest.raises(InvalidArgumentError):
        BSplineCurve(3, [(0, 0), (1, 1)])
    with pytest.raises(InvalidArgumentError):
        BSplineCurve(1, [(0, 0), (1, 1)], knots=[0, 0, 1])


# ---------------------------------------------------------------- build_lobe

def test_default_scaling_bound(default_lobe):
    assert 2 * default_lobe.table_w.max() <= 40 + EPS
    assert default_lobe.table_d.max() <= 10 + EPS
    assert 2 * default_lobe.table_w.max() == pytest.approx(40, rel=1e-9)
    assert len(default_lobe.table_w) >= 512


def test_width_and_depth_vanish_at_ends(default_lobe):
    for f in (default_lobe.w, default_lobe.d):
        assert float(f(0.0)) == 0.0 and float(f(100.0)) == 0.0
        xs = np.linspace(0, 100, 1001)
        assert (f(xs) >= 0).all()


def test_left_mirrors_right(default_lobe):
    for t in np.linspace(0, 1, 100):
        r, l = default_lobe.b_right(t), default_lobe.b_left(t)
        assert l.x == r.x and l.y == -r.y


def test_non_monotone_template_rejected():
    bad = ((0, 0), (0.6, 0.3), (0.2, 0.5), (1, 0))
    with pytest.raises(InvalidTemplateError):
        build_lobe(LobeParams(outline=bad, outline_degree=1))


@pytest.mark.parametrize("kw", [{"length": 0}, {"width": -1}, {"top_mode": "domed"}, {"relief": 2}])
def test_bad_params(kw):
    with pytest.raises(InvalidArgumentError):
        build_lobe(LobeParams(**kw))


def test_params_json_round_trip():
    p = LobeParams(length=80, width=30, depth=6, dx=3, dy=-2, rot_deg=20, top_mode="mounded",
                   relief=0.3)
    q = LobeParams.from_json(p.to_json())
    assert q.to_json() == p.to_json()
    h = LobeParams.from_json({"L": 10, "W": 4, "D": 1, "template": "half-ellipse"})
    assert h.outline_degree == 1 and len(h.outline) == 257


# ---------------------------------------------------------------- point_in_lobe

def test_axis_point_inside(default_lobe):
    assert point_in_lobe(default_lobe, (50, 0, -float(default_lobe.d(50)) / 2))


@given(st.floats(-200, 200), st.floats(-200, 200), st.floats(1e-9, 100))
def test_above_zero_is_outside(default_lobe, x, y, z):
    assert not point_in_lobe(default_lobe, (x, y, z))


def test_quarter_ellipse_boundary(default_lobe):
    w, d = float(default_lobe.w(50)), float(default_lobe.d(50))
    y = w / math.sqrt(2)
    assert not point_in_lobe(default_lobe, (50, y, -d / math.sqrt(2) - 1e-6))
    assert point_in_lobe(default_lobe, (50, y, -d / math.sqrt(2) + 1e-6))
    assert point_in_lobe(default_lobe, (50, -y, -d / math.sqrt(2) + 1e-6))


def test_equality_is_inside(default_lobe):
    assert point_in_lobe(default_lobe, (50, 0, 0))
    assert point_in_lobe(default_lobe, (50, 0, -float(default_lobe.d(50))))


def test_thin_lobe_keeps_only_the_axis():
    lb = build_lobe(LobeParams(width=1e-9))
    assert point_in_lobe(lb, (50, 0, -1))
    assert not point_in_lobe(lb, (50, 0.01, -1))
    with pytest.raises(InvalidOutlineError):
        region_polygon(lb)


@settings(max_examples=60, deadline=None)
@given(st.floats(-180, 180), st.floats(-50, 50), st.floats(-50, 50),
       st.floats(-10, 110), st.floats(-25, 25), st.floats(-12, 0))
def test_membership_follows_placement(rot, dx, dy, x, y, z):
    base = build_lobe(LobeParams())
    moved = build_lobe(LobeParams(dx=dx, dy=dy, rot_deg=rot))
    c, s = math.cos(math.radians(rot)), math.sin(math.radians(rot))
    q = (c * x - s * y + dx, s * x + c * y + dy, z)
    inside = point_in_lobe(base, (x, y, z))
    if inside != point_in_lobe(moved, q):
        # only allowed within round-off of the boundary
        for ddx in (-1e-6, 1e-6):
            for ddy in (-1e-6, 1e-6):
                if point_in_lobe(base, (x + ddx, y + ddy, z)) != inside:
                    return
        for ddz in (-1e-6, 1e-6):
            if point_in_lobe(base, (x, y, z + ddz)) != inside:
                return
        pytest.fail("placement changed membership away from the boundary")


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 100), st.floats(-20, 20), st.floats(-10, 0), st.floats(0.1, 1.0))
def test_shrinking_depth_never_adds_points(x, y, z, k):
    big = build_lobe(LobeParams(depth=10))
    small = build_lobe(LobeParams(depth=10 * k))
    if point_in_lobe(small, (x, y, z)):
        assert point_in_lobe(big, (x, y, z))


def test_half_ellipse_monte_carlo_volume():
    L, W, D = 100.0, 40.0, 10.0
    o, p = half_ellipse_templates()
    lb = build_lobe(LobeParams(L, W, D, o, p, 1, 1))
    rng = np.random.default_rng(7)
    n = 200_000
    pts = rng.random((n, 3)) * (L, W, D) - (0, W / 2, D)
    vol = lb.contains(pts).mean() * L * W * D
    want = 2 / 3 * math.pi * (L / 2) * (W / 2) * D
    assert abs(vol - want) / want < 0.02


def test_half_ellipse_tables_follow_formula():
    L, W, D = 100.0, 40.0, 10.0
    o, p = half_ellipse_templates()
    lb = build_lobe(LobeParams(L, W, D, o, p, 1, 1))
    xs = np.linspace(0, L, 301)
    s = np.sqrt(np.maximum(0, 1 - (2 * xs / L - 1) ** 2))
    assert np.max(np.abs(lb.w(xs) - W / 2 * s)) < 0.05
    assert np.max(np.abs(lb.d(xs) - D * s)) < 0.05


# ---------------------------------------------------------------- region_polygon

def test_region_polygon_default(default_lobe):
    r = region_polygon(default_lobe, 128)
    assert r.is_simple()
    assert 0 < r.area <= 100 * 40
    assert len(r) == 2 * 128 - 2
    # first vertex is the apex, then down the y <= 0 side
    assert tuple(r.vertices[0]) == pytest.approx((0, 0))
    assert r.vertices[1][1] < 0


def test_region_polygon_order_and_placement():
    lb = build_lobe(LobeParams(dx=10, dy=5, rot_deg=90))
    r = region_polygon(lb, 16)
    v = np.asarray(r.vertices)
    assert np.allclose(v.min(axis=0), [10 - 20, 5], atol=0.2)
    assert np.allclose(v.max(axis=0), [10 + 20, 105], atol=0.2)
    assert tuple(v[0]) == pytest.approx((10, 5))
    assert v[1][0] > 10  # y <= 0 side, rotated a quarter turn


def test_region_area_converges(default_lobe):
    a = region_polygon(default_lobe, 512).area
    b = region_polygon(default_lobe, 256).area
    assert abs(a - b) / a <= 0.005
    assert a == pytest.approx(abs(shoelace(region_polygon(default_lobe, 512).vertices)))


def test_region_polygon_needs_samples(default_lobe):
    with pytest.raises(InvalidArgumentError):
        region_polygon(default_lobe, 7)


# ---------------------------------------------------------------- top_surface

def test_flat_top(default_lobe):
    assert top_surface(default_lobe, 30, 5) == 0.0


def test_mounded_crest_and_margin():
    lb = build_lobe(LobeParams(top_mode="mounded", relief=1.0))
    assert top_surface(lb, 50, 0) == 0.0
    w, d = float(lb.w(50)), float(lb.d(50))
    assert top_surface(lb, 50, w * (1 - 1e-12)) == pytest.approx(-d, abs=1e-4)
    y = 0.6 * w
    want = -d * (1 - math.sqrt(1 - 0.36))
    assert top_surface(lb, 50, y) == pytest.approx(want, rel=1e-12)


def test_top_surface_outside(default_lobe):
    with pytest.raises(DomainError):
        top_surface(default_lobe, 50, 25)
    with pytest.raises(DomainError):
        top_surface(default_lobe, -1, 0)
