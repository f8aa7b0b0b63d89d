import math

import numpy as np
import pytest

from hessplus.critical import find_critical_points
from hessplus.errors import BracketError, PreconditionError
from hessplus.families import anti_cassini, cassini, default_box, product
from hessplus.fields import poly_field
from hessplus.levelset import (
    ALL_NEGATIVE,
    MIXED,
    component_count,
    convexity_geometric,
    convexity_via_D,
    extract_level,
    first_convex_level,
    is_regular_level,
    parametrize_product_level,
)
from hessplus.poly import S
from hessplus.region import h_max_estimate, scan_complement

FG = product(cassini(1), anti_cassini(1)).field()
F1 = cassini(1).field()
PARA = poly_field(S)
BOX = default_box()


@pytest.fixture(scope="module")
def fg_critical():
    return find_critical_points(FG, BOX)


def test_circle():
    curve = extract_level(PARA, 1.0, (-2, 2, -2, 2), 200)
    assert component_count(curve) == 1 and curve.closed == [True]
    r = np.linalg.norm(curve.components[0], axis=-1)
    assert np.max(np.abs(r - 1)) <= 2 * curve.cell_size
    assert np.max(np.abs(PARA.value(curve.components[0]) - 1)) <= 1e-3 * 2


def test_vertex_residuals_after_projection():
    curve = extract_level(FG, 20.0, BOX, 300)
    assert np.max(np.abs(FG.value(curve.vertices()) - 20)) <= 1e-3 * 21


def test_component_counts(fg_critical):
    neg = extract_level(FG, -2.0, BOX)
    assert component_count(neg) == 4 and all(neg.closed)
    assert all(len(c) >= 3 for c in neg.components)
    pos = extract_level(FG, 20.0, BOX)
    assert component_count(pos) == 1
    for b in (-3.5, -1.0, -0.25):
        assert component_count(extract_level(FG, b, BOX, 400)) == 4
    for b in (0.5, 4.0, 50.0):
        assert component_count(extract_level(FG, b, BOX, 400)) == 1


def test_regularity(fg_critical):
    assert not is_regular_level(FG, extract_level(FG, 0.0, BOX), fg_critical)
    assert is_regular_level(FG, extract_level(FG, 20.0, BOX), fg_critical)
    empty = extract_level(FG, 1e9, (-1, 1, -1, 1), 50)
    assert component_count(empty) == 0 and is_regular_level(FG, empty, fg_critical)
    assert empty.warnings


def test_open_components_at_box_edge():
    curve = extract_level(PARA, 1.0, (0, 2, -2, 2), 100)
    assert curve.closed == [False]


def test_d_sign_verdicts():
    rep = convexity_via_D(PARA, extract_level(PARA, 2.0, (-2, 2, -2, 2), 200))
    assert rep.components[0].d_sign == ALL_NEGATIVE
    assert rep.components[0].d_max == pytest.approx(-16, rel=1e-9)
    r20 = convexity_via_D(FG, extract_level(FG, 20.0, BOX))
    assert r20.components[0].d_sign == ALL_NEGATIVE and r20.components[0].geometric == "convex"
    r4 = convexity_via_D(FG, extract_level(FG, 4.0, BOX))
    assert r4.components[0].d_sign == MIXED and r4.components[0].geometric == "nonconvex"


def test_geometric_oracle():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    L = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    assert convexity_geometric(square) == "convex"
    assert convexity_geometric(square[::-1]) == "convex"
    assert convexity_geometric(L) == "nonconvex"
    collinear = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert convexity_geometric(collinear) == "convex"
    with pytest.raises(PreconditionError):
        convexity_geometric(square, closed=False)
    with pytest.raises(PreconditionError):
        convexity_geometric(square[:2])


def test_oracle_agreement_on_probe_levels(fg_critical):
    for f, levels in ((FG, (0.5, 2.0, 8.0, 12.0, 20.0, 40.0)), (F1, (0.5, 2.0, 4.0, 8.0))):
        for c in levels:
            curve = extract_level(f, c, BOX, 600)
            assert component_count(curve) == 1
            comp = convexity_via_D(f, curve).components[0]
            assert (comp.d_sign == ALL_NEGATIVE) == (comp.geometric == "convex"), (c, comp)


def test_large_levels_regular_connected_convex(fg_critical):
    """Levels above max(h_max, mu_max) + 1 are one regular convex curve."""
    for f in (FG, F1):
        cs = fg_critical if f is FG else find_critical_points(f, BOX)
        h = h_max_estimate(f, scan_complement(f, BOX, 0.02)).value
        top = max(h, max(cs.values)) + 1
        for c in (top + 0.5, top + 10, top + 40):
            curve = extract_level(f, c, BOX, 400)
            assert component_count(curve) == 1 and is_regular_level(f, curve, cs)
            assert convexity_via_D(f, curve).components[0].d_sign == ALL_NEGATIVE


def test_first_convex_level_product(fg_critical):
    res = first_convex_level(FG, 0.5, 100, 1e-2, BOX, 600, fg_critical)
    assert abs(res.c_star - 16) <= 0.05
    assert res.bracket[1] - res.bracket[0] <= 1e-2
    assert len(res.post_check_levels) == 3 and all(v.convex for v in res.post_check_levels)


def test_first_convex_level_paraboloid_bracket_invalid():
    with pytest.raises(BracketError, match="bracket invalid"):
        first_convex_level(PARA, 0.5, 4.0, 1e-2, (-4, 4, -4, 4), 200)


def test_first_convex_level_cassini_matches_d_sweep():
    res = first_convex_level(F1, 0.5, 20, 1e-2, BOX, 400)
    # independent sweep: D changes sign along the diagonal-free ovals until c = 3
    sweep = []
    for c in np.arange(2.5, 3.5, 0.05):
        comp = convexity_via_D(F1, extract_level(F1, c, BOX, 400)).components[0]
        sweep.append((c, comp.d_sign == ALL_NEGATIVE))
    first = min(c for c, ok in sweep if ok)
    assert abs(res.c_star - first) <= 0.05 + 1e-2
    assert abs(res.c_star - 3.0) <= 0.05


def test_bracket_requires_order():
    with pytest.raises(PreconditionError):
        first_convex_level(FG, 5, 5, 1e-2, BOX)


def test_parametrization():
    for b in (1.0, 16.0, 100.0):
        pts = parametrize_product_level(1.0, b, 1024)
        assert np.max(np.abs(FG.value(pts) - b)) <= 1e-9 * (1 + b)
    p = parametrize_product_level(1.0, 16.0, 8)
    # (u, v) = (1, 0): r^4 = 2 + sqrt(4 + 16); the displayed map with an unsquared v^2 - u^2 gives sqrt(20) - 2, which misses the level
    assert p[0] == pytest.approx(((2 + math.sqrt(20)) ** 0.25, 0.0))
    wrong = (math.sqrt(20) - 2) ** 0.25
    assert abs(float(FG.value((wrong, 0.0))) - 16) > 1
    diag = p[1]
    assert diag == pytest.approx(16 ** 0.125 * np.array([math.sqrt(0.5), math.sqrt(0.5)]))
    with pytest.raises(PreconditionError):
        parametrize_product_level(1.0, 0.0, 16)
    with pytest.raises(PreconditionError):
        parametrize_product_level(1.0, 1.0, 2)
    alpha = 2.25
    fa = product(cassini(alpha), anti_cassini(alpha)).field()
    assert np.max(np.abs(fa.value(parametrize_product_level(alpha, 7.0, 256)) - 7)) <= 1e-9 * 8


def test_exports_and_determinism():
    a = extract_level(FG, -2.0, BOX, 200)
    b = extract_level(FG, -2.0, BOX, 200)
    assert a.to_csv() == b.to_csv() and a.to_svg() == b.to_svg()
    lines = a.to_csv().splitlines()
    assert lines[0] == "x,y,component_id" and {l.rsplit(",", 1)[1] for l in lines[1:]} == {"0", "1", "2", "3"}
    svg = a.to_svg()
    assert svg.count("<path") == 4 and 'id="component-3"' in svg


def test_bad_resolution():
    with pytest.raises(ValueError):
        extract_level(FG, 1.0, BOX, 0)
