import json
import math
from fractions import Fraction

import numpy as np
import pytest

from hessplus.critical import critical_values, find_critical_points, mu_max_value, newton_refine
from hessplus.errors import EmptyComplementError, FamilyConstraintError, PreconditionError
from hessplus.families import (
    anti_cassini,
    cassini,
    decompose_radial,
    default_box,
    product,
    radial_plus,
)
from hessplus.fields import CoordinateField, PolynomialField, compose_field, exp_map, poly_field, power_map
from hessplus.poly import S, X, Y, radial
from hessplus.region import (
    BOUNDARY,
    IN,
    OUT,
    audit_product_hypotheses,
    certify_complement_bounded,
    h_max_estimate,
    hess_plus_contains,
    hess_plus_mask,
    hess_semidef_contains,
    scan_complement,
)
from hessplus.linalg import lambda_min

F1 = cassini(1).field()
FG = product(cassini(1), anti_cassini(1)).field()
R2 = 2.0**0.25


# families -----------------------------------------------------------------


def test_radial_plus_reproduces_cassini():
    assert radial_plus([0, 0, 1], "2*y^2 - 2*x^2").build() == cassini(1).build()


def test_family_constraints():
    with pytest.raises(FamilyConstraintError):
        radial_plus([0, -1, 1], "x^2")
    with pytest.raises(FamilyConstraintError):
        radial_plus([3], "x^2")
    with pytest.raises(FamilyConstraintError):
        cassini(0)
    bad = radial_plus([0, 1], "x^2 + y^2 + x*y")
    assert not bad.degree_condition_ok
    with pytest.raises(PreconditionError):
        certify_complement_bounded(bad)
    assert radial_plus([0, 0, 1], "x^3 + y^2").degree_condition_ok
    worse = radial_plus([0, 1], "x^3")
    assert not worse.degree_condition_ok and worse.degree_violation() == "2 deg P > deg p"


def test_product_closure_decomposition():
    a = product(cassini(Fraction(1, 2)), anti_cassini(3))
    P, rest = a.decomposition()
    assert all(c >= 0 for c in P)
    assert rest.degree < 2 * (len(P) - 1)
    assert radial(P) + rest == a.build()
    spec = decompose_radial(a.build())
    assert spec.build() == a.build() and spec.degree_condition_ok


# membership -----------------------------------------------------------------


def test_membership_examples():
    assert hess_plus_contains(F1, (2.0, 0.0)).status == IN
    assert hess_plus_contains(F1, (0.0, 0.0)).status == OUT
    v = hess_plus_contains(FG, (0.0, 0.0), tol=1e-9)
    assert v.status == BOUNDARY and v.trace == 0 and v.det == 0
    assert hess_plus_contains(FG, (0.0, 0.0), tol=0.0).status == OUT
    assert hess_semidef_contains(FG, (0.0, 0.0)).status == IN
    assert hess_semidef_contains(F1, (0.0, 0.0)).status == OUT
    assert hess_semidef_contains(F1, (2.0, 0.0)).status == IN


def test_membership_matches_closed_form_and_eigen_criterion():
    pts = np.random.default_rng(0).uniform(-2, 2, (5000, 2))
    x, y = pts[:, 0], pts[:, 1]
    closed = 3 * (x * x + y * y) ** 2 + 2 * (x * x - y * y) - 1
    mask = hess_plus_mask(F1, pts)
    lam = lambda_min(F1.jet(pts).hess)
    strict = np.abs(closed) > 1e-9
    assert np.array_equal(mask[strict], (closed > 0)[strict])
    clear = np.abs(lam) > 1e-9
    assert np.array_equal(mask[clear], (lam > 0)[clear])


# certificates -------------------------------------------------------------


@pytest.mark.parametrize("spec", [cassini(1), anti_cassini(1), product(cassini(1), anti_cassini(1)), cassini(Fraction(9, 4))])
def test_certificates_are_sound(spec):
    cert = certify_complement_bounded(spec)
    assert cert.certified and math.isfinite(cert.radius)
    rng = np.random.default_rng(1)
    r = cert.radius * (1 + 9 * rng.random(10_000))
    th = rng.uniform(0, 2 * np.pi, 10_000)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], -1)
    assert hess_plus_mask(spec.field(), pts).all()
    doc = json.loads(cert.to_json())
    assert set(doc) >= {"family", "R", "leading_constants", "margin", "grid", "status"}


def test_certificate_leading_constants():
    cert = certify_complement_bounded(cassini(1))
    n, a0 = 2, 1
    assert [Fraction(c) for c in cert.leading_constants] == [4 * n * n * a0, 4 * n * n * (2 * n - 1) * a0 * a0]


def test_certificate_precondition():
    with pytest.raises(PreconditionError):
        certify_complement_bounded(radial_plus([0, 1], "x^3 + y^2"))


def test_certificate_from_raw_polynomial():
    assert certify_complement_bounded(cassini(1).build()).certified


# scans and h_max ------------------------------------------------------------


def test_scan_examples():
    comp = scan_complement(F1, (-2, 2, -2, 2), 0.01)
    assert any(np.allclose(p, (0, 0)) for p in comp.points)
    assert scan_complement(poly_field(S), (-1, 1, -1, 1), 0.05).empty
    cfg = scan_complement(FG, (-2, 2, -2, 2), 0.02)
    s = np.sum(cfg.points**2, -1)
    x, y = cfg.points[:, 0], cfg.points[:, 1]
    t = x * x - y * y
    h = 7 * s**6 - 12 * t * t - 28 * s**4 + 36 * s * s * t * t
    assert np.all((s <= 1 / math.sqrt(2) + 1e-9) | (h <= 1e-9))


def test_h_max():
    est = h_max_estimate(FG, scan_complement(FG, (-3, 3, -3, 3), 0.02))
    assert est.value >= 0 and est.lower_bound_flag
    assert float(FG.value(est.argmax)) == pytest.approx(est.value)
    assert h_max_estimate(F1, scan_complement(F1, (-2, 2, -2, 2), 0.02)).value >= 0
    with pytest.raises(EmptyComplementError):
        h_max_estimate(poly_field(S), scan_complement(poly_field(S), (-1, 1, -1, 1), 0.1))


def test_audit():
    rep = audit_product_hypotheses(F1, F1, (-2, 2, -2, 2), samples=2000)
    assert rep.positivity_fraction == 1.0 and rep.rank2_fraction == 0.0 and not rep.is_proof
    x = CoordinateField(0)
    const_one = compose_field(exp_map(0.0), x)  # zero gradient everywhere
    assert audit_product_hypotheses(x, const_one, (-1, 1, -1, 1), samples=100).positivity_fraction == 0.0
    minus_x = PolynomialField(-X)
    assert audit_product_hypotheses(PolynomialField(X), minus_x, (-1, 1, -1, 1), samples=100).positivity_fraction == 0.0
    f = compose_field(exp_map(), poly_field(S))
    g = poly_field(S * S)
    rep = audit_product_hypotheses(f, g, (-2, 2, -2, 2), samples=2000, seed=3)
    assert rep.positivity_fraction == 1.0 and rep.rank2_fraction == 0.0


# critical points -----------------------------------------------------------


def test_cassini_critical_set():
    cs = find_critical_points(F1, (-3, 3, -3, 3))
    locs = sorted(p.location for p in cs.points)
    assert np.allclose(locs, [(-1, 0), (0, 0), (1, 0)], atol=1e-8)
    assert critical_values(cs) == pytest.approx([-1, 0], abs=1e-12)
    assert mu_max_value(cs) == pytest.approx(0, abs=1e-12)
    index = {p.location: p.morse_index for p in cs.points}
    assert sorted(index.values()) == [0, 0, 1]


def test_product_critical_set():
    cs = find_critical_points(FG, (-3, 3, -3, 3))
    want = [(0, 0), (R2, 0), (-R2, 0), (0, R2), (0, -R2)]
    assert len(cs) == 5
    for w in want:
        assert min(np.hypot(*np.subtract(p.location, w)) for p in cs.points) <= 1e-8
    assert cs.values[0] == pytest.approx(-4, abs=1e-9) and cs.values[1] == pytest.approx(0, abs=1e-9)
    origin = min(cs.points, key=lambda p: np.hypot(*p.location))
    assert origin.morse_index == "degenerate"
    locs = cs.locations()
    d = np.linalg.norm(locs[:, None] - locs[None], axis=-1) + np.eye(len(locs)) * 1e9
    assert d.min() > 1e-6 * math.hypot(6, 6)


def test_quadratic_and_refine():
    q = PolynomialField((X - 1) ** 2 + Y * Y)
    cs = find_critical_points(q, (-3, 3, -3, 3))
    assert len(cs) == 1 and np.allclose(cs.points[0].location, (1, 0), atol=1e-10)
    assert mu_max_value(cs) == pytest.approx(0, abs=1e-15)
    r = newton_refine(F1, (0.9, 0.05))
    assert np.allclose(r.point, (1, 0), atol=1e-10) and r.converged
    r0 = newton_refine(F1, (1.0, 0.0))
    assert r0.iterations == 0
    r2 = newton_refine(FG, (0.1, 1.1))
    assert np.allclose(r2.point, (0, R2), atol=1e-8)


def test_critical_set_json_round_trip():
    cs = find_critical_points(F1, default_box(cassini(1)))
    doc = json.loads(cs.to_json())
    assert len(doc["points"]) == 3 and doc["seeds_used"] == 41 * 41


def test_no_critical_points():
    cs = find_critical_points(PolynomialField(X + Y.scale(2)), (-1, 1, -1, 1))
    assert len(cs) == 0 and cs.values == []
    with pytest.raises(Exception):
        mu_max_value(cs)


def test_power_composition_critical_points():
    f = compose_field(power_map(2), PolynomialField(S + 1))
    cs = find_critical_points(f, (-2, 2, -2, 2))
    assert len(cs) == 1 and np.allclose(cs.points[0].location, 0, atol=1e-10)
