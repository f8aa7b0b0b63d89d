"""The ground-truth suite behind ``hessplus verify-paper``.

Each check reproduces one quantitative statement about the Cassini family
``f = cassini(1)``, ``g = anti(1)`` and their product, and returns a
:class:`CheckResult`.  Everything is seeded, so two runs give identical
matrices; wall-clock timings are only attached on request.

``mutate_d_sign=True`` negates the convexity determinant D wherever the
suite evaluates it.  It is a smoke test for the suite itself: the D-sign
checks must then fail.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .critical import find_critical_points, mu_max_value
from .families import anti_cassini, cassini, default_box, product
from .fields import (
    ComposedField,
    PolynomialField,
    ProductField,
    exp_map,
    poly_map,
    product_lambda_lower_bound,
)
from .jets import Jet
from .levelset import (
    component_samples,
    convexity_via_D,
    extract_level,
    first_convex_level,
    parametrize_product_level,
)
from .linalg import lambda_min, rank2_sym_eigs
from .poly import BivariatePoly, X, Y, det_hessian, trace_hessian
from .region import (
    OUT,
    certify_complement_bounded,
    h_max_estimate,
    hess_plus_contains,
    hess_plus_mask,
    scan_complement,
)

S = X * X + Y * Y
T = X * X - Y * Y
ROOT4_2 = 2.0**0.25


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = None

    def to_dict(self, timings=False):
        out = {"id": self.id, "name": self.name, "passed": bool(self.passed), "detail": self.detail}
        if timings:
            out["seconds"] = self.seconds
        return out


def _fg():
    return product(cassini(1), anti_cassini(1))


def _D(jet, flip):
    d = np.asarray(jet.convexity_det(), dtype=float)
    return -d if flip else d


# 1, 2 -- exact identities ----------------------------------------------


def check_trace_identity(**_):
    got = trace_hessian(_fg().build())
    want = (S**3).scale(64) - S.scale(32)
    return got == want, {"trace": str(got)}


def check_det_identity(**_):
    got = det_hessian(_fg().build())
    want = ((S**6).scale(7) - (T * T).scale(12) - (S**4).scale(28) + (S * S * T * T).scale(36)).scale(64)
    return got == want, {"terms": len(got.terms)}


# 3 -- trace sign region -------------------------------------------------


def check_trace_region(**_):
    xs = np.linspace(-2.0, 2.0, 100)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    tr = _fg().field().jet(pts).trace()
    s = np.sum(pts * pts, axis=-1)
    pred = s > 1 / math.sqrt(2)
    band = np.abs(s - 1 / math.sqrt(2)) <= 1e-9
    mismatches = int(np.sum(((tr > 0) != pred) & ~band))
    return mismatches == 0, {"points": len(pts), "mismatches": mismatches, "in_band": int(band.sum())}


# 4 -- critical sets -----------------------------------------------------


def _match(found, expected, tol):
    if len(found) != len(expected):
        return False
    used = set()
    for e in expected:
        hits = [k for k, p in enumerate(found) if k not in used and np.linalg.norm(np.subtract(p, e)) <= tol]
        if not hits:
            return False
        used.add(hits[0])
    return True


def check_critical_sets(**_):
    box = default_box()
    c1 = find_critical_points(cassini(1).field(), box)
    c2 = find_critical_points(_fg().field(), box)
    exp1 = [(-1, 0), (0, 0), (1, 0)]
    exp2 = [(0, 0), (ROOT4_2, 0), (-ROOT4_2, 0), (0, ROOT4_2), (0, -ROOT4_2)]
    loc1 = [p.location for p in c1.points]
    loc2 = [p.location for p in c2.points]
    ok1 = _match(loc1, exp1, 1e-8)
    ok2 = _match(loc2, exp2, 1e-8)
    vals = c2.values
    ok_vals = len(vals) == 2 and abs(vals[0] + 4) <= 1e-9 and abs(vals[1]) <= 1e-9
    ok_f1_vals = len(c1.values) == 2 and abs(c1.values[0] + 1) <= 1e-9 and abs(c1.values[1]) <= 1e-9
    return ok1 and ok2 and ok_vals and ok_f1_vals, {
        "C(f1)": [[round(v, 12) for v in p] for p in loc1],
        "C(f1g1)": [[round(v, 12) for v in p] for p in loc2],
        "B(f1)": [round(v, 12) for v in c1.values],
        "B(f1g1)": [round(v, 12) for v in vals],
    }


# 5 -- first convex level -----------------------------------------------


def check_first_convex_level(resolution=600, **_):
    F = _fg().field()
    res = first_convex_level(F, 0.5, 100.0, 1e-2, default_box(), resolution)
    lo, hi = res.bracket
    ok = abs(res.c_star - 16) <= 0.05 and hi - lo <= 1e-2
    return ok, {"c_star": round(res.c_star, 9), "bracket": [round(lo, 9), round(hi, 9)], "resolution": resolution}


# 6 -- restricted determinant -------------------------------------------


def restricted_det(s, b):
    return -256.0 * (3 * s**8 + 5 * b * s**6 - 12 * b * s**4 - 3 * b * b * s**2 + b * b)


def check_restricted_det(mutate_d_sign=False, resolution=600, **_):
    F = _fg().field()
    box = default_box()
    detail = {}
    ok = True
    for b in (4.0, 25.0):
        curve = extract_level(F, b, box, resolution)
        if len(curve) != 1:
            ok = False
            detail[f"b={b:g}"] = {"components": len(curve)}
            continue
        pts = component_samples(F, curve.components[0], b, 256)
        j = F.jet(pts)
        D = _D(j, mutate_d_sign)
        s = np.sum(pts * pts, axis=-1)
        want = restricted_det(s, b)
        rel = float(np.max(np.abs(D - want) / np.maximum(np.abs(want), 1e-300)))
        diag = b ** 0.125 / math.sqrt(2)
        dj = F.jet(np.array([[diag, diag]]))
        d_diag = float(_D(dj, mutate_d_sign)[0])
        lagr = 512 * b * b * (4 - math.sqrt(b))
        uniform = bool(np.all(D < 0) or np.all(D > 0))
        sign_ok = uniform == (b > 16) and (b <= 16 or np.all(D < 0))
        diag_ok = abs(d_diag - lagr) <= 1e-6 * abs(lagr)
        ok = ok and rel <= 1e-6 and sign_ok and diag_ok
        detail[f"b={b:g}"] = {"max_rel_err": float(f"{rel:.3e}"), "uniform_sign": uniform, "D_diag": round(d_diag, 6), "lagrange_value": lagr}
    return ok, detail


# 7 -- component counts --------------------------------------------------


def check_component_counts(resolution=600, **_):
    F = _fg().field()
    neg = extract_level(F, -2.0, default_box(), resolution)
    pos = extract_level(F, 20.0, default_box(), resolution)
    ok = len(neg) == 4 and all(neg.closed) and len(pos) == 1 and all(pos.closed)
    return ok, {"c=-2": len(neg), "c=20": len(pos)}


# 8 -- parametrization ---------------------------------------------------


def check_parametrization(**_):
    F = _fg().field()
    worst = {}
    ok = True
    for b in (1.0, 16.0, 100.0):
        pts = parametrize_product_level(1.0, b, 1024)
        r = float(np.max(np.abs(np.asarray(F.value(pts)) - b)))
        worst[f"b={b:g}"] = float(f"{r:.3e}")
        ok = ok and r <= 1e-9 * (1 + b)
    return ok, {"max_residual": worst}


# 9 -- boundedness certificates ------------------------------------------


def check_certificates(seed=0, **_):
    rng = np.random.default_rng(seed)
    detail = {}
    ok = True
    for spec in (cassini(1), anti_cassini(1), _fg()):
        cert = certify_complement_bounded(spec)
        R = cert.radius
        n = 100_000
        r = R * (1 + 9 * rng.random(n))
        th = 2 * np.pi * rng.random(n)
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        inside = hess_plus_mask(spec.field(), pts, tol=0.0)
        fails = int((~inside).sum())
        ok = ok and cert.certified and fails == 0
        detail[spec.shorthand()] = {"R": round(float(R), 9), "status": cert.status, "failures_beyond_R": fails}
    return ok, detail


# 10 -- property suites --------------------------------------------------


def _random_poly(rng, degree=4, scale=2):
    terms = {}
    for d in range(degree + 1):
        for i in range(d + 1):
            c = int(rng.integers(-scale, scale + 1))
            if c:
                terms[(i, d - i)] = Fraction(c)
    if not terms:
        terms[(2, 0)] = Fraction(1)
    return BivariatePoly(terms)


def _generic_poly_jet(poly, pts):
    """Jet of ``poly`` by plain jet arithmetic on the coordinates."""
    x, y = Jet.coordinates(pts)
    out = x * 0.0
    for (i, j), c in poly.items():
        out = out + (x**i) * (y**j) * float(c)
    return out


def _fd_jet(f, p, h=1e-3):
    """Value-based gradient and gradient-based Hessian by central differences with one Richardson step."""
    p = np.asarray(p, dtype=float)

    def grad_fd(step):
        g = np.zeros(2)
        for k in range(2):
            e = np.zeros(2)
            e[k] = step
            g[k] = (float(f.value(p + e)) - float(f.value(p - e))) / (2 * step)
        return g

    def hess_fd(step):
        H = np.zeros((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = step
            H[:, k] = (np.asarray(f.jet(p + e).grad, float) - np.asarray(f.jet(p - e).grad, float)) / (2 * step)
        return 0.5 * (H + H.T)

    g = (4 * grad_fd(h / 2) - grad_fd(h)) / 3
    H = (4 * hess_fd(h / 2) - hess_fd(h)) / 3
    return g, H


def _rel_close(a, b, rtol):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return bool(np.all(np.abs(a - b) <= rtol * (1.0 + np.max(np.abs(a)))))


def _prop_autodiff(rng, n):
    bad = 0
    for k in range(n):
        p1, p2 = _random_poly(rng), _random_poly(rng, 2)
        kind = k % 3
        if kind == 0:
            f = PolynomialField(p1)
        elif kind == 1:
            f = ProductField(PolynomialField(p1), PolynomialField(p2))
        else:
            f = ComposedField(exp_map(0.1), PolynomialField(p1))
        pt = rng.uniform(-1.5, 1.5, 2)
        j = f.jet(pt)
        g, H = _fd_jet(f, pt)
        if not (_rel_close(j.grad, g, 1e-5) and _rel_close(j.hess, H, 1e-5)):
            bad += 1
    return bad


def _prop_combinators(rng, n):
    bad = 0
    for k in range(n):
        p1, p2 = _random_poly(rng), _random_poly(rng)
        pts = rng.uniform(-1.5, 1.5, (4, 2))
        if k % 2 == 0:
            a = ProductField(PolynomialField(p1), PolynomialField(p2)).jet(pts)
            b = PolynomialField(p1 * p2).jet(pts)
        else:
            a = ComposedField(exp_map(0.1), PolynomialField(p1)).jet(pts)
            b = (_generic_poly_jet(p1, pts) * 0.1).exp()
        for u, v in ((a.value, b.value), (a.grad, b.grad), (a.hess, b.hess)):
            if not _rel_close(u, v, 1e-12):
                bad += 1
                break
    return bad


def _prop_rank2(rng, n):
    bad = 0
    for k in range(n):
        dim = 2 + k % 4
        u, v = rng.normal(size=dim), rng.normal(size=dim)
        lam, mu = rank2_sym_eigs(u, v)
        ev = np.linalg.eigvalsh(np.outer(u, v) + np.outer(v, u))
        scale = 1 + np.linalg.norm(u) * np.linalg.norm(v)
        if abs(lam - ev[0]) > 1e-10 * scale or abs(mu - ev[-1]) > 1e-10 * scale:
            bad += 1
    return bad


def _prop_product_bound(rng, n):
    bad = 0
    for _ in range(n):
        a, b, c, d = (_random_poly(rng, 2) for _ in range(4))
        f = PolynomialField(a * a + b * b)
        g = PolynomialField(c * c + d * d)
        pt = rng.uniform(-1.5, 1.5, 2)
        bound = product_lambda_lower_bound(f, g, pt)
        H = np.asarray(ProductField(f, g).jet(pt).hess, float)
        lam = float(lambda_min(H))
        if lam < bound - 1e-9 * (1 + np.max(np.abs(H))):
            bad += 1
    return bad


def _prop_inclusion(rng, n):
    """Returns (violations, points tested) for exp and t + t^3 (the latter where f >= 0, its convex range)."""
    bad = tested = 0
    cubic = poly_map([0, 1, 0, 1])
    for _ in range(n):
        q = _random_poly(rng, 3, 1) + S.scale(2)
        f = PolynomialField(q)
        pt = rng.uniform(-1.0, 1.0, 2)
        if hess_plus_contains(f, pt).status != "in":
            continue
        for phi in (exp_map(1.0), cubic):
            if phi is cubic and float(f.value(pt)) < 0:
                continue
            tested += 1
            if hess_plus_contains(ComposedField(phi, f), pt).status == OUT:
                bad += 1
    return bad, tested


def _prop_d_negative(rng, n, flip):
    bad = tested = 0
    for _ in range(n):
        f = PolynomialField(_random_poly(rng, 4, 2) + S)
        pt = rng.uniform(-1.5, 1.5, 2)
        j = f.jet(pt)
        if hess_plus_contains(f, pt).status != "in" or float(j.grad_norm()) <= 1e-10 * (1 + abs(float(j.value))):
            continue
        tested += 1
        if not float(_D(j, flip)) < 0:
            bad += 1
    return bad, tested


def _prop_critical_lambda(rng, n):
    bad = 0
    for _ in range(n):
        alpha = float(rng.uniform(0.25, 4.0))
        f, g = cassini(alpha).field(), anti_cassini(alpha).field()
        r = math.sqrt(alpha)
        pts = np.array([[0.0, 0.0], [r, 0.0], [-r, 0.0], [0.0, r], [0.0, -r]])
        gf, gg = np.asarray(f.jet(pts).grad), np.asarray(g.jet(pts).grad)
        lam, _ = rank2_sym_eigs(gf, gg)
        scale = 1 + np.linalg.norm(gf, axis=-1) * np.linalg.norm(gg, axis=-1) + np.linalg.norm(gg, axis=-1)
        if np.any(np.abs(lam) > 1e-9 * scale * (1 + alpha) ** 2):
            bad += 1
    return bad


def check_properties(seed=0, mutate_d_sign=False, instances=1000, **_):
    rng = np.random.default_rng(seed)
    out = {}
    out["autodiff_vs_fd"] = _prop_autodiff(rng, instances)
    out["combinators_vs_generic"] = _prop_combinators(rng, instances)
    out["rank2_formula"] = _prop_rank2(rng, instances)
    out["product_lambda_bound"] = _prop_product_bound(rng, instances)
    inc_bad, inc_tested = _prop_inclusion(rng, instances)
    out["hess_plus_inclusion"] = inc_bad
    d_bad, d_tested = _prop_d_negative(rng, instances, mutate_d_sign)
    out["D_negative_in_hess_plus"] = d_bad
    out["lambda_zero_at_critical"] = _prop_critical_lambda(rng, instances)
    ok = all(v == 0 for v in out.values()) and inc_tested > 0 and d_tested > 0
    return ok, {"failures": out, "tested": {"hess_plus_inclusion": inc_tested, "D_negative_in_hess_plus": d_tested}, "instances": instances}


# 11 -- h_max versus mu_max ---------------------------------------------


def check_hmax_mu(**_):
    F = _fg().field()
    box = default_box()
    comp = scan_complement(F, box, step=0.01)
    h = h_max_estimate(F, comp)
    mu = mu_max_value(find_critical_points(F, box))
    ok = h.value >= mu - 1e-9 and abs(mu) <= 1e-9
    return ok, {"h_max": round(h.value, 9), "mu_max": round(mu, 12), "complement_points": len(comp)}


CHECKS = [
    (1, "trace identity", check_trace_identity),
    (2, "determinant identity", check_det_identity),
    (3, "trace-positivity region", check_trace_region),
    (4, "critical sets", check_critical_sets),
    (5, "first convex level", check_first_convex_level),
    (6, "restricted determinant", check_restricted_det),
    (7, "component counts", check_component_counts),
    (8, "parametrization residual", check_parametrization),
    (9, "boundedness certificates", check_certificates),
    (10, "property suites", check_properties),
    (11, "h_max >= mu_max", check_hmax_mu),
]


def run_check(cid, **options):
    for k, name, fn in CHECKS:
        if k == cid:
            t0 = time.perf_counter()
            try:
                passed, detail = fn(**options)
            except Exception as err:  # a crash is a failure, reported with its message
                passed, detail = False, {"error": f"{type(err).__name__}: {err}"}
            return CheckResult(k, name, bool(passed), detail, time.perf_counter() - t0)
    raise KeyError(f"no check {cid}")


def run_suite(seed=0, resolution=600, mutate_d_sign=False, only=None):
    ids = [k for k, _, _ in CHECKS if only is None or k in only]
    return [run_check(k, seed=seed, resolution=resolution, mutate_d_sign=mutate_d_sign) for k in ids]


def suite_report(results, seed=0, timings=False):
    return {
        "version": __version__,
        "seed": seed,
        "all_passed": all(r.passed for r in results),
        "checks": [r.to_dict(timings) for r in results],
    }
