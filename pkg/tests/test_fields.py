"""Jets, combinators, outer maps and the small linear algebra helpers."""

import math
import threading
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessplus.errors import DimensionError, DomainError, PreconditionError
from hessplus.families import anti_cassini, cassini
from hessplus.fields import (
    ConstantField,
    CoordinateField,
    FunctionField,
    PolynomialField,
    affine_map,
    compose_field,
    compose_lambda_lower_bound,
    direct_sum_jacobian,
    direct_sum_rank,
    exp_map,
    identity_map,
    jet,
    poly_field,
    poly_map,
    power_map,
    product_field,
    product_lambda_lower_bound,
)
from hessplus.linalg import (
    jacobi_eigenvalues,
    lambda_min,
    mu_max,
    numerical_rank,
    pair_rank,
    rank2_sym_eigs,
    sym2_eigs,
)
from hessplus.poly import S, convexity_det, symbolic_hessian

F1 = cassini(1).field()
G1 = anti_cassini(1).field()
PARA = poly_field(S)

finite = st.floats(-2.0, 2.0, allow_nan=False)
points = st.tuples(finite, finite)


def fd_derivatives(f, p, h):
    p = np.asarray(p, dtype=float)
    g = np.zeros(2)
    H = np.zeros((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        g[k] = (float(f.value(p + e)) - float(f.value(p - e))) / (2 * h)
        H[:, k] = (np.asarray(f.jet(p + e).grad) - np.asarray(f.jet(p - e).grad)) / (2 * h)
    return g, H


def richardson(f, p, h=1e-4):
    g1, H1 = fd_derivatives(f, p, h)
    g2, H2 = fd_derivatives(f, p, h / 2)
    return (4 * g2 - g1) / 3, (4 * H2 - H1) / 3


def assert_rel(a, b, rtol):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = 1.0 + np.max(np.abs(b))
    assert np.max(np.abs(a - b)) <= rtol * scale


# jets -----------------------------------------------------------------------


def test_cassini_jet_examples():
    j = jet(F1, (1.0, 0.0))
    assert np.allclose(j.grad, 0.0)
    h = jet(F1, (0.0, 0.0)).hess
    assert np.allclose(h, [[-4, 0], [0, 4]])
    c = jet(ConstantField(3.5), (0.3, -1.0))
    assert np.all(c.grad == 0) and np.all(c.hess == 0)


def test_product_examples():
    x = CoordinateField(0)
    j = jet(product_field(x, x), (3.0, 1.0))
    assert j.value == 9 and np.allclose(j.grad, [6, 0]) and np.allclose(j.hess, [[2, 0], [0, 0]])
    assert float(product_field(F1, G1).value((1.0, 1.0))) == 16.0


def test_compose_examples():
    j = jet(compose_field(exp_map(), PARA), (1.0, 0.0))
    e = math.e
    assert np.allclose(j.grad, [2 * e, 0])
    assert np.allclose(j.hess, [[6 * e, 0], [0, 2 * e]])
    ident = jet(compose_field(identity_map(), F1), (0.3, 0.7))
    base = jet(F1, (0.3, 0.7))
    assert np.allclose(ident.hess, base.hess) and np.allclose(ident.grad, base.grad)
    aff = compose_field(affine_map(2.0, 3.0), F1)
    pts = np.random.default_rng(1).uniform(-2, 2, (50, 2))
    assert np.allclose(aff.jet(pts).hess, 2 * F1.jet(pts).hess)


@settings(max_examples=80, deadline=None)
@given(points)
def test_jets_match_finite_differences(p):
    for f in (F1, product_field(F1, G1), compose_field(exp_map(0.1), F1), compose_field(poly_map([0, 1, 0, 1]), G1)):
        g, H = richardson(f, p)
        j = f.jet(p)
        assert_rel(j.grad, g, 1e-5)
        assert_rel(j.hess, H, 1e-5)


@settings(max_examples=50, deadline=None)
@given(points)
def test_product_rule_assembly(p):
    jf, jg = F1.jet(p), G1.jet(p)
    want = jf.value * jg.hess + jg.value * jf.hess + np.outer(jf.grad, jg.grad) + np.outer(jg.grad, jf.grad)
    assert_rel(product_field(F1, G1).jet(p).hess, want, 1e-12)


def test_exact_jets_on_rationals():
    poly = cassini(Fraction(3, 2)).build() * anti_cassini(1).build()
    field = PolynomialField(poly)
    h = symbolic_hessian(poly)
    D = convexity_det(poly)
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = (Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7))) for _ in range(2))
        j = field.jet(np.array([a, b], dtype=object))
        assert j.hess[0, 0] == h.fxx.evaluate(a, b)
        assert j.hess[0, 1] == h.fxy.evaluate(a, b)
        assert j.hess[1, 1] == h.fyy.evaluate(a, b)
        assert j.convexity_det() == D.evaluate(a, b)


def test_family_field_agrees_with_polynomial_form():
    pts = np.random.default_rng(3).uniform(-3, 3, (200, 2))
    for spec in (cassini(Fraction(1, 3)), anti_cassini(2)):
        a, b = spec.field().jet(pts), PolynomialField(spec.build()).jet(pts)
        assert_rel(a.value, b.value, 1e-12)
        assert_rel(a.hess, b.hess, 1e-12)


def _mixed(x, y):
    return (x * y + 1.0).exp() / (x * x + 2.0) - (y * y + 1.0).log() + x.sin() * y.cos() + (x * x + 1.0).sqrt()


def test_jet_arithmetic_rules():
    f = FunctionField(lambda c: _mixed(*c))
    for p in np.array([[0.4, -0.3], [1.2, 0.5]]):
        g, H = richardson(f, p)
        assert_rel(f.jet(p).grad, g, 1e-5)
        assert_rel(f.jet(p).hess, H, 1e-5)


def test_dimension_and_finiteness_errors():
    with pytest.raises(DimensionError):
        F1.jet([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        F1.jet([np.nan, 0.0])


def test_outer_maps():
    with pytest.raises(DomainError):
        compose_field(power_map(-1), PARA).value((0.0, 0.0))
    assert exp_map().convex_increasing_on(-5, 5)
    cubic = poly_map([0, 1, 0, 1])
    assert cubic.convex_increasing_on(0, 3)
    assert not cubic.convex_increasing_on(-3, 0)


def test_concurrent_evaluation_is_consistent():
    pts = np.random.default_rng(5).uniform(-2, 2, (2000, 2))
    f = product_field(F1, G1)
    want = f.jet(pts).hess
    out = [None] * 8

    def work(k):
        out[k] = f.jet(pts).hess

    threads = [threading.Thread(target=work, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(o, want) for o in out)


# bounds and ranks -------------------------------------------------------------


def test_lambda_bounds():
    p = (0.7, -0.2)
    f = F1
    bound = product_lambda_lower_bound(compose_field(affine_map(1, 3), f), compose_field(affine_map(1, 3), f), p)
    lam = lambda_min(product_field(compose_field(affine_map(1, 3), f), compose_field(affine_map(1, 3), f)).jet(p).hess)
    assert bound <= lam + 1e-12
    one = ConstantField(1.0)
    assert product_lambda_lower_bound(one, one, p) == 0.0
    f3, g3 = compose_field(affine_map(1, 3), F1), compose_field(affine_map(1, 3), G1)
    assert product_lambda_lower_bound(f3, g3, (2.0, 0.0)) <= lambda_min(product_field(f3, g3).jet((2.0, 0.0)).hess) + 1e-9
    with pytest.raises(PreconditionError):
        product_lambda_lower_bound(F1, G1, (0.5, 0.0))
    assert compose_lambda_lower_bound(exp_map(), PARA, (0.0, 0.0)) == pytest.approx(2.0)
    assert lambda_min(compose_field(exp_map(), PARA).jet((0.0, 0.0)).hess) == pytest.approx(2.0)
    assert compose_lambda_lower_bound(identity_map(), F1, p) == pytest.approx(lambda_min(F1.jet(p).hess))


def test_chain_of_powers():
    rng = np.random.default_rng(7)
    f = compose_field(affine_map(1, 0.5), PARA)
    for p in rng.uniform(-2, 2, (50, 2)):
        assert lambda_min(f.jet(p).hess) > 0
        for m in range(2, 6):
            assert lambda_min(compose_field(power_map(m), f).jet(p).hess) > 0


def test_direct_sum():
    x, y = CoordinateField(0), CoordinateField(1)
    assert np.allclose(direct_sum_jacobian(x, y, (0.3, 0.1)), np.eye(2))
    assert direct_sum_rank(x, y, (0.3, 0.1)) == 2
    assert np.allclose(direct_sum_jacobian(F1, G1, (1.0, 1.0)), [[4, 12], [12, 4]])
    rng = np.random.default_rng(2)
    for p in rng.uniform(-2, 2, (40, 2)):
        assert direct_sum_rank(F1, F1, p) <= 1
        assert direct_sum_rank(compose_field(exp_map(), F1), compose_field(poly_map([1, 2, 0, 1]), F1), p) <= 1
    assert direct_sum_rank(F1, G1, (0.0, 0.0)) == 0


def test_eigen_helpers():
    assert lambda_min(np.diag([2.0, 5.0])) == 2.0
    assert lambda_min(np.array([[0.0, 1.0], [1.0, 0.0]])) == -1.0
    assert lambda_min(np.eye(4)) == pytest.approx(1.0)
    assert mu_max(np.diag([2.0, 5.0])) == 5.0
    assert rank2_sym_eigs([1, 0], [0, 1]) == (-1.0, 1.0)
    assert rank2_sym_eigs([3, 4], [3, 4]) == (0.0, 50.0)
    assert rank2_sym_eigs([0, 0], [1, 2]) == (0.0, 0.0)
    assert numerical_rank([[1, 2], [2, 4]]) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_eigen_formulas_match_dense(n, seed):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=n), rng.normal(size=n)
    lam, mu = rank2_sym_eigs(u, v)
    ev = np.linalg.eigvalsh(np.outer(u, v) + np.outer(v, u))
    scale = 1 + np.linalg.norm(u) * np.linalg.norm(v)
    assert abs(lam - ev[0]) <= 1e-10 * scale and abs(mu - ev[-1]) <= 1e-10 * scale
    assert lam <= 0 <= mu
    A = rng.normal(size=(n, n))
    A = A + A.T
    assert np.allclose(jacobi_eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-10 * (1 + np.abs(A).max()))
    gg = np.outer(u, u)
    ev = np.linalg.eigvalsh(gg)
    assert np.allclose(ev[:-1], 0, atol=1e-12 * (1 + u @ u)) and ev[-1] == pytest.approx(u @ u)
    assert pair_rank(u, v) == np.linalg.matrix_rank(np.stack([u, v]))


def test_sym2_eigs_small_eigenvalue_accuracy():
    lo, hi = sym2_eigs(1e8, 1.0, 1e-8 + 1e-8)
    assert hi == pytest.approx(1e8)
    assert lo == pytest.approx((1e8 * 2e-8 - 1.0) / 1e8, rel=1e-9)
