"""Scalar fields with exact second-order jets, and the ways to combine them.

Every field answers :meth:`ScalarField.jet` for a batch of points (last axis is
the coordinate axis).  Products and outer compositions assemble their jets
from the children's jets with the product rule and the chain rule, so the
structure of a field is visible to the analysis code.
"""

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .errors import DimensionError, DomainError, PreconditionError
from .jets import Jet, _outer
from .linalg import lambda_min, numerical_rank, rank2_sym_eigs
from .poly import (
    BivariatePoly,
    format_univariate,
    univariate_derivative,
    univariate_eval,
)

OUTER_SAMPLES = 513


def as_points(p, dim):
    """Return ``p`` as an array whose last axis has length ``dim``."""
    arr = np.asarray(p)
    if arr.dtype != object:
        arr = arr.astype(float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
    if arr.ndim == 0 or arr.shape[-1] != dim:
        raise DimensionError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr


class ScalarField:
    """Base class; subclasses implement :meth:`_jet` on a batch of points."""

    dim = 2
    kind = "abstract"

    def jet(self, points):
        return self._jet(as_points(points, self.dim))

    def value(self, points):
        return self._value(as_points(points, self.dim))

    def _value(self, pts):
        return self._jet(pts).value

    def __call__(self, points):
        return self.value(points)

    def __mul__(self, other):
        return product_field(self, other)

    def describe(self):
        return self.kind


class PolynomialField(ScalarField):
    """Plane field backed by an exact :class:`BivariatePoly`.

    Jets evaluate the exact partial derivatives, so rational input points give
    rational (exact) jets.
    """

    kind = "exact-polynomial"
    dim = 2

    def __init__(self, poly, name=None):
        self.poly = poly
        self.name = name
        fx, fy = poly.partial("x"), poly.partial("y")
        self._parts = (poly, fx, fy, fx.partial("x"), fx.partial("y"), fy.partial("y"))

    def _value(self, pts):
        return self.poly.evaluate(pts[..., 0], pts[..., 1])

    def _jet(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        f, fx, fy, fxx, fxy, fyy = (np.asarray(q.evaluate(x, y)) for q in self._parts)
        grad = np.stack([fx, fy], axis=-1)
        hess = np.stack([np.stack([fxx, fxy], axis=-1), np.stack([fxy, fyy], axis=-1)], axis=-2)
        return Jet(f, grad, hess)

    def describe(self):
        return self.name or str(self.poly)


class ConstantField(ScalarField):
    kind = "constant"

    def __init__(self, c, dim=2):
        self.c = c
        self.dim = dim

    def _jet(self, pts):
        return Jet.constant(self.c, pts.shape[:-1], self.dim, dtype=pts.dtype)

    def describe(self):
        return str(self.c)


class CoordinateField(ScalarField):
    """The coordinate function ``p -> p[index]``."""

    kind = "coordinate"

    def __init__(self, index, dim=2):
        if not 0 <= index < dim:
            raise DimensionError(f"coordinate {index} out of range for dimension {dim}")
        self.index = index
        self.dim = dim

    def _jet(self, pts):
        return Jet.variable(pts[..., self.index], self.index, self.dim)

    def describe(self):
        return "xyz"[self.index] if self.dim <= 3 else f"x{self.index}"


class FunctionField(ScalarField):
    """Field defined by Python code running on coordinate jets.

    ``func`` receives a list with one :class:`Jet` per coordinate and must
    return a :class:`Jet` built with jet arithmetic (``+``, ``*``, ``exp``, ...).
    """

    kind = "function"

    def __init__(self, func, dim=2, name=None):
        self.func = func
        self.dim = dim
        self.name = name

    def _jet(self, pts):
        out = self.func(Jet.coordinates(pts))
        if not isinstance(out, Jet):
            out = Jet.constant(out, pts.shape[:-1], self.dim)
        return out

    def describe(self):
        return self.name or getattr(self.func, "__name__", "function")


class JetRuleField(ScalarField):
    """Black-box field: ``rule(points)`` returns ``(value, grad, hess)`` arrays."""

    kind = "black-box"

    def __init__(self, rule, dim=2, name=None):
        self.rule = rule
        self.dim = dim
        self.name = name

    def _jet(self, pts):
        v, g, h = self.rule(pts)
        return Jet(np.asarray(v), np.asarray(g), np.asarray(h))

    def describe(self):
        return self.name or "black-box"


class ProductField(ScalarField):
    """Pointwise product ``f * g``.

    ``H(fg) = f H(g) + g H(f) + grad(f)^T grad(g) + grad(g)^T grad(f)``.
    """

    kind = "product"

    def __init__(self, f, g):
        if f.dim != g.dim:
            raise DimensionError(f"cannot multiply fields of dimension {f.dim} and {g.dim}")
        self.f, self.g = f, g
        self.dim = f.dim

    def _value(self, pts):
        return self.f._value(pts) * self.g._value(pts)

    def _jet(self, pts):
        jf, jg = self.f._jet(pts), self.g._jet(pts)
        fv, gv = jf.value, jg.value
        grad = fv[..., None] * jg.grad + gv[..., None] * jf.grad
        hess = (
            fv[..., None, None] * jg.hess
            + gv[..., None, None] * jf.hess
            + _outer(jf.grad, jg.grad)
            + _outer(jg.grad, jf.grad)
        )
        return Jet(fv * gv, grad, hess)

    def describe(self):
        return f"prod({self.f.describe()},{self.g.describe()})"


class ComposedField(ScalarField):
    """Outer composition ``phi o f``.

    ``grad = phi'(f) grad f`` and ``H = phi'(f) H(f) + phi''(f) grad(f)^T grad(f)``.
    """

    kind = "composition"

    def __init__(self, phi, f):
        self.phi, self.f = phi, f
        self.dim = f.dim

    def _value(self, pts):
        return self.phi.evaluate(self.f._value(pts))[0]

    def _jet(self, pts):
        jf = self.f._jet(pts)
        d0, d1, d2 = self.phi.evaluate(jf.value)
        return jf.chain(d0, d1, d2)

    def describe(self):
        return f"compose({self.phi.describe()},{self.f.describe()})"


def product_field(f, g):
    return ProductField(f, g)


def compose_field(phi, f):
    return ComposedField(phi, f)


def poly_field(poly, name=None):
    if isinstance(poly, str):
        poly = BivariatePoly.parse(poly)
    return PolynomialField(poly, name)


def jet(field, p):
    """Value, gradient and Hessian of ``field`` at ``p`` (or a batch of points)."""
    return field.jet(p)


# outer maps ---------------------------------------------------------------


@dataclass(frozen=True)
class OuterMap:
    """A C^2 map of the real line with its first two derivatives.

    ``kind`` is one of ``identity``, ``affine``, ``exp``, ``power`` or
    ``poly``; ``domain`` is the open interval where the map may be evaluated.
    """

    kind: str
    params: tuple = ()
    domain: tuple = (-math.inf, math.inf)
    name: str = dc_field(default="")

    def evaluate(self, t):
        """Return ``(phi(t), phi'(t), phi''(t))``; raises :class:`DomainError` outside the domain."""
        arr = np.asarray(t)
        exact = arr.dtype == object
        if not exact:
            arr = arr.astype(float)
        lo, hi = self.domain
        if lo > -math.inf or hi < math.inf:
            vals = np.asarray(arr, dtype=float)
            if np.any(vals <= lo) or np.any(vals >= hi):
                bad = vals[(vals <= lo) | (vals >= hi)].ravel()[0]
                raise DomainError(f"{self.describe()} is undefined at {bad!r} (domain {self.domain})")
        k = self.kind
        if k == "identity":
            return arr, arr * 0 + 1, arr * 0
        if k == "affine":
            a, b = self.params
            return a * arr + b, arr * 0 + a, arr * 0
        if k == "exp":
            (rate,) = self.params
            e = np.exp(rate * np.asarray(arr, dtype=float))
            return e, rate * e, rate * rate * e
        if k == "power":
            (m,) = self.params
            zero = arr * 0

            def pw(e):
                return arr**e if e >= 0 else np.asarray(arr, dtype=float) ** e

            d1 = m * pw(m - 1) if m != 0 else zero
            d2 = m * (m - 1) * pw(m - 2) if m not in (0, 1) else zero
            return pw(m), d1, d2
        if k == "poly":
            c0 = self.params
            c1 = univariate_derivative(c0)
            c2 = univariate_derivative(c1)
            return tuple(univariate_eval(c, arr) if c else arr * 0 for c in (c0, c1, c2))
        raise ValueError(f"unknown outer map kind {k!r}")

    def __call__(self, t):
        return self.evaluate(t)[0]

    def convex_increasing_on(self, lo, hi, strict=True):
        """Whether ``phi' > 0`` (``>= 0`` if not strict) and ``phi'' >= 0`` on ``[lo, hi]``.

        Closed-form for exp/affine/identity; polynomial and power maps are
        checked on an even sample of the interval.
        """
        if self.kind == "identity":
            return True
        if self.kind == "affine":
            return self.params[0] > 0 if strict else self.params[0] >= 0
        if self.kind == "exp":
            return self.params[0] > 0 if strict else self.params[0] >= 0
        t = np.linspace(lo, hi, OUTER_SAMPLES)
        _, d1, d2 = self.evaluate(t)
        d1 = np.asarray(d1, dtype=float)
        d2 = np.asarray(d2, dtype=float)
        ok1 = np.all(d1 > 0) if strict else np.all(d1 >= 0)
        return bool(ok1 and np.all(d2 >= 0))

    def describe(self):
        if self.name:
            return self.name
        k = self.kind
        if k == "affine":
            return f"affine({self.params[0]},{self.params[1]})"
        if k == "exp":
            return "exp" if self.params[0] == 1 else f"exp({self.params[0]})"
        if k == "power":
            return f"power({self.params[0]})"
        if k == "poly":
            return "poly:" + format_univariate(self.params, "t")
        return k


def identity_map():
    return OuterMap("identity")


def affine_map(a, b=0.0):
    return OuterMap("affine", (a, b))


def exp_map(rate=1.0):
    return OuterMap("exp", (rate,))


def power_map(m, domain=(0.0, math.inf)):
    """``t -> t**m`` on ``domain`` (positive reals by default)."""
    if not isinstance(m, int):
        raise ValueError("power maps take an integer exponent")
    return OuterMap("power", (m,), domain)


def poly_map(coeffs):
    """Univariate polynomial with low-to-high coefficients."""
    return OuterMap("poly", tuple(Fraction(c) for c in coeffs))


# direct sums and eigenvalue bounds ----------------------------------------


def direct_sum_jacobian(f, g, p):
    """Jacobian of ``p -> (f(p), g(p))``: rows are the two gradients."""
    if f.dim != g.dim:
        raise DimensionError("direct sum needs fields of equal dimension")
    p = as_points(p, f.dim)
    return np.stack([np.asarray(f._jet(p).grad, dtype=float), np.asarray(g._jet(p).grad, dtype=float)], axis=-2)


def direct_sum_rank(f, g, p, tau=None):
    return numerical_rank(direct_sum_jacobian(f, g, p), tau)


def product_lambda_lower_bound(f, g, p):
    """Lower bound for the smallest Hessian eigenvalue of ``f * g`` at ``p``.

    Valid only where both factors are nonnegative; raises
    :class:`PreconditionError` otherwise.
    """
    p = as_points(p, f.dim)
    jf, jg = f._jet(p), g._jet(p)
    fv, gv = float(jf.value), float(jg.value)
    if fv < 0 or gv < 0:
        raise PreconditionError(f"factor values must be nonnegative, got f={fv:g}, g={gv:g}")
    lam, _ = rank2_sym_eigs(jf.grad, jg.grad)
    return fv * float(jg.lambda_min()) + gv * float(jf.lambda_min()) + lam


def compose_lambda_lower_bound(phi, f, p):
    """``phi'(f(p)) * lambda(H_p f)``, a lower bound when phi is convex increasing at f(p)."""
    p = as_points(p, f.dim)
    jf = f._jet(p)
    _, d1, d2 = phi.evaluate(jf.value)
    d1, d2 = float(d1), float(d2)
    if d1 < 0 or d2 < 0:
        raise PreconditionError(f"outer map is not convex increasing at {float(jf.value):g}")
    return d1 * float(jf.lambda_min())


def hessian_lambda(field, p):
    return float(lambda_min(np.asarray(field.jet(p).hess, dtype=float)))
