"""The Cassini-type polynomial families and radial-plus decompositions.

``cassini(alpha)`` is ``(x^2+y^2)^2 - 2 alpha (x^2-y^2)`` and ``anti(alpha)``
flips the sign of the second term; ``alpha`` plays the role of ``a^2`` so all
coefficients stay rational.  A radial-plus polynomial is ``P(x^2+y^2) + p``
with ``P`` having nonnegative coefficients and ``2 deg P > deg p >= 2``;
those are the polynomials whose non-convex region can be certified bounded.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import FamilyConstraintError
from .fields import PolynomialField, ProductField, ScalarField
from .jets import Jet
from .poly import BivariatePoly, X, Y, format_univariate, radial, univariate_mul

S = X * X + Y * Y
T = X * X - Y * Y


def _alpha(alpha):
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise FamilyConstraintError("alpha > 0", f"family parameter alpha must be positive, got {alpha}")
    return alpha


class FamilyField(ScalarField):
    """Cassini-type field evaluated as ``s^2 + sign * 2 alpha t``.

    ``s = x^2 + y^2`` and ``t = (x - y)(x + y)`` are formed before combining,
    which keeps values and gradients accurate near the diagonals where the
    expanded monomial form cancels.
    """

    kind = "named-family"
    dim = 2

    def __init__(self, spec, sign):
        self.spec = spec
        self.sign = sign

    def _coef(self, pts):
        c = 2 * self.sign * self.spec.alpha
        return c if pts.dtype == object else float(c)

    def _value(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        s = x * x + y * y
        return s * s + self._coef(pts) * ((x - y) * (x + y))

    def _jet(self, pts):
        x, y = Jet.coordinates(pts)
        s = x * x + y * y
        t = (x - y) * (x + y)
        return s * s + t * self._coef(pts)

    def describe(self):
        return self.spec.shorthand()


class FamilySpec:
    """Common interface: ``build()``, ``decomposition()``, ``field()``."""

    def build(self):
        raise NotImplementedError

    def field(self):
        return PolynomialField(self.build(), name=self.shorthand())

    def decomposition(self):
        raise NotImplementedError

    def radial_spec(self):
        P, p = self.decomposition()
        return RadialPlus(P, p)

    def alpha_max(self):
        return Fraction(1)


@dataclass(frozen=True)
class Cassini(FamilySpec):
    alpha: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))

    def build(self):
        return S * S - T.scale(2 * self.alpha)

    def decomposition(self):
        return (Fraction(0), Fraction(0), Fraction(1)), -T.scale(2 * self.alpha)

    def shorthand(self):
        return f"cassini({self.alpha})"

    def field(self):
        return FamilyField(self, -1)

    def alpha_max(self):
        return self.alpha


@dataclass(frozen=True)
class AntiCassini(FamilySpec):
    alpha: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))

    def build(self):
        return S * S + T.scale(2 * self.alpha)

    def decomposition(self):
        return (Fraction(0), Fraction(0), Fraction(1)), T.scale(2 * self.alpha)

    def shorthand(self):
        return f"anti({self.alpha})"

    def field(self):
        return FamilyField(self, +1)

    def alpha_max(self):
        return self.alpha


@dataclass(frozen=True)
class RadialPlus(FamilySpec):
    """``P(x^2+y^2) + p`` with ``P`` given low-to-high.

    Negative ``P`` coefficients or a constant ``P`` are rejected at
    construction.  The degree condition is only recorded in
    :attr:`degree_condition_ok`; certification enforces it.
    """

    P: tuple
    p: BivariatePoly

    def __post_init__(self):
        P = [Fraction(c) for c in self.P]
        while P and P[-1] == 0:
            P.pop()
        if any(c < 0 for c in P):
            raise FamilyConstraintError("P has nonnegative coefficients")
        if len(P) < 2:
            raise FamilyConstraintError("deg P >= 1")
        object.__setattr__(self, "P", tuple(P))

    @property
    def deg_P(self):
        return len(self.P) - 1

    @property
    def leading(self):
        return self.P[-1]

    @property
    def degree_condition_ok(self):
        return 2 * self.deg_P > self.p.degree >= 2

    def degree_violation(self):
        if self.p.degree < 2:
            return "deg p >= 2"
        if not 2 * self.deg_P > self.p.degree:
            return "2 deg P > deg p"
        return None

    def build(self):
        return radial(self.P) + self.p

    def decomposition(self):
        return self.P, self.p

    def shorthand(self):
        return f"radial(P={format_univariate(self.P, 'z')}, p={self.p})"


@dataclass(frozen=True)
class Product(FamilySpec):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise FamilyConstraintError("product of at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    def build(self):
        out = BivariatePoly.const(1)
        for f in self.factors:
            out = out * f.build()
        return out

    def decomposition(self):
        """Radial part is the product of the factors' radial parts; the rest is the remainder."""
        P = (Fraction(1),)
        for f in self.factors:
            P = univariate_mul(P, f.decomposition()[0])
        return P, self.build() - radial(P)

    def shorthand(self):
        return "prod(" + ",".join(f.shorthand() for f in self.factors) + ")"

    def field(self):
        out = self.factors[0].field()
        for f in self.factors[1:]:
            out = ProductField(out, f.field())
        return out

    def alpha_max(self):
        return max(f.alpha_max() for f in self.factors)


def cassini(alpha=1):
    return Cassini(Fraction(alpha))


def anti_cassini(alpha=1):
    return AntiCassini(Fraction(alpha))


def radial_plus(P, p):
    if isinstance(p, str):
        p = BivariatePoly.parse(p)
    return RadialPlus(tuple(P), p)


def product(*factors):
    return Product(tuple(factors))


def family_build(spec):
    return spec.build()


def decompose_radial(poly):
    """Split a polynomial as ``a0 (x^2+y^2)^n + remainder``.

    The leading form must be a positive multiple of ``(x^2+y^2)^n``;
    otherwise :class:`FamilyConstraintError` is raised.
    """
    d = poly.degree
    if d < 2 or d % 2:
        raise FamilyConstraintError("even degree >= 2", f"degree {d} cannot have a radial leading form")
    n = d // 2
    top = poly.homogeneous_part(d)
    a0 = top.coeff(d, 0)
    if a0 <= 0 or top != (S**n).scale(a0):
        raise FamilyConstraintError("leading form a0 (x^2+y^2)^n with a0 > 0")
    P = tuple([Fraction(0)] * n + [a0])
    return RadialPlus(P, poly - radial(P))


def default_box(spec=None):
    """Square box ``[-(2+2a), 2+2a]^2`` around the Cassini families (``a = sqrt(alpha)``)."""
    a = float(spec.alpha_max()) ** 0.5 if spec is not None else 1.0
    h = 2.0 + 2.0 * a
    return (-h, h, -h, h)
