"""Exact bivariate polynomials with rational coefficients.

A polynomial is an immutable map ``(i, j) -> Fraction`` standing for
``c * x**i * y**j``.  Zero coefficients are never stored, so two polynomials
are equal exactly when their term maps are equal.
"""

import re
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ParseError

__all__ = [
    "BivariatePoly",
    "SymbolicHessian",
    "X",
    "Y",
    "radial",
    "symbolic_hessian",
    "trace_hessian",
    "det_hessian",
    "convexity_det",
    "poly_equal",
    "parse_poly",
    "univariate_eval",
    "univariate_derivative",
    "univariate_mul",
    "format_univariate",
    "parse_univariate",
]


def _frac(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


def _grlex_key(mono):
    i, j = mono
    return (-(i + j), -i)


class BivariatePoly:
    """Polynomial in ``x`` and ``y`` over the rationals."""

    __slots__ = ("_terms", "_cache", "_hash")

    def __init__(self, terms=None):
        clean = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial {(i, j)}")
            c = _frac(c)
            if c:
                clean[(int(i), int(j))] = clean.get((int(i), int(j)), Fraction(0)) + c
        self._terms = {m: c for m, c in sorted(clean.items(), key=lambda t: _grlex_key(t[0])) if c}
        self._cache = {}
        self._hash = None

    # construction -------------------------------------------------------

    @classmethod
    def const(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i, j, c=1):
        return cls({(i, j): c})

    @classmethod
    def parse(cls, text):
        return parse_poly(text)

    # basic queries ------------------------------------------------------

    @property
    def terms(self):
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, i, j):
        return self._terms.get((i, j), Fraction(0))

    def is_zero(self):
        return not self._terms

    @property
    def degree(self):
        """Total degree; ``-1`` for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def homogeneous_part(self, k):
        return BivariatePoly({m: c for m, c in self._terms.items() if sum(m) == k})

    def homogeneous_parts(self):
        parts = {}
        for m, c in self._terms.items():
            parts.setdefault(sum(m), {})[m] = c
        return {k: BivariatePoly(t) for k, t in sorted(parts.items())}

    def is_symmetric(self):
        """True when swapping ``x`` and ``y`` leaves the polynomial unchanged."""
        return self == BivariatePoly({(j, i): c for (i, j), c in self._terms.items()})

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, BivariatePoly):
            return other
        if isinstance(other, (int, Fraction, Rational)):
            return BivariatePoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return BivariatePoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                m = (i1 + i2, j1 + j2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return BivariatePoly(out)

    __rmul__ = __mul__

    def scale(self, c):
        c = _frac(c)
        return BivariatePoly({m: c * v for m, v in self._terms.items()})

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = BivariatePoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def partial(self, axis):
        """Exact partial derivative; ``axis`` is ``"x"``/``0`` or ``"y"``/``1``."""
        ax = {"x": 0, "y": 1, 0: 0, 1: 1}[axis]
        key = ("d", ax)
        if key not in self._cache:
            out = {}
            for (i, j), c in self._terms.items():
                e = (i, j)[ax]
                if e:
                    out[(i - 1, j) if ax == 0 else (i, j - 1)] = c * e
            self._cache[key] = BivariatePoly(out)
        return self._cache[key]

    # comparison ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BivariatePoly.const(other)
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # evaluation ---------------------------------------------------------

    def _float_table(self):
        if "float" not in self._cache:
            ms = list(self._terms)
            self._cache["float"] = (
                np.array([m[0] for m in ms], dtype=int),
                np.array([m[1] for m in ms], dtype=int),
                np.array([float(self._terms[m]) for m in ms]),
            )
        return self._cache["float"]

    def __call__(self, x, y):
        return self.evaluate(x, y)

    def evaluate(self, x, y):
        """Evaluate at scalars or arrays.

        Exact inputs (``int``/``Fraction`` scalars or object arrays) give exact
        results; anything else is evaluated in floating point.
        """
        exact = _is_exact(x) and _is_exact(y)
        if not self._terms:
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            if not shape:
                return Fraction(0) if exact else 0.0
            if exact:
                return np.full(shape, Fraction(0), dtype=object)
            return np.zeros(shape)
        if exact:
            return self._eval_exact(x, y)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ix, iy, cf = self._float_table()
        xp = _powers(x, int(ix.max()))
        yp = _powers(y, int(iy.max()))
        out = np.zeros(np.broadcast(x, y).shape)
        for i, j, c in zip(ix, iy, cf):
            out = out + c * (xp[i] * yp[j])
        return out if out.ndim else float(out)

    def _eval_exact(self, x, y):
        dx = max(m[0] for m in self._terms)
        dy = max(m[1] for m in self._terms)
        xp = _powers(x, dx)
        yp = _powers(y, dy)
        out = 0
        for (i, j), c in self._terms.items():
            out = out + c * (xp[i] * yp[j])
        if isinstance(out, int):
            out = Fraction(out)
        return out

    # text ----------------------------------------------------------------

    def format(self, names=("x", "y")):
        if not self._terms:
            return "0"
        pieces = []
        for (i, j), c in self._terms.items():
            mono = []
            for name, e in zip(names, (i, j)):
                if e == 1:
                    mono.append(name)
                elif e > 1:
                    mono.append(f"{name}^{e}")
            mag = abs(c)
            coef = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
            body = "*".join([coef] + mono)
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"BivariatePoly({self.format()!r})"


def _is_exact(v):
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return True
    if isinstance(v, np.ndarray) and v.dtype == object:
        return True
    return False


def _powers(base, top):
    out = [base * 0 + 1]
    for _ in range(top):
        out.append(out[-1] * base)
    return out


X = BivariatePoly.monomial(1, 0)
Y = BivariatePoly.monomial(0, 1)
S = X * X + Y * Y


def radial(coeffs):
    """``P(x^2 + y^2)`` for a univariate ``P`` given by low-to-high coefficients."""
    out = BivariatePoly()
    power = BivariatePoly.const(1)
    for c in coeffs:
        out = out + power.scale(c)
        power = power * S
    return out


# univariate helpers (outer maps and radial profiles) -------------------


def _trim(coeffs):
    coeffs = [_frac(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def univariate_mul(p, q):
    p, q = _trim(p), _trim(q)
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def univariate_derivative(p):
    p = _trim(p)
    return _trim([k * c for k, c in enumerate(p)][1:])


def univariate_eval(p, t):
    """Horner evaluation; works on floats, Fractions and numpy arrays."""
    out = t * 0
    for c in reversed(p):
        out = out * t + (float(c) if not _is_exact(t) else c)
    return out


def format_univariate(p, name="z"):
    p = _trim(p)
    return BivariatePoly({(k, 0): c for k, c in enumerate(p)}).format(names=(name, "_"))


def parse_univariate(text, name="t"):
    poly = parse_poly(text, names=(name,))
    return _trim([poly.coeff(k, 0) for k in range(poly.degree + 1)])


# symbolic second-order data ------------------------------------------


class SymbolicHessian:
    __slots__ = ("fxx", "fxy", "fyy")

    def __init__(self, fxx, fxy, fyy):
        self.fxx, self.fxy, self.fyy = fxx, fxy, fyy

    def trace(self):
        return self.fxx + self.fyy

    def det(self):
        return self.fxx * self.fyy - self.fxy * self.fxy

    def __iter__(self):
        return iter((self.fxx, self.fxy, self.fyy))


def symbolic_hessian(poly):
    fx, fy = poly.partial("x"), poly.partial("y")
    return SymbolicHessian(fx.partial("x"), fx.partial("y"), fy.partial("y"))


def trace_hessian(poly):
    return symbolic_hessian(poly).trace()


def det_hessian(poly):
    return symbolic_hessian(poly).det()


def convexity_det(poly):
    """The bordered determinant ``2 fx fy fxy - fx^2 fyy - fy^2 fxx`` as a polynomial."""
    fx, fy = poly.partial("x"), poly.partial("y")
    h = symbolic_hessian(poly)
    return 2 * fx * fy * h.fxy - fx * fx * h.fyy - fy * fy * h.fxx


def poly_equal(a, b):
    return a == b


# parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _PolyParser:
    def __init__(self, text, names, offset=0, full_text=None):
        self.text = text
        self.full = full_text if full_text is not None else text
        self.offset = offset
        self.names = {n: k for k, n in enumerate(names)}
        try:
            self.tokens = _tokenize(text)
        except ParseError as err:
            raise ParseError(err.message, self.full, err.pos + offset) from None
        self.i = 0

    def error(self, msg, tok=None):
        tok = tok or self.tokens[self.i]
        return ParseError(msg, self.full, tok[2] + self.offset)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty polynomial")
        out = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op_tok = self.take()
            rhs_tok = self.peek()
            rhs = self.unary()
            if op_tok[1] == "*":
                out = out * rhs
            else:
                if rhs.degree > 0:
                    raise self.error("division by a non-constant", rhs_tok)
                c = rhs.coeff(0, 0)
                if c == 0:
                    raise self.error("division by zero", rhs_tok)
                out = out.scale(1 / c)
        return out

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            inner = self.unary()
            return -inner if tok[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                raise self.error("exponent must be a nonnegative integer", tok)
            base = base ** int(tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return BivariatePoly.const(Fraction(val))
        if kind == "name":
            if val not in self.names:
                raise self.error(f"unknown variable {val!r}", tok)
            k = self.names[val]
            return BivariatePoly.monomial(1, 0) if k == 0 else BivariatePoly.monomial(0, 1)
        if kind == "op" and val == "(":
            inner = self.expr()
            close = self.take()
            if close[1] != ")":
                raise self.error("expected ')'", close)
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {val!r}", tok)


def parse_poly(text, names=("x", "y"), offset=0, full_text=None):
    """Parse ``1*x^4 + 2*x^2*y^2 - 3/2*y`` style text (parentheses allowed)."""
    return _PolyParser(text, names, offset, full_text).parse()
