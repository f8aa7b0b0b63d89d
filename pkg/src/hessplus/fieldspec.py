"""Parsing of textual field specifications.

Accepted forms::

    cassini(1)   cassini(alpha=1/2)   anti(2)
    prod(SPEC, SPEC, ...)
    compose(OUTER, SPEC)        OUTER: exp | exp(r) | affine(a,b) | power(m) | poly:<poly in t>
    radial(P=<poly in z>, p=<poly in x,y>)
    <polynomial in x, y>        e.g. "x^4 + 2*x^2*y^2 - 3/2*y"

Errors are :class:`ParseError` instances whose position points into the
original text.
"""

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import FamilyConstraintError, ParseError
from .families import AntiCassini, Cassini, Product, RadialPlus
from .fields import (
    ComposedField,
    PolynomialField,
    ProductField,
    affine_map,
    exp_map,
    identity_map,
    poly_map,
    power_map,
)
from .poly import parse_poly

_NUMBER = re.compile(r"\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?)\s*$")
_CALL = re.compile(r"\s*([A-Za-z_]\w*)\s*\(")
FUNCTIONS = ("cassini", "anti", "prod", "compose", "radial")


@dataclass
class ParsedSpec:
    """A parsed field with whatever exact structure the text carried."""

    text: str
    field: object
    family: object = None  # FamilySpec when the text names a family (or products of them)
    poly: object = None  # BivariatePoly when the field is polynomial

    @property
    def certifiable(self):
        return self.family is not None or self.poly is not None


def _split_args(text, start, end, full):
    """Top-level comma split of ``full[start:end]``; returns (chunk, offset) pairs."""
    parts, depth, last = [], 0, start
    for k in range(start, end):
        ch = full[k]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((full[last:k], last))
            last = k + 1
    parts.append((full[last:end], last))
    if len(parts) == 1 and not parts[0][0].strip():
        return []
    return parts


def _matching_paren(full, open_pos):
    depth = 0
    for k in range(open_pos, len(full)):
        if full[k] == "(":
            depth += 1
        elif full[k] == ")":
            depth -= 1
            if depth == 0:
                return k
    raise ParseError("unbalanced parenthesis", full, open_pos)


def _number(chunk, offset, full, what="number"):
    m = _NUMBER.match(chunk)
    if not m:
        lead = len(chunk) - len(chunk.lstrip())
        raise ParseError(f"expected a {what}", full, offset + lead)
    return Fraction(m.group(1))


def _strip_keyword(chunk, offset, key):
    """``key=value`` -> (value, offset of value); plain values pass through."""
    m = re.match(r"\s*([A-Za-z_]\w*)\s*=", chunk)
    if not m:
        return chunk, offset, None
    return chunk[m.end():], offset + m.end(), m.group(1)


class _SpecParser:
    def __init__(self, text):
        self.full = text

    def parse(self):
        if not self.full.strip():
            raise ParseError("empty field specification", self.full, 0)
        return self.spec(0, len(self.full))

    def spec(self, start, end):
        chunk = self.full[start:end]
        m = _CALL.match(chunk)
        if m and m.group(1) in FUNCTIONS:
            name = m.group(1)
            open_pos = start + m.end() - 1
            close = _matching_paren(self.full, open_pos)
            if close >= end:
                raise ParseError("unbalanced parenthesis", self.full, open_pos)
            rest = self.full[close + 1:end]
            if rest.strip():
                raise ParseError("unexpected text after ')'", self.full, close + 1 + len(rest) - len(rest.lstrip()))
            args = _split_args(chunk, open_pos + 1, close, self.full)
            return getattr(self, "_" + name)(args, start + m.start(1))
        if m and m.group(1) not in ("x", "y"):
            raise ParseError(f"unknown function '{m.group(1)}'", self.full, start + m.start(1))
        poly = parse_poly(chunk, offset=start, full_text=self.full)
        return ParsedSpec(chunk.strip(), PolynomialField(poly), None, poly)

    # families -------------------------------------------------------------

    def _alpha_arg(self, args, pos, name):
        if len(args) > 1:
            raise ParseError(f"{name} takes one argument", self.full, args[1][1])
        if not args:
            return Fraction(1)
        chunk, off = args[0]
        chunk, off, key = _strip_keyword(chunk, off, "alpha")
        if key not in (None, "alpha", "a2"):
            raise ParseError(f"unknown keyword '{key}'", self.full, args[0][1] + len(args[0][0]) - len(args[0][0].lstrip()))
        alpha = _number(chunk, off, self.full, "rational alpha")
        if alpha <= 0:
            raise ParseError("alpha must be positive", self.full, off + len(chunk) - len(chunk.lstrip()))
        return alpha

    def _family(self, fam):
        return ParsedSpec(fam.shorthand(), fam.field(), fam, fam.build())

    def _cassini(self, args, pos):
        return self._family(Cassini(self._alpha_arg(args, pos, "cassini")))

    def _anti(self, args, pos):
        return self._family(AntiCassini(self._alpha_arg(args, pos, "anti")))

    def _prod(self, args, pos):
        if not args:
            raise ParseError("prod needs at least one factor", self.full, pos)
        factors = [self.spec(off, off + len(chunk)) for chunk, off in args]
        if all(f.family is not None for f in factors):
            return self._family(Product(tuple(f.family for f in factors)))
        field = factors[0].field
        for f in factors[1:]:
            field = ProductField(field, f.field)
        poly = None
        if all(f.poly is not None for f in factors):
            poly = factors[0].poly
            for f in factors[1:]:
                poly = poly * f.poly
        text = "prod(" + ",".join(f.text for f in factors) + ")"
        return ParsedSpec(text, field, None, poly)

    def _radial(self, args, pos):
        vals = {}
        for k, (chunk, off) in enumerate(args):
            body, boff, key = _strip_keyword(chunk, off, None)
            key = key or ("P" if k == 0 else "p")
            if key not in ("P", "p") or key in vals:
                raise ParseError(f"unexpected argument '{key}'", self.full, off + len(chunk) - len(chunk.lstrip()))
            vals[key] = (body, boff)
        if set(vals) != {"P", "p"}:
            raise ParseError("radial needs P=... and p=...", self.full, pos)
        body, boff = vals["P"]
        Ppoly = parse_poly(body, names=("z",), offset=boff, full_text=self.full)
        P = [Ppoly.coeff(k, 0) for k in range(max(Ppoly.degree, 0) + 1)]
        body, boff = vals["p"]
        p = parse_poly(body, offset=boff, full_text=self.full)
        try:
            fam = RadialPlus(tuple(P), p)
        except FamilyConstraintError as err:
            raise ParseError(str(err), self.full, vals["P"][1]) from None
        return ParsedSpec(fam.shorthand(), PolynomialField(fam.build(), name=fam.shorthand()), fam, fam.build())

    def _compose(self, args, pos):
        if len(args) != 2:
            raise ParseError("compose takes an outer map and a field", self.full, pos)
        (ochunk, ooff), (ichunk, ioff) = args
        phi = self._outer(ochunk, ooff)
        inner = self.spec(ioff, ioff + len(ichunk))
        text = f"compose({phi.describe()},{inner.text})"
        return ParsedSpec(text, ComposedField(phi, inner.field), None, None)

    def _outer(self, chunk, off):
        lead = len(chunk) - len(chunk.lstrip())
        s = chunk.strip()
        pos = off + lead
        if s.startswith("poly:"):
            body = chunk[lead + 5:]
            q = parse_poly(body, names=("t",), offset=pos + 5, full_text=self.full)
            return poly_map([q.coeff(k, 0) for k in range(max(q.degree, 0) + 1)])
        m = re.match(r"([A-Za-z_]\w*)\s*(?:\((.*)\))?$", s)
        if not m:
            raise ParseError("expected an outer map (exp, affine(a,b), power(m), poly:...)", self.full, pos)
        name, inner = m.group(1), m.group(2)
        nums = []
        if inner is not None:
            inner_off = pos + s.index("(") + 1
            nums = [_number(c, inner_off + o, self.full) for c, o in _split_args(inner, 0, len(inner), inner)]
        if name == "exp" and len(nums) <= 1:
            return exp_map(float(nums[0]) if nums else 1.0)
        if name == "identity" and not nums:
            return identity_map()
        if name == "affine" and len(nums) in (1, 2):
            return affine_map(float(nums[0]), float(nums[1]) if len(nums) == 2 else 0.0)
        if name == "power" and len(nums) == 1 and nums[0].denominator == 1:
            return power_map(int(nums[0]))
        raise ParseError(f"unknown or malformed outer map '{s}'", self.full, pos)


def parse_field_spec(text):
    """Parse ``text`` into a :class:`ParsedSpec`; raises :class:`ParseError`."""
    return _SpecParser(text).parse()
