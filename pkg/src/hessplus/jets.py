"""Second-order forward-mode differentiation.

A :class:`Jet` carries a value, gradient and Hessian over an arbitrary batch
shape, so one arithmetic expression differentiates a whole grid of points at
once.  Arrays may hold floats or exact objects such as ``fractions.Fraction``;
the propagation rules only use ``+``, ``-`` and ``*`` (plus the scalar
derivative callbacks of :meth:`Jet.chain`).
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import lambda_min, mu_max


def _outer(u, v):
    return u[..., :, None] * v[..., None, :]


@dataclass(frozen=True)
class Jet:
    """Value, gradient and Hessian of a scalar quantity.

    Shapes: ``value`` is ``batch``, ``grad`` is ``batch + (n,)`` and ``hess``
    is ``batch + (n, n)``.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        if self.grad.shape[-1:] != self.hess.shape[-1:] or self.hess.shape[-2] != self.hess.shape[-1]:
            raise ValueError("gradient and Hessian dimensions disagree")

    @property
    def dim(self):
        return self.grad.shape[-1]

    @classmethod
    def variable(cls, coord, index, dim):
        coord = np.asarray(coord)
        zero = coord * 0
        grad = np.stack([zero + (1 if k == index else 0) for k in range(dim)], axis=-1)
        return cls(coord, grad, _outer(grad * 0, grad * 0))

    @classmethod
    def constant(cls, c, batch_shape, dim, dtype=float):
        value = np.full(batch_shape, c, dtype=dtype)
        return cls(value, np.zeros(batch_shape + (dim,), dtype=dtype), np.zeros(batch_shape + (dim, dim), dtype=dtype))

    @classmethod
    def coordinates(cls, points):
        """One variable jet per coordinate of ``points`` (last axis = dimension)."""
        points = np.asarray(points)
        dim = points.shape[-1]
        return [cls.variable(points[..., k], k, dim) for k in range(dim)]

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        value = self.value * 0 + other
        return Jet(value, self.grad * 0, self.hess * 0)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value * other, self.grad * other, self.hess * other)
        f, g = self, other
        fv = f.value[..., None]
        gv = g.value[..., None]
        return Jet(
            f.value * g.value,
            fv * g.grad + gv * f.grad,
            fv[..., None] * g.hess + gv[..., None] * f.hess + _outer(f.grad, g.grad) + _outer(g.grad, f.grad),
        )

    __rmul__ = __mul__

    def chain(self, d0, d1, d2):
        """Compose with a univariate map given its value and two derivatives at ``self.value``."""
        d1e = np.asarray(d1)[..., None]
        return Jet(
            np.asarray(d0),
            d1e * self.grad,
            d1e[..., None] * self.hess + np.asarray(d2)[..., None, None] * _outer(self.grad, self.grad),
        )

    def __pow__(self, k):
        if isinstance(k, int) and k >= 0:
            out = self._lift(1)
            base = self
            while k:
                if k & 1:
                    out = out * base
                base = base * base
                k >>= 1
            return out
        v = np.asarray(self.value, dtype=float)
        return self.chain(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def reciprocal(self):
        v = np.asarray(self.value, dtype=float)
        return self.chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def exp(self):
        e = np.exp(np.asarray(self.value, dtype=float))
        return self.chain(e, e, e)

    def log(self):
        v = np.asarray(self.value, dtype=float)
        return self.chain(np.log(v), 1.0 / v, -1.0 / v**2)

    def sqrt(self):
        r = np.sqrt(np.asarray(self.value, dtype=float))
        return self.chain(r, 0.5 / r, -0.25 / r**3)

    def sin(self):
        v = np.asarray(self.value, dtype=float)
        return self.chain(np.sin(v), np.cos(v), -np.sin(v))

    def cos(self):
        v = np.asarray(self.value, dtype=float)
        return self.chain(np.cos(v), -np.sin(v), -np.cos(v))

    # convenience views -------------------------------------------------

    def trace(self):
        return np.trace(self.hess, axis1=-2, axis2=-1)

    def det2(self):
        h = self.hess
        return h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]

    def lambda_min(self):
        return lambda_min(np.asarray(self.hess, dtype=float))

    def mu_max(self):
        return mu_max(np.asarray(self.hess, dtype=float))

    def grad_norm(self):
        return np.linalg.norm(np.asarray(self.grad, dtype=float), axis=-1)

    def convexity_det(self):
        """Bordered determinant ``2 fx fy fxy - fx^2 fyy - fy^2 fxx`` (plane fields only)."""
        fx, fy = self.grad[..., 0], self.grad[..., 1]
        h = self.hess
        return 2 * fx * fy * h[..., 0, 1] - fx * fx * h[..., 1, 1] - fy * fy * h[..., 0, 0]

    def __getitem__(self, idx):
        return Jet(self.value[idx], self.grad[idx], self.hess[idx])


# Jet2 is the name used for a single-point jet in the public API.
Jet2 = Jet


def sqrt(j):
    return j.sqrt() if isinstance(j, Jet) else math.sqrt(j)


def exp(j):
    return j.exp() if isinstance(j, Jet) else math.exp(j)


def log(j):
    return j.log() if isinstance(j, Jet) else math.log(j)


def sin(j):
    return j.sin() if isinstance(j, Jet) else math.sin(j)


def cos(j):
    return j.cos() if isinstance(j, Jet) else math.cos(j)
