"""Where is the Hessian positive definite?

Pointwise membership tests, a constructive certificate that the
non-positive-definite region of a radial-plus polynomial is bounded, grid
scans of that region, the maximum of the field over it, and a sampling audit
of the hypotheses under which products keep a bounded complement.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._parallel import chunked
from .errors import EmptyComplementError, PreconditionError
from .families import FamilySpec, RadialPlus, decompose_radial
from .fields import PolynomialField, as_points
from .linalg import lambda_min, pair_rank
from .poly import BivariatePoly, X, Y, det_hessian, trace_hessian

IN, OUT, BOUNDARY = "in", "out", "boundary-within-tolerance"


def default_tolerance(hess):
    hess = np.asarray(hess, dtype=float)
    return 1e-9 * (1.0 + np.max(np.abs(hess), axis=(-2, -1)))


@dataclass(frozen=True)
class MembershipVerdict:
    status: str
    lambda_min: float
    trace: float = None
    det: float = None
    tol: float = 0.0

    @property
    def inside(self):
        return self.status == IN


def _verdicts(hess, tol, semidefinite=False):
    """Vectorized status codes: 1 in, 0 boundary, -1 out."""
    hess = np.asarray(hess, dtype=float)
    lam = lambda_min(hess)
    if semidefinite:
        inside = lam >= -tol
        boundary = np.zeros_like(inside)
    elif hess.shape[-1] == 2:
        tr = np.trace(hess, axis1=-2, axis2=-1)
        det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] ** 2
        inside = (tr > tol) & (det > tol * tr)
        boundary = ~inside & (lam >= -tol) & (np.asarray(tol) > 0)
    else:
        inside = lam > tol
        boundary = ~inside & (lam >= -tol) & (np.asarray(tol) > 0)
    return np.where(inside, 1, np.where(boundary, 0, -1)), lam


def hess_plus_contains(f, p, tol=None):
    """Is the Hessian of ``f`` positive definite at the single point ``p``?

    Plane fields use ``trace > tol`` and ``det > tol * trace``; higher
    dimensions use the smallest eigenvalue.  With ``tol > 0`` points whose
    smallest eigenvalue lies within ``[-tol, tol]`` are reported as
    ``boundary-within-tolerance``.  ``tol=None`` picks ``1e-9 (1 + |H|_max)``.
    """
    if tol is not None and tol < 0:
        raise ValueError("tol must be nonnegative")
    j = f.jet(p)
    hess = np.asarray(j.hess, dtype=float)
    if hess.ndim != 2:
        raise ValueError("hess_plus_contains takes a single point; use hess_plus_mask for batches")
    tol = float(default_tolerance(hess)) if tol is None else float(tol)
    code, lam = _verdicts(hess, tol)
    status = {1: IN, 0: BOUNDARY, -1: OUT}[int(code)]
    tr = det = None
    if hess.shape[0] == 2:
        tr = float(hess[0, 0] + hess[1, 1])
        det = float(hess[0, 0] * hess[1, 1] - hess[0, 1] ** 2)
    return MembershipVerdict(status, float(lam), tr, det, tol)


def hess_semidef_contains(f, p, tol=None):
    j = f.jet(p)
    hess = np.asarray(j.hess, dtype=float)
    tol = float(default_tolerance(hess)) if tol is None else float(tol)
    lam = float(lambda_min(hess))
    return MembershipVerdict(IN if lam >= -tol else OUT, lam, tol=tol)


def hess_plus_mask(f, points, tol=0.0):
    """Boolean array: Hessian positive definite (strictly beyond ``tol``) at each point."""
    points = as_points(points, f.dim)
    flat = points.reshape(-1, f.dim)

    def work(chunk):
        code, _ = _verdicts(f._jet(chunk).hess, tol)
        return code == 1

    return chunked(work, flat).reshape(points.shape[:-1])


# boundedness certificates ----------------------------------------------


@dataclass
class BoundednessCertificate:
    family: str
    radius: float
    leading_constants: tuple
    margin: dict
    grid: dict
    status: str
    minorant_radii: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.status == "certified"

    def to_dict(self):
        d = asdict(self)
        d["R"] = d.pop("radius")
        d["leading_constants"] = [str(c) for c in self.leading_constants]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _coefficient_bounds(q, top):
    """Per homogeneous degree below ``top``: sum of |coefficients|.

    Bounds ``|q_k(cos t, sin t)|`` for every angle ``t``.
    """
    return {k: float(sum(abs(c) for _, c in part.items())) for k, part in q.homogeneous_parts().items() if k < top}


def _minorant_root(lead, top, bounds):
    """Smallest R with ``lead r^top - sum_k B_k r^k > 0`` for all ``r >= R``.

    The minorant has one sign change, hence a single positive root; the
    returned value is checked exactly in rational arithmetic.
    """
    if not bounds or all(b == 0 for b in bounds.values()):
        return 0.0

    def m(r):
        return lead * r**top - sum(b * r**k for k, b in bounds.items())

    hi = max(1.0, sum(bounds.values()) / lead) * (1 + 1e-9) + 1e-12
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if m(mid) > 0:
            hi = mid
        else:
            lo = mid
    r = hi * (1 + 1e-12)
    lead_q = Fraction(lead)
    rq = Fraction(r)
    exact = lead_q * rq**top - sum(Fraction(b) * rq**k for k, b in bounds.items())
    while exact <= 0:
        r *= 1 + 1e-9
        rq = Fraction(r)
        exact = lead_q * rq**top - sum(Fraction(b) * rq**k for k, b in bounds.items())
    return r


def _radial_spec(spec):
    if isinstance(spec, BivariatePoly):
        return decompose_radial(spec), str(spec)
    if isinstance(spec, RadialPlus):
        return spec, spec.shorthand()
    if isinstance(spec, FamilySpec):
        return spec.radial_spec(), spec.shorthand()
    raise TypeError(f"cannot certify {type(spec).__name__}")


def certify_complement_bounded(spec, theta_grid=4096, n_radii=16, radius_budget=1e6):
    """Radius beyond which the Hessian of a radial-plus polynomial is positive definite.

    The trace and determinant of the Hessian are split into homogeneous
    parts.  Their leading parts are ``4 n^2 a0 s^(n-1)`` and
    ``4 n^2 (2n-1) a0^2 s^(2n-2)`` (``s = x^2 + y^2``); every lower part of
    degree ``k`` is bounded in absolute value by ``B_k r^k``.  The radius is
    the larger positive root of the two resulting univariate minorants, so
    both quantities are positive for every ``|p| >= R``.  The annulus
    ``[R, 2R]`` is then sampled on a polar grid as a floating-point
    cross-check, together with a Lipschitz-in-angle bound.
    """
    rp, name = _radial_spec(spec)
    violation = rp.degree_violation()
    if violation is not None:
        raise PreconditionError(f"radial-plus constraint violated: {violation} (deg P={rp.deg_P}, deg p={rp.p.degree})")
    poly = rp.build()
    n, a0 = rp.deg_P, rp.leading
    lead_tr = 4 * n * n * a0
    lead_det = 4 * n * n * (2 * n - 1) * a0 * a0
    s = X * X + Y * Y
    tr, det = trace_hessian(poly), det_hessian(poly)
    top_tr, top_det = 2 * n - 2, 4 * n - 4
    if tr.degree != top_tr or tr.homogeneous_part(top_tr) != (s ** (n - 1)).scale(lead_tr):
        raise AssertionError("trace leading form does not match 4 n^2 a0 s^(n-1)")
    if det.degree != top_det or det.homogeneous_part(top_det) != (s ** (2 * n - 2)).scale(lead_det):
        raise AssertionError("determinant leading form does not match 4 n^2 (2n-1) a0^2 s^(2n-2)")

    b_tr = _coefficient_bounds(tr, top_tr)
    b_det = _coefficient_bounds(det, top_det)
    r_tr = _minorant_root(float(lead_tr), top_tr, b_tr)
    r_det = _minorant_root(float(lead_det), top_det, b_det)
    radius = max(r_tr, r_det, 1e-9)

    grid = {"theta": theta_grid, "radii": n_radii, "r_min": radius, "r_max": 2 * radius}
    if radius > radius_budget:
        return BoundednessCertificate(name, radius, (lead_tr, lead_det), {}, grid, "unknown", {"trace": r_tr, "det": r_det})

    theta = np.linspace(0.0, 2 * math.pi, theta_grid, endpoint=False)
    radii = np.geomspace(radius, 2 * radius, n_radii)
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    xs, ys = rr * np.cos(tt), rr * np.sin(tt)
    tr_vals = tr.evaluate(xs, ys)
    det_vals = det.evaluate(xs, ys)
    half_step = math.pi / theta_grid
    lip_tr = sum(k * b * radii**k for k, b in b_tr.items())
    lip_det = sum(k * b * radii**k for k, b in b_det.items())
    margin = {
        "trace": float(tr_vals.min()),
        "det": float(det_vals.min()),
        "trace_lipschitz": float(np.min(tr_vals.min(axis=1) - lip_tr * half_step)),
        "det_lipschitz": float(np.min(det_vals.min(axis=1) - lip_det * half_step)),
    }
    ok = margin["trace"] > 0 and margin["det"] > 0
    status = "certified" if ok else "unknown"
    return BoundednessCertificate(name, radius, (lead_tr, lead_det), margin, grid, status, {"trace": r_tr, "det": r_det})


# complement scans --------------------------------------------------------


def grid_axes(box, step):
    xmin, xmax, ymin, ymax = box
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"empty box {box}")
    if step <= 0:
        raise ValueError("step must be positive")
    nx = int(round((xmax - xmin) / step)) + 1
    ny = int(round((ymax - ymin) / step)) + 1
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny)


@dataclass
class ComplementScan:
    """Grid points of a box where the Hessian is not positive definite."""

    points: np.ndarray
    box: tuple
    step: float
    grid_shape: tuple

    def __len__(self):
        return len(self.points)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)

    @property
    def empty(self):
        return len(self.points) == 0

    def bounding_box(self):
        if self.empty:
            return None
        lo, hi = self.points.min(axis=0), self.points.max(axis=0)
        return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def scan_complement(f, box, step=0.01):
    """All grid points of ``box`` (spacing ``step``) failing the strict test at tol 0."""
    xs, ys = grid_axes(box, step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    inside = hess_plus_mask(f, pts, tol=0.0)
    return ComplementScan(pts[~inside], tuple(box), float(step), (len(ys), len(xs)))


@dataclass
class HMaxEstimate:
    value: float
    argmax: tuple
    grid_resolution: float
    lower_bound_flag: bool = True
    history: list = field(default_factory=list)


def h_max_estimate(f, complement, refine=3):
    """Largest value of ``f`` over scanned non-convex points, refined locally.

    Each refinement round lays a grid ten times finer over a window of one
    previous step around the running maximizer and keeps only points that
    are still outside the positive-definite region.  Grid maxima
    underestimate the true supremum.
    """
    pts = np.asarray(complement)
    if len(pts) == 0:
        raise EmptyComplementError("h_max undefined (complement empty at this resolution)")
    step = complement.step if isinstance(complement, ComplementScan) else None
    vals = np.asarray(f.value(pts), dtype=float)
    k = int(np.argmax(vals))
    best, arg = float(vals[k]), pts[k]
    history = [best]
    if step is None:
        step = float(np.min(np.ptp(pts, axis=0))) / max(1, int(math.sqrt(len(pts)))) if len(pts) > 1 else 1e-3
    for _ in range(refine):
        fine = step / 10.0
        offs = np.arange(-10, 11) * fine
        gx, gy = np.meshgrid(arg[0] + offs, arg[1] + offs)
        cand = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        cand = cand[~hess_plus_mask(f, cand, tol=0.0)]
        if len(cand):
            cv = np.asarray(f.value(cand), dtype=float)
            j = int(np.argmax(cv))
            if cv[j] > best:
                best, arg = float(cv[j]), cand[j]
        history.append(best)
        step = fine
    return HMaxEstimate(best, (float(arg[0]), float(arg[1])), step, True, history)


# product hypothesis audit -----------------------------------------------


@dataclass
class HypothesisAuditReport:
    sample_count: int
    positivity_fraction: float
    rank2_fraction: float
    rank2_bbox: tuple
    coercive_f: bool
    coercive_g: bool
    seed: int
    box: tuple
    is_proof: bool = False
    note: str = "sampling evidence only; not a proof"


def _coercive_along_rays(f, box, n_rays=8):
    span = max(abs(v) for v in box) or 1.0
    radii = span * np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    ang = np.linspace(0, 2 * math.pi, n_rays, endpoint=False)
    pts = np.stack([np.outer(np.cos(ang), radii), np.outer(np.sin(ang), radii)], axis=-1)
    if f.dim != 2:
        pts = np.concatenate([pts, np.zeros(pts.shape[:-1] + (f.dim - 2,))], axis=-1)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(f.value(pts), dtype=float)
    vals = np.nan_to_num(vals, nan=-np.inf, posinf=np.finfo(float).max)
    return bool(np.all(np.diff(vals, axis=1) >= 0) and np.all(vals[:, -1] > vals[:, 0]))


def audit_product_hypotheses(f, g, box, samples=4096, seed=0):
    """Sample the product-theorem hypotheses for ``f`` and ``g`` over ``box``.

    Reports the fraction of samples with ``<grad f, grad g> + |grad f||grad g| > 0``,
    the fraction and bounding box of samples where ``(f, g)`` has a rank-2
    differential, and ray spot-checks of coercivity.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = box
    pts = np.column_stack([rng.uniform(xmin, xmax, samples), rng.uniform(ymin, ymax, samples)])
    if f.dim > 2:
        pts = np.column_stack([pts, rng.uniform(min(xmin, ymin), max(xmax, ymax), (samples, f.dim - 2))])
    gf = np.asarray(f.jet(pts).grad, dtype=float)
    gg = np.asarray(g.jet(pts).grad, dtype=float)
    dot = np.sum(gf * gg, axis=-1)
    norms = np.linalg.norm(gf, axis=-1) * np.linalg.norm(gg, axis=-1)
    score = dot + norms
    positive = (score > 0) & (score > 1e-12 * norms)
    ranks = pair_rank(gf, gg)
    rank2 = pts[ranks == 2]
    bbox = None
    if len(rank2):
        bbox = (float(rank2[:, 0].min()), float(rank2[:, 0].max()), float(rank2[:, 1].min()), float(rank2[:, 1].max()))
    return HypothesisAuditReport(
        samples,
        float(np.mean(positive)),
        float(np.mean(ranks == 2)),
        bbox,
        _coercive_along_rays(f, box),
        _coercive_along_rays(g, box),
        seed,
        tuple(box),
    )
