"""Level curves: extraction, regularity, convexity and the first convex level.

Curves are extracted with marching squares on a uniform grid of
``resolution x resolution`` cells.  Every emitted vertex is pushed back onto
the level with a Newton step along the gradient, so the convexity tests
below see points that really lie on ``f = c``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import chunked
from .errors import BracketError, PreconditionError
from .fields import as_points

DEFAULT_RESOLUTION = 600
D_SAMPLES = 4096
SKIP_LIMIT = 0.10

ALL_NEGATIVE = "all-negative"
ALL_POSITIVE = "all-positive"
MIXED = "mixed"
INDETERMINATE = "indeterminate"


def _box_tuple(box):
    xmin, xmax, ymin, ymax = (float(v) for v in box)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"empty box {box}")
    return (xmin, xmax, ymin, ymax)


def project_to_level(f, pts, c, steps=1):
    """Newton steps ``p <- p - (f - c) grad f / |grad f|^2`` (skipped where the gradient vanishes)."""
    pts = np.array(pts, dtype=float, copy=True)
    for _ in range(steps):
        j = f.jet(pts)
        g = np.asarray(j.grad, dtype=float)
        r = np.asarray(j.value, dtype=float) - c
        gg = np.sum(g * g, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = np.where(gg[:, None] > 0, (r / gg)[:, None] * g, 0.0)
        pts = pts - np.where(np.isfinite(delta), delta, 0.0)
    return pts


@dataclass
class LevelCurve:
    """Polylines approximating ``f^{-1}(c)`` inside ``box``.

    Closed components are stored without repeating the first vertex and
    are oriented counterclockwise.
    """

    level: float
    components: list
    closed: list
    box: tuple
    resolution: int
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.components)

    @property
    def cell_size(self):
        xmin, xmax, ymin, ymax = self.box
        return max(xmax - xmin, ymax - ymin) / self.resolution

    def vertices(self):
        if not self.components:
            return np.zeros((0, 2))
        return np.concatenate(self.components)

    def to_csv(self):
        lines = ["x,y,component_id"]
        for k, comp in enumerate(self.components):
            lines.extend(f"{x:.17g},{y:.17g},{k}" for x, y in comp)
        return "\n".join(lines) + "\n"

    def to_svg(self, size=600):
        xmin, xmax, ymin, ymax = self.box
        sx = size / (xmax - xmin)
        sy = size / (ymax - ymin)
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">',
            f"<!-- level c = {self.level!r}, box = {list(self.box)}, resolution = {self.resolution} -->",
        ]
        for k, (comp, closed) in enumerate(zip(self.components, self.closed)):
            coords = " L ".join(f"{(x - xmin) * sx:.4f},{(ymax - y) * sy:.4f}" for x, y in comp)
            tail = " Z" if closed else ""
            out.append(f'<g id="component-{k}"><path d="M {coords}{tail}" fill="none" stroke="black" stroke-width="1"/></g>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def summary(self):
        return {
            "level": self.level,
            "components": len(self.components),
            "closed": list(self.closed),
            "vertex_counts": [len(c) for c in self.components],
            "box": list(self.box),
            "resolution": self.resolution,
            "warnings": list(self.warnings),
        }


def _grid_values(f, xs, ys):
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    vals = chunked(lambda p: np.asarray(f.value(p), dtype=float), pts)
    return vals.reshape(len(ys), len(xs))


def extract_level(f, c, box, resolution=DEFAULT_RESOLUTION, projection_steps=1):
    """Marching squares for ``f = c`` on ``resolution`` cells per axis.

    Saddle cells are split according to the value at the cell center.
    Components are traced through shared cell edges, so topology is fixed
    by the grid; a curve leaving the box gives an open component.
    """
    resolution = int(resolution)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    box = _box_tuple(box)
    c = float(c)
    xmin, xmax, ymin, ymax = box
    n = resolution
    xs = np.linspace(xmin, xmax, n + 1)
    ys = np.linspace(ymin, ymax, n + 1)
    V = _grid_values(f, xs, ys) - c
    above = V > 0

    # crossing points on horizontal edges (i, j)-(i, j+1) and vertical edges (i, j)-(i+1, j)
    hcross = above[:, :-1] != above[:, 1:]
    vcross = above[:-1, :] != above[1:, :]
    n_h = (n + 1) * n

    def h_id(i, j):
        return i * n + j

    def v_id(i, j):
        return n_h + i * (n + 1) + j

    with np.errstate(divide="ignore", invalid="ignore"):
        th = V[:, :-1] / (V[:, :-1] - V[:, 1:])
        tv = V[:-1, :] / (V[:-1, :] - V[1:, :])
    hx = xs[:-1][None, :] + th * (xs[1] - xs[0])
    hy = np.broadcast_to(ys[:, None], th.shape)
    vx = np.broadcast_to(xs[None, :], tv.shape)
    vy = ys[:-1][:, None] + tv * (ys[1] - ys[0])
    coords = np.zeros((n_h + n * (n + 1), 2))
    coords[:n_h, 0], coords[:n_h, 1] = hx.ravel(), hy.ravel()
    coords[n_h:, 0], coords[n_h:, 1] = vx.ravel(), vy.ravel()

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    bottom = np.where(hcross, h_id(*np.meshgrid(np.arange(n + 1), np.arange(n), indexing="ij")), -1)
    e_b = bottom[:-1, :]
    e_t = bottom[1:, :]
    left_all = np.where(vcross, v_id(*np.meshgrid(np.arange(n), np.arange(n + 1), indexing="ij")), -1)
    e_l = left_all[:, :-1]
    e_r = left_all[:, 1:]
    ncross = (e_b >= 0).astype(int) + (e_r >= 0) + (e_t >= 0) + (e_l >= 0)

    segs = []
    two = ncross == 2
    if two.any():
        stack = np.stack([e_b[two], e_r[two], e_t[two], e_l[two]], axis=-1)
        srt = np.sort(stack, axis=-1)  # the two crossed ids are the last two entries
        segs.append(srt[:, 2:])
    four = ncross == 4
    if four.any():
        ci, cj = ii[four], jj[four]
        centers = np.stack([(xs[cj] + xs[cj + 1]) / 2, (ys[ci] + ys[ci + 1]) / 2], axis=-1)
        center_above = np.asarray(f.value(centers), dtype=float) > c
        bl_above = above[ci, cj]
        cut_bl_tr = bl_above != center_above
        b, r, t, l = e_b[four], e_r[four], e_t[four], e_l[four]
        first = np.where(cut_bl_tr[:, None], np.stack([l, b], -1), np.stack([b, r], -1))
        second = np.where(cut_bl_tr[:, None], np.stack([t, r], -1), np.stack([l, t], -1))
        segs.extend([first, second])
    if segs:
        segs = np.concatenate(segs)
    else:
        segs = np.zeros((0, 2), dtype=int)

    components, closed = _trace(segs, coords)
    out_comps, out_closed = [], []
    for comp, is_closed in zip(components, closed):
        if projection_steps:
            comp = project_to_level(f, comp, c, projection_steps)
        if is_closed:
            if len(comp) < 3:
                continue
            if _signed_area(comp) < 0:
                comp = comp[::-1]
            start = np.lexsort((comp[:, 1], comp[:, 0]))[0]
            comp = np.roll(comp, -start, axis=0)
        out_comps.append(comp)
        out_closed.append(is_closed)
    order = sorted(range(len(out_comps)), key=lambda k: (round(float(out_comps[k][:, 0].min()), 12), round(float(out_comps[k][:, 1].min()), 12)))
    warnings = []
    if not out_comps:
        warnings.append(f"level {c!r} does not meet the box {list(box)}")
    elif not all(out_closed):
        warnings.append("some components leave the box and are open")
    return LevelCurve(c, [out_comps[k] for k in order], [out_closed[k] for k in order], box, n, warnings)


def _trace(segs, coords):
    """Join segments sharing an edge id into chains; returns (polylines, closed flags)."""
    nbrs = {}
    for a, b in segs.tolist():
        nbrs.setdefault(a, []).append(b)
        nbrs.setdefault(b, []).append(a)
    seen = set()
    comps, closed = [], []

    def walk(start):
        path = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [v for v in nbrs[cur] if v != prev and v not in seen]
            if not nxt:
                return path, start in nbrs[cur] and len(path) > 2
            prev, cur = cur, nxt[0]
            seen.add(cur)
            path.append(cur)

    ends = sorted(k for k, v in nbrs.items() if len(v) == 1)
    for e in ends:
        if e not in seen:
            path, _ = walk(e)
            comps.append(coords[path])
            closed.append(False)
    for e in sorted(nbrs):
        if e not in seen:
            path, cyc = walk(e)
            comps.append(coords[path])
            closed.append(cyc)
    return comps, closed


def _signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def component_count(curve):
    return len(curve.components)


def is_regular_level(f, curve, cs=None, delta=None):
    """Gradient stays above ``delta`` on the vertices and no vertex is within ``delta`` of a critical point.

    ``delta`` defaults to the grid cell size.  An empty curve is regular.
    """
    verts = curve.vertices()
    if len(verts) == 0:
        return True
    if delta is None:
        delta = curve.cell_size
    gn = f.jet(verts).grad_norm()
    if float(np.min(gn)) <= delta:
        return False
    if cs is not None and len(cs.points):
        crit = cs.locations()
        d = np.linalg.norm(verts[:, None, :] - crit[None, :, :], axis=-1)
        if float(d.min()) <= delta:
            return False
    return True


# convexity --------------------------------------------------------------


def resample_closed(poly, m):
    """``m`` points equally spaced in arc length along a closed polyline."""
    pts = np.vstack([poly, poly[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], m, endpoint=False)
    x = np.interp(target, s, pts[:, 0])
    y = np.interp(target, s, pts[:, 1])
    return np.stack([x, y], axis=-1)


def convexity_geometric(component, closed=True):
    """``"convex"`` iff all turns of the closed polygon go the same way and the total turning is one full turn."""
    if not closed:
        raise PreconditionError("geometric convexity needs a closed component")
    P = np.asarray(component, dtype=float)
    if len(P) < 3:
        raise PreconditionError("closed component needs at least 3 vertices")
    span = P.max(axis=0) - P.min(axis=0)
    scale = float(max(span.max(), 1e-300))
    # drop consecutive near-duplicates, which carry no direction
    keep = np.linalg.norm(P - np.roll(P, 1, axis=0), axis=-1) > 1e-12 * scale
    P = P[keep]
    if len(P) < 3:
        return "nonconvex"
    e = np.roll(P, -1, axis=0) - P
    e_next = np.roll(e, -1, axis=0)
    cross = e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]
    dot = np.sum(e * e_next, axis=-1)
    tol = 1e-12 * scale * scale
    signif = np.abs(cross) > tol
    if not signif.any():
        return "nonconvex"
    pos, neg = np.any(cross[signif] > 0), np.any(cross[signif] < 0)
    turning = float(np.sum(np.arctan2(cross, dot)))
    if pos and neg:
        return "nonconvex"
    return "convex" if abs(abs(turning) - 2 * math.pi) < 1e-6 else "nonconvex"


@dataclass
class ComponentConvexity:
    index: int
    d_sign: str
    geometric: str
    samples: int
    skipped: int
    d_min: float
    d_max: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ConvexityReport:
    level: float
    components: list

    @property
    def all_negative(self):
        return bool(self.components) and all(c.d_sign == ALL_NEGATIVE for c in self.components)

    def to_dict(self):
        return {"level": self.level, "components": [c.to_dict() for c in self.components]}


def _d_verdict(D, skipped, total):
    if total == 0 or skipped > SKIP_LIMIT * total:
        return INDETERMINATE
    if np.all(D < 0):
        return ALL_NEGATIVE
    if np.all(D > 0):
        return ALL_POSITIVE
    return MIXED


def component_samples(f, comp, c, m):
    """Arc-length resample of a closed component, projected onto the level."""
    return project_to_level(f, resample_closed(comp, m), c, steps=3)


def convexity_via_D(f, curve, samples_per_component=D_SAMPLES, eps_crit=None, sign_flip=False):
    """Sign of ``D(f) = 2 fx fy fxy - fx^2 fyy - fy^2 fxx`` along each closed component.

    ``all-negative`` on a component of a regular level is the convexity
    criterion.  Samples with ``|grad f| <= eps_crit`` are skipped; above 10%
    skipped the verdict is ``indeterminate``.  ``sign_flip`` negates D and
    exists only for mutation testing of the checks built on top of this.
    """
    c = curve.level
    eps = 1e-10 * (1.0 + abs(c)) if eps_crit is None else float(eps_crit)
    out = []
    for k, (comp, closed) in enumerate(zip(curve.components, curve.closed)):
        if not closed:
            out.append(ComponentConvexity(k, INDETERMINATE, "open", 0, 0, math.nan, math.nan))
            continue
        S = component_samples(f, comp, c, samples_per_component)
        j = f.jet(S)
        ok = j.grad_norm() > eps
        D = np.asarray(j.convexity_det(), dtype=float)[ok]
        if sign_flip:
            D = -D
        verdict = _d_verdict(D, int((~ok).sum()), len(S))
        geo = convexity_geometric(S)
        dmin = float(D.min()) if len(D) else math.nan
        dmax = float(D.max()) if len(D) else math.nan
        out.append(ComponentConvexity(k, verdict, geo, len(S), int((~ok).sum()), dmin, dmax))
    return ConvexityReport(c, out)


# first convex level -----------------------------------------------------


@dataclass
class LevelVerdict:
    level: float
    components: int
    regular: bool
    d_sign: str
    convex: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class FirstConvexLevelResult:
    c_star: float
    bracket: tuple
    post_check_levels: list
    probes: int

    def to_dict(self):
        return {
            "c_star": self.c_star,
            "bracket": list(self.bracket),
            "post_check_levels": [v.to_dict() for v in self.post_check_levels],
            "probes": self.probes,
        }


def level_verdict(f, c, box, resolution=DEFAULT_RESOLUTION, cs=None, samples=D_SAMPLES, sign_flip=False):
    """The combined oracle: regular, a single closed component, and D all-negative on it."""
    curve = extract_level(f, c, box, resolution)
    regular = is_regular_level(f, curve, cs)
    single = len(curve) == 1 and curve.closed[0]
    if single and regular:
        rep = convexity_via_D(f, curve, samples, sign_flip=sign_flip)
        d = rep.components[0].d_sign
    else:
        d = "not-evaluated"
    return LevelVerdict(float(c), len(curve), bool(regular), d, bool(single and regular and d == ALL_NEGATIVE))


def first_convex_level(f, lo, hi, tol=1e-2, box=None, resolution=DEFAULT_RESOLUTION, cs=None, samples=D_SAMPLES):
    """Bisect for the smallest level whose curve is regular, connected and convex.

    The bracket ends are checked first (``hi`` convex, ``lo`` not), and
    three levels between ``c_star`` and ``hi`` are re-checked at the end.
    Any disagreement raises :class:`BracketError` instead of guessing.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise PreconditionError("first_convex_level needs lo < hi")
    if box is None:
        raise PreconditionError("first_convex_level needs a box")
    if cs is None:
        from .critical import find_critical_points

        cs = find_critical_points(f, box)
    probes = 0

    def oracle(c):
        nonlocal probes
        probes += 1
        return level_verdict(f, c, box, resolution, cs, samples)

    top = oracle(hi)
    if not top.convex:
        raise BracketError(f"bracket invalid: level {hi} at the upper end is not convex ({top.d_sign}, {top.components} components)")
    bottom = oracle(lo)
    if bottom.convex:
        raise BracketError(f"bracket invalid: level {lo} at the lower end is already convex")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if oracle(mid).convex:
            b = mid
        else:
            a = mid
    c_star = 0.5 * (a + b)
    checks = [oracle(c_star + (hi - c_star) * k / 4) for k in (1, 2, 3)]
    if not all(v.convex for v in checks):
        bad = [v.level for v in checks if not v.convex]
        raise BracketError(f"bracket invalid: levels {bad} above c_star={c_star} are not convex")
    return FirstConvexLevelResult(c_star, (a, b), checks, probes)


# the explicit parametrization of product levels -------------------------


def parametrize_product_level(alpha, b, m):
    """``m`` points on the level ``f g = b`` of the Cassini product, ``b > 0``.

    With ``(u, v)`` on the unit circle and ``w = u^2 - v^2``, the point is
    ``z^{1/4} (u, v)`` where ``z = 2 alpha^2 w^2 + sqrt(4 alpha^4 w^4 + b)``
    is the positive root of ``z^2 - 4 alpha^2 w^2 z - b = 0``.
    """
    alpha = float(alpha)
    b = float(b)
    if not b > 0:
        raise PreconditionError(f"the level parametrization needs b > 0, got {b}")
    if int(m) < 3:
        raise PreconditionError("need at least 3 samples")
    theta = 2 * np.pi * np.arange(int(m)) / int(m)
    u, v = np.cos(theta), np.sin(theta)
    w2 = (u * u - v * v) ** 2
    z = 2 * alpha**2 * w2 + np.sqrt(4 * alpha**4 * w2 * w2 + b)
    r = z**0.25
    return np.stack([r * u, r * v], axis=-1)


def verdict_report(f, c, box, resolution=DEFAULT_RESOLUTION, cs=None):
    """JSON-ready verdict for one level."""
    curve = extract_level(f, c, box, resolution)
    rep = {"curve": curve.summary(), "regular": is_regular_level(f, curve, cs)}
    if any(curve.closed):
        rep["convexity"] = convexity_via_D(f, curve).to_dict()
    return rep


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2)


__all__ = [
    "LevelCurve",
    "ConvexityReport",
    "FirstConvexLevelResult",
    "extract_level",
    "component_count",
    "is_regular_level",
    "convexity_via_D",
    "convexity_geometric",
    "first_convex_level",
    "parametrize_product_level",
    "as_points",
]
