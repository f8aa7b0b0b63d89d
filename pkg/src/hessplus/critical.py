"""Critical points, critical values and Morse data.

Critical points are found by multistart damped Newton on ``grad f = 0``,
run over all seeds at once.  The merit function is ``|grad f|^2``; steps
are halved until the merit decreases, and a Gauss-Newton descent direction
``-H grad f`` replaces the Newton step where the Hessian is singular.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import HessPlusError
from .fields import as_points, direct_sum_rank  # noqa: F401  (re-exported)
from .linalg import lambda_min, mu_max

MAX_HALVINGS = 40


def default_eps(values):
    return 1e-10 * (1.0 + np.abs(np.asarray(values, dtype=float)))


@dataclass
class NewtonResult:
    point: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    value: float


def _solve(hess, grad):
    """Newton directions for a batch; ``ok`` is False where the solve failed."""
    n = grad.shape[-1]
    if n == 2:
        a, b, c = hess[:, 0, 0], hess[:, 0, 1], hess[:, 1, 1]
        det = a * c - b * b
        ok = det != 0
        safe = np.where(ok, det, 1.0)
        dx = -(c * grad[:, 0] - b * grad[:, 1]) / safe
        dy = -(a * grad[:, 1] - b * grad[:, 0]) / safe
        out = np.stack([dx, dy], axis=-1)
        return out, ok & np.all(np.isfinite(out), axis=-1)
    out = np.zeros_like(grad)
    ok = np.ones(len(grad), dtype=bool)
    for k in range(len(grad)):
        try:
            out[k] = -np.linalg.solve(hess[k], grad[k])
            ok[k] = np.all(np.isfinite(out[k]))
        except np.linalg.LinAlgError:
            ok[k] = False
    return np.where(ok[:, None], out, 0.0), ok


def _descent(hess, grad):
    """Steepest descent for ``|grad f|^2`` (direction ``-H grad f``), rescaled to ``|grad f|``."""
    d = -np.einsum("kij,kj->ki", hess, grad)
    dn = np.linalg.norm(d, axis=-1)
    gn = np.linalg.norm(grad, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(dn[:, None] > 0, d * (gn / dn)[:, None], -grad)


def _line_search(f, p, step, merit0, valid):
    """Step halving until the merit decreases; returns (accepted mask, t, jet data)."""
    m = len(p)
    t = np.ones(m)
    accepted = np.zeros(m, dtype=bool)
    new_p = p.copy()
    vals = np.zeros(m)
    grads = np.zeros_like(p)
    hesses = np.zeros(p.shape + (p.shape[-1],))
    pending = np.nonzero(valid)[0]
    for _ in range(MAX_HALVINGS):
        if len(pending) == 0:
            break
        trial = p[pending] + t[pending, None] * step[pending]
        tj = f.jet(trial)
        tg = np.asarray(tj.grad, dtype=float)
        tm = np.sum(tg * tg, axis=-1)
        good = np.isfinite(tm) & (tm < merit0[pending])
        sel = pending[good]
        new_p[sel] = trial[good]
        vals[sel] = np.asarray(tj.value, dtype=float)[good]
        grads[sel] = tg[good]
        hesses[sel] = np.asarray(tj.hess, dtype=float)[good]
        accepted[sel] = True
        pending = pending[~good]
        t[pending] *= 0.5
    return accepted, t, new_p, vals, grads, hesses


def _newton_batch(f, seeds, max_iter=100, eps_crit=None):
    pts = np.array(seeds, dtype=float, copy=True)
    m = len(pts)
    iters = np.zeros(m, dtype=int)
    j = f.jet(pts)
    grad = np.asarray(j.grad, dtype=float)
    hess = np.asarray(j.hess, dtype=float)
    vals = np.asarray(j.value, dtype=float)
    merit = np.sum(grad * grad, axis=-1)
    active = merit > 0
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        g, h, p = grad[idx], hess[idx], pts[idx]
        step, ok = _solve(h, g)
        acc, t, new_p, nv, ng, nh = _line_search(f, p, step, merit[idx], ok)
        retry = ~acc
        if retry.any():
            step = np.where(retry[:, None], _descent(h, g), step)
            acc2, t2, p2, v2, g2, h2 = _line_search(f, p, step, merit[idx], retry)
            acc = acc | acc2
            t = np.where(retry, t2, t)
            new_p[acc2], nv[acc2], ng[acc2], nh[acc2] = p2[acc2], v2[acc2], g2[acc2], h2[acc2]
        moved = idx[acc]
        pts[moved], vals[moved], grad[moved], hess[moved] = new_p[acc], nv[acc], ng[acc], nh[acc]
        merit[moved] = np.sum(grad[moved] ** 2, axis=-1)
        iters[moved] += 1
        step_len = np.linalg.norm(t[:, None] * step, axis=-1)
        tiny = step_len <= 1e-15 * (1.0 + np.linalg.norm(p, axis=-1))
        stop = ~acc | tiny | (merit[idx] == 0)
        active[idx[stop]] = False
    gnorm = np.sqrt(merit)
    eps = default_eps(vals) if eps_crit is None else np.full(m, float(eps_crit))
    converged = np.isfinite(gnorm) & (gnorm <= eps) & np.all(np.isfinite(pts), axis=-1)
    return pts, converged, iters, gnorm, vals


def newton_refine(f, p0, max_iter=100, eps_crit=None):
    """Drive ``grad f`` to zero from ``p0``.

    Keeps iterating past the tolerance while the merit still decreases, which
    matters at degenerate critical points where convergence is only linear.
    """
    p0 = as_points(p0, f.dim)
    pts, conv, iters, gn, vals = _newton_batch(f, p0[None, :], max_iter, eps_crit)
    return NewtonResult(pts[0], bool(conv[0]), int(iters[0]), float(gn[0]), float(vals[0]))


@dataclass
class CriticalPoint:
    location: tuple
    value: float
    gradient_norm: float
    hessian_eigs: tuple
    morse_index: object

    def to_dict(self):
        return asdict(self)


@dataclass
class CriticalSet:
    points: list
    search_box: tuple
    seeds_used: int
    values: list
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def locations(self):
        return np.array([p.location for p in self.points], dtype=float).reshape(-1, 2)

    def to_dict(self):
        return {
            "points": [p.to_dict() for p in self.points],
            "search_box": list(self.search_box),
            "seeds_used": self.seeds_used,
            "values": self.values,
            "diagnostics": self.diagnostics,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _classify(f, loc, eps):
    j = f.jet(np.asarray(loc))
    h = np.asarray(j.hess, dtype=float)
    lo, hi = float(lambda_min(h)), float(mu_max(h))
    if min(abs(lo), abs(hi)) <= eps:
        index = "degenerate"
    else:
        index = int(lo < 0) + int(hi < 0)
    return (lo, hi), index


def merge_values(values, rel=1e-9):
    """Sorted distinct values, merging neighbours within ``rel * (1 + |v|)``."""
    out = []
    for v in sorted(float(x) for x in values):
        if out and abs(v - out[-1]) <= rel * (1.0 + abs(out[-1])):
            continue
        out.append(v)
    return out


def _segment_critical(f, a, b, eps, samples=33):
    """True if ``|grad f| <= eps`` at every sample of the segment ``[a, b]``."""
    t = np.linspace(0.0, 1.0, samples)[:, None]
    g = np.asarray(f.jet(a[None, :] * (1 - t) + b[None, :] * t).grad, dtype=float)
    return bool(np.all(np.linalg.norm(g, axis=-1) <= eps))


def _merge_components(f, cand, cand_gn, cand_v, reps, eps_crit):
    """Union representatives joined by an eps-critical segment.

    At degenerate critical points Newton converges linearly and float
    rounding stops seeds at scattered points where the gradient is already
    below tolerance; these lie on one numerical critical component.
    """
    parent = list(range(len(reps)))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            a, b = reps[i], reps[j]
            eps = float(default_eps(max(abs(cand_v[a]), abs(cand_v[b])))) if eps_crit is None else float(eps_crit)
            if abs(cand_v[a] - cand_v[b]) > eps or root(i) == root(j):
                continue
            if _segment_critical(f, cand[a], cand[b], eps):
                parent[root(j)] = root(i)
    best = {}
    for i, r in enumerate(reps):
        k = root(i)
        if k not in best or cand_gn[r] < cand_gn[best[k]]:
            best[k] = r
    return list(best.values())


def find_critical_points(f, box, grid_seeds=41, eps_crit=None, max_iter=100):
    """Critical points of a plane field inside ``box`` from a ``grid_seeds^2`` seed grid.

    Diverging or stalled seeds are dropped and counted in ``diagnostics``;
    points closer than ``1e-6`` box diagonals are merged, keeping the one
    with the smallest gradient, and so are points with equal values joined
    by a segment on which the gradient stays below tolerance.
    """
    if f.dim != 2:
        raise ValueError("critical point search is implemented for plane fields")
    xmin, xmax, ymin, ymax = box
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"empty box {box}")
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, grid_seeds), np.linspace(ymin, ymax, grid_seeds))
    seeds = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    pts, conv, iters, gn, vals = _newton_batch(f, seeds, max_iter, eps_crit)
    diag = float(np.hypot(xmax - xmin, ymax - ymin))
    pad = 1e-9 * diag
    inside = (pts[:, 0] >= xmin - pad) & (pts[:, 0] <= xmax + pad) & (pts[:, 1] >= ymin - pad) & (pts[:, 1] <= ymax + pad)
    keep = conv & inside
    radius = 1e-6 * diag
    order = np.lexsort((gn[keep], pts[keep][:, 1], pts[keep][:, 0]))
    cand = pts[keep][order]
    cand_gn = gn[keep][order]
    cand_v = vals[keep][order]
    reps = []
    for k in range(len(cand)):
        for r in reps:
            if np.linalg.norm(cand[k] - cand[r]) <= radius:
                if cand_gn[k] < cand_gn[r]:
                    reps[reps.index(r)] = k
                break
        else:
            reps.append(k)
    before = len(reps)
    reps = _merge_components(f, cand, cand_gn, cand_v, reps, eps_crit)
    points = []
    for r in sorted(reps, key=lambda k: (round(cand[k][0], 9), round(cand[k][1], 9))):
        loc = cand[r]
        eps = float(default_eps(cand_v[r])) if eps_crit is None else float(eps_crit)
        eigs, index = _classify(f, loc, eps)
        points.append(CriticalPoint((float(loc[0]), float(loc[1])), float(cand_v[r]), float(cand_gn[r]), eigs, index))
    diagnostics = {
        "converged": int(conv.sum()),
        "dropped_nonconverged": int((~conv).sum()),
        "dropped_outside_box": int((conv & ~inside).sum()),
        "max_iterations": int(iters.max()) if len(iters) else 0,
        "merged_along_critical_segments": before - len(reps),
    }
    return CriticalSet(points, tuple(box), len(seeds), merge_values(p.value for p in points), diagnostics)


def critical_values(cs):
    return merge_values(p.value for p in cs.points)


def mu_max_value(cs):
    """Largest critical value."""
    if not cs.points:
        raise HessPlusError("mu_max undefined for an empty critical set")
    return max(p.value for p in cs.points)
