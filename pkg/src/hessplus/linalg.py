"""Extreme eigenvalues of symmetric matrices and small rank computations.

Two-by-two matrices (the common case for plane fields) go through a closed
form that is vectorized over any leading batch shape; larger matrices use
cyclic Jacobi rotations so that results do not depend on a LAPACK build.
"""

import numpy as np

JACOBI_TOL = 1e-13


def symmetrize(m):
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def sym2_eigs(a, b, c):
    """Eigenvalues ``(lo, hi)`` of ``[[a, b], [b, c]]``, broadcasting over arrays.

    The eigenvalue of smaller magnitude is recovered from the determinant to
    avoid cancellation when the other one dominates.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    det = a * c - b * b
    big_pos = mean + rad
    big_neg = mean - rad
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(mean > 0, np.where(big_pos != 0, det / big_pos, 0.0), big_neg)
        hi = np.where(mean < 0, np.where(big_neg != 0, det / big_neg, 0.0), big_pos)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def jacobi_eigenvalues(m, tol=JACOBI_TOL, max_sweeps=64):
    """Ascending eigenvalues of one symmetric matrix by cyclic Jacobi sweeps.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||m||_F)``.
    """
    a = symmetrize(m).copy()
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])) or apq == 0.0:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:  # theta^2 would overflow; t ~ 1 / (2 theta)
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = cs
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def _extreme(m, pick):
    m = symmetrize(m)
    n = m.shape[-1]
    if n == 1:
        return m[..., 0, 0] if m.ndim > 2 else float(m[0, 0])
    if n == 2:
        lo, hi = sym2_eigs(m[..., 0, 0], m[..., 0, 1], m[..., 1, 1])
        return lo if pick == 0 else hi
    if m.ndim == 2:
        return float(jacobi_eigenvalues(m)[0 if pick == 0 else -1])
    flat = m.reshape(-1, n, n)
    out = np.array([jacobi_eigenvalues(x)[0 if pick == 0 else -1] for x in flat])
    return out.reshape(m.shape[:-2])


def lambda_min(m):
    """Smallest eigenvalue, i.e. the lower end of the numerical range."""
    return _extreme(m, 0)


def mu_max(m):
    """Largest eigenvalue, the upper end of the numerical range."""
    return _extreme(m, 1)


def rank2_sym_eigs(u, v):
    """The two possibly nonzero eigenvalues of ``u^T v + v^T u``.

    They are ``<u, v> -/+ |u| |v|``; the first is never positive and the
    second never negative.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    dot = np.sum(u * v, axis=-1)
    norms = np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1)
    lam = np.minimum(dot - norms, 0.0)
    mu = np.maximum(dot + norms, 0.0)
    if lam.ndim == 0:
        return float(lam), float(mu)
    return lam, mu


def rank_tolerance(rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return 1e-9 * (1.0 + float(np.max(np.linalg.norm(rows, axis=-1))))


def numerical_rank(rows, tau=None):
    """Rank of a small matrix from its singular values above ``tau``."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if tau is None:
        tau = rank_tolerance(rows)
    sv = np.linalg.svd(rows, compute_uv=False)
    return int(np.sum(sv > tau))


def pair_rank(u, v, tau=None):
    """Numerical rank of the stacked rows ``[u; v]`` for batches of vectors.

    The smaller singular value comes from Lagrange's identity
    ``s1 * s2 = sqrt(sum_{i<j} (u_i v_j - u_j v_i)^2)``, which stays accurate
    when ``u`` and ``v`` are nearly parallel.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[-1]
    minors = np.zeros(u.shape[:-1])
    for i in range(n - 1):
        for j in range(i + 1, n):
            minors = minors + (u[..., i] * v[..., j] - u[..., j] * v[..., i]) ** 2
    gram_lo, gram_hi = sym2_eigs(np.sum(u * u, -1), np.sum(u * v, -1), np.sum(v * v, -1))
    s1 = np.sqrt(np.maximum(gram_hi, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s2 = np.where(s1 > 0, np.sqrt(minors) / s1, 0.0)
    if tau is None:
        tau = 1e-9 * (1.0 + np.maximum(np.linalg.norm(u, axis=-1), np.linalg.norm(v, axis=-1)))
    return (s1 > tau).astype(int) + (s2 > tau).astype(int)
