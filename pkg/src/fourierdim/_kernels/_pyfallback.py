"""Pure-numpy implementations of the hot kernels.

Signatures and semantics mirror the compiled extension in ``_core.pyx``;
whichever is importable is selected in ``__init__``.
"""

from __future__ import annotations

import numpy as np

# row budget per temporary block in chunked evaluations
_BLOCK = 2**21


def atomic_ft(Z, pts, w):
    """sum_j w_j * exp(-2*pi*i * Z.x_j) for every row of Z, chunked."""
    B = Z.shape[0]
    n = pts.shape[0]
    out = np.empty(B, dtype=complex)
    chunk = max(1, _BLOCK // max(n, 1))
    for i0 in range(0, B, chunk):
        phase = Z[i0 : i0 + chunk] @ pts.T
        out[i0 : i0 + chunk] = np.exp(-2j * np.pi * phase) @ w
    return out


def selfsimilar_ft(z, ratio, trans, probs, depth):
    """Truncated product prod_{n<depth} sum_j p_j exp(-2*pi*i * r^n z * t_j)."""
    z = np.asarray(z, dtype=float)
    vals = np.ones(z.shape[0], dtype=complex)
    zr = z.copy()
    for _ in range(depth):
        vals *= np.exp(-2j * np.pi * np.outer(zr, trans)) @ probs
        zr *= ratio
    return vals


def _capacity_col(points, r, s, j):
    d = points - points[j]
    dist = np.sqrt(np.einsum("ij,ij->i", d, d))
    with np.errstate(divide="ignore"):
        col = np.minimum(1.0, (r / dist) ** s)
    col[j] = 1.0
    return col


def capacity_matvec(points, r, s, w):
    """(K w) for K_ij = min(1, (r/|x_i-x_j|)^s) without materialising K."""
    n = points.shape[0]
    out = np.empty(n)
    chunk = max(1, _BLOCK // max(n, 1))
    for i0 in range(0, n, chunk):
        blk = points[i0 : i0 + chunk]
        diff = blk[:, None, :] - points[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        with np.errstate(divide="ignore"):
            K = np.minimum(1.0, (r / dist) ** s)
        out[i0 : i0 + chunk] = K @ w
    return out


def capacity_fw(points, r, s, tol, max_iter):
    """Away-step Frank-Wolfe for min_w w^T K w over the probability simplex.

    K is the truncated-Riesz kernel of ``capacity_matvec`` with unit diagonal.
    ``tol`` is a relative duality-gap target: the solve is accepted once the
    Frank-Wolfe gap (a valid bound on f - f*) drops below tol * f, with the
    gap recomputed from an exact gradient before acceptance.

    Returns (w, gap, iterations, objective, converged).
    """
    n = points.shape[0]
    if n == 1:
        return np.ones(1), 0.0, 0, 1.0, True

    w = np.full(n, 1.0 / n)
    g = 2.0 * capacity_matvec(points, r, s, w)
    f = 0.5 * float(w @ g)
    refresh_every = 4096
    it = 0
    gap = np.inf
    while it < max_iter:
        it += 1
        gw = float(g @ w)
        j = int(np.argmin(g))
        gap = gw - g[j]
        if gap <= tol * f:
            # exact recompute guards against incremental drift
            g = 2.0 * capacity_matvec(points, r, s, w)
            f = 0.5 * float(w @ g)
            gw = float(g @ w)
            j = int(np.argmin(g))
            gap = gw - g[j]
            if gap <= tol * f:
                return w, gap, it, f, True

        active = np.flatnonzero(w > 0.0)
        a = int(active[np.argmax(g[active])])
        gap_away = g[a] - gw

        if gap_away > gap and w[a] < 1.0:
            # away step: d = w - e_a
            gd = gw - g[a]
            dKd = f - g[a] + 1.0
            gmax = w[a] / (1.0 - w[a])
            gamma = gmax if dKd <= 0.0 else min(gmax, -gd / (2.0 * dKd))
            w *= 1.0 + gamma
            w[a] -= gamma
            if gamma >= gmax * (1.0 - 1e-12):
                w[a] = 0.0
            g = (1.0 + gamma) * g - (2.0 * gamma) * _capacity_col(points, r, s, a)
        else:
            # toward-vertex step: d = e_j - w
            gd = g[j] - gw
            dKd = 1.0 - g[j] + f
            gamma = 1.0 if dKd <= 0.0 else min(1.0, -gd / (2.0 * dKd))
            w *= 1.0 - gamma
            w[j] += gamma
            g = (1.0 - gamma) * g + (2.0 * gamma) * _capacity_col(points, r, s, j)
        f = f + gamma * gd + gamma * gamma * dKd

        if it % refresh_every == 0:
            g = 2.0 * capacity_matvec(points, r, s, w)
            f = 0.5 * float(w @ g)

    g = 2.0 * capacity_matvec(points, r, s, w)
    f = 0.5 * float(w @ g)
    gap = float(g @ w) - float(np.min(g))
    return w, gap, it, f, False
