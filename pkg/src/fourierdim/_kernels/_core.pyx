# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Reference semantics live in _pyfallback.py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, pow

cnp.import_array()

cdef double TWOPI = 6.283185307179586476925287


def atomic_ft(const double[:, ::1] Z, const double[:, ::1] pts, const double[::1] w):
    cdef Py_ssize_t B = Z.shape[0]
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = Z.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double ph, re, im
    out = np.empty(B, dtype=complex)
    cdef double complex[::1] ov = out
    for i in range(B):
        re = 0.0
        im = 0.0
        for j in range(n):
            ph = 0.0
            for k in range(d):
                ph += Z[i, k] * pts[j, k]
            ph *= TWOPI
            re += w[j] * cos(ph)
            im -= w[j] * sin(ph)
        ov[i] = re + 1j * im
    return out


def selfsimilar_ft(const double[::1] z, double ratio, const double[::1] trans,
                   const double[::1] probs, int depth):
    cdef Py_ssize_t B = z.shape[0]
    cdef Py_ssize_t m = trans.shape[0]
    cdef Py_ssize_t i, j
    cdef int lvl
    cdef double zr, ph, fre, fim, vre, vim, tre
    out = np.empty(B, dtype=complex)
    cdef double complex[::1] ov = out
    for i in range(B):
        vre = 1.0
        vim = 0.0
        zr = z[i]
        for lvl in range(depth):
            fre = 0.0
            fim = 0.0
            for j in range(m):
                ph = TWOPI * zr * trans[j]
                fre += probs[j] * cos(ph)
                fim -= probs[j] * sin(ph)
            tre = vre * fre - vim * fim
            vim = vre * fim + vim * fre
            vre = tre
            zr *= ratio
        ov[i] = vre + 1j * vim
    return out


cdef inline double kentry(const double[:, ::1] P, Py_ssize_t i, Py_ssize_t j,
                          double r, double s, Py_ssize_t d) nogil:
    cdef double acc = 0.0
    cdef double diff, v
    cdef Py_ssize_t k
    for k in range(d):
        diff = P[i, k] - P[j, k]
        acc += diff * diff
    if acc == 0.0:
        return 1.0
    v = pow(r / sqrt(acc), s)
    return v if v < 1.0 else 1.0


def capacity_matvec(const double[:, ::1] points, double r, double s, const double[::1] w):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc
    out = np.empty(n)
    cdef double[::1] ov = out
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += kentry(points, i, j, r, s, d) * w[j]
        ov[i] = acc
    return out


def capacity_fw(const double[:, ::1] points, double r, double s, double tol,
                long max_iter):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    if n == 1:
        return np.ones(1), 0.0, 0, 1.0, True

    w_arr = np.full(n, 1.0 / n)
    g_arr = 2.0 * capacity_matvec(points, r, s, w_arr)
    cdef double[::1] w = w_arr
    cdef double[::1] g = g_arr
    cdef double f = 0.5 * float(np.dot(w_arr, g_arr))
    cdef long it = 0
    cdef long refresh_every = 4096
    cdef Py_ssize_t i, j, a
    cdef double gw, gap, gap_away, gd, dKd, gmax, gamma, col, best
    cdef bint converged = 0

    gap = np.inf
    while it < max_iter:
        it += 1
        gw = 0.0
        for i in range(n):
            gw += g[i] * w[i]
        j = 0
        best = g[0]
        for i in range(1, n):
            if g[i] < best:
                best = g[i]
                j = i
        gap = gw - best
        if gap <= tol * f:
            g_arr = 2.0 * capacity_matvec(points, r, s, np.asarray(w))
            g = g_arr
            f = 0.5 * float(np.dot(np.asarray(w), g_arr))
            gw = float(np.dot(np.asarray(w), g_arr))
            j = int(np.argmin(g_arr))
            gap = gw - g[j]
            if gap <= tol * f:
                converged = 1
                break

        a = -1
        best = -1.0
        for i in range(n):
            if w[i] > 0.0 and (a < 0 or g[i] > best):
                best = g[i]
                a = i
        gap_away = g[a] - gw

        if gap_away > gap and w[a] < 1.0:
            gd = gw - g[a]
            dKd = f - g[a] + 1.0
            gmax = w[a] / (1.0 - w[a])
            if dKd <= 0.0:
                gamma = gmax
            else:
                gamma = -gd / (2.0 * dKd)
                if gamma > gmax:
                    gamma = gmax
            for i in range(n):
                w[i] *= 1.0 + gamma
            w[a] -= gamma
            if gamma >= gmax * (1.0 - 1e-12):
                w[a] = 0.0
            for i in range(n):
                col = kentry(points, i, a, r, s, d)
                g[i] = (1.0 + gamma) * g[i] - 2.0 * gamma * col
        else:
            gd = g[j] - gw
            dKd = 1.0 - g[j] + f
            if dKd <= 0.0:
                gamma = 1.0
            else:
                gamma = -gd / (2.0 * dKd)
                if gamma > 1.0:
                    gamma = 1.0
            for i in range(n):
                w[i] *= 1.0 - gamma
            w[j] += gamma
            for i in range(n):
                col = kentry(points, i, j, r, s, d)
                g[i] = (1.0 - gamma) * g[i] + 2.0 * gamma * col
        f = f + gamma * gd + gamma * gamma * dKd

        if it % refresh_every == 0:
            g_arr = 2.0 * capacity_matvec(points, r, s, np.asarray(w))
            g = g_arr
            f = 0.5 * float(np.dot(np.asarray(w), g_arr))

    if not converged:
        g_arr = 2.0 * capacity_matvec(points, r, s, np.asarray(w))
        f = 0.5 * float(np.dot(np.asarray(w), g_arr))
        gap = float(np.dot(np.asarray(w), g_arr)) - float(np.min(g_arr))
    return np.asarray(w), float(gap), int(it), float(f), bool(converged)
