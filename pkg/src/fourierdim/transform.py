"""Radial accumulations of |mu_hat| that the dimension estimators consume.

Shell statistics use deterministic panel quadrature in one dimension and
seeded, shell-stratified Monte-Carlo in higher dimensions; lattice energies
enumerate alpha * Z^d exhaustively. Transform magnitudes are theta-independent,
so evaluations are cached and reweighted per theta (and per s for lattices).
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import measures as ms
from ._csvio import render_csv

SHELL_STDERR_TARGET = 0.05
MIN_SHELL_BUDGET = 1000
LATTICE_POINT_BUDGET = 10**8
PROBES_PER_SHELL = 64


class LatticeBudgetError(ValueError):
    """Lattice enumeration would exceed the exhaustive-point budget."""


def ball_volume(d: int, radius: float = 1.0) -> float:
    from scipy.special import gamma

    return float(np.pi ** (d / 2.0) / gamma(d / 2.0 + 1.0) * radius**d)


def _dyadic_radii(r_max: float) -> np.ndarray:
    j_top = int(math.floor(math.log2(r_max) + 1e-9))
    return 2.0 ** np.arange(0, j_top + 1)


# ---------------------------------------------------------------------------
# deterministic probe sets


def _axis_probes(d: int, lo: float, hi: float) -> np.ndarray:
    """64 probes per shell along coordinate axes and the main diagonal."""
    dirs = [np.eye(d)[i] for i in range(d)]
    dirs.append(np.full(d, 1.0 / math.sqrt(d)))
    ndir = len(dirs)
    nrad = int(math.ceil(PROBES_PER_SHELL / ndir))
    lo_eff = max(lo, hi / 64.0)
    radii = np.geomspace(lo_eff * (hi / lo_eff) ** (1.0 / nrad), hi, nrad)
    pts = np.empty((PROBES_PER_SHELL, d))
    for i in range(PROBES_PER_SHELL):
        pts[i] = dirs[i % ndir] * radii[i // ndir]
    return pts


def _structure_probes(spec: ms.MeasureSpec, lo: float, hi: float, d: int) -> np.ndarray:
    """Probe radii (1/ratio)^n along the axes of self-similar factors.

    These witness the O(1)-width non-decay peaks of Cantor-type transforms
    that no feasible geometric probe grid can find.
    """
    pts = []

    def walk(s, offset):
        if isinstance(s, ms.Product):
            walk(s.left, offset)
            walk(s.right, offset + s.left.ambient_dim)
        elif isinstance(s, ms.SelfSimilar1D):
            base = 1.0 / s.ratio
            n = max(0, int(math.ceil(math.log(lo) / math.log(base) - 1e-12)))
            while base**n <= lo:
                n += 1
            while base**n <= hi:
                p = np.zeros(d)
                p[offset] = base**n
                pts.append(p)
                n += 1

    walk(spec, 0)
    return np.array(pts) if pts else np.empty((0, d))


# ---------------------------------------------------------------------------
# shell evaluations (theta-independent), cached per (spec, r_max, budget, seed)


@dataclass
class _Region:
    lo: float
    hi: float
    volume: float
    sup: float
    err_max: float
    mc_vals: np.ndarray | None = None  # d >= 2
    fine_vals: np.ndarray | None = None  # d == 1
    fine_wts: np.ndarray | None = None
    coarse_vals: np.ndarray | None = None
    coarse_wts: np.ndarray | None = None


def _panel_grid(lo: float, hi: float, width: float, nodes: int):
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    x, w = ms._gl_rule(nodes)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    return (mid[:, None] + half * x[None, :]).ravel(), np.broadcast_to(
        half * w[None, :], (n_panels, nodes)
    ).ravel()


class _ShellEvaluations:
    def __init__(self, spec: ms.MeasureSpec, r_max: float, budget: int, seed: int):
        self.spec = spec
        self.d = spec.ambient_dim
        self.r_max = float(r_max)
        self.budget = int(budget)
        self.seed = int(seed)
        self.radii = _dyadic_radii(r_max)
        self.total_mass = ms.total_mass(spec)
        self.regions: list[_Region] = []
        for j, hi in enumerate(self.radii):
            lo = 0.0 if j == 0 else float(self.radii[j - 1])
            self.regions.append(self._evaluate_region(j, lo, float(hi)))

    def _probe_sup(self, lo: float, hi: float):
        pts = _axis_probes(self.d, lo, hi)
        extra = _structure_probes(self.spec, max(lo, 1e-9), hi, self.d)
        if extra.shape[0]:
            pts = np.vstack([pts, extra])
        vals, errs = ms.fourier_eval_batch(self.spec, pts)
        return float(np.abs(vals).max()), float(errs.max())

    def _evaluate_region(self, j: int, lo: float, hi: float) -> _Region:
        d = self.d
        volume = ball_volume(d, hi) - ball_volume(d, lo)
        sup_probe, err_probe = self._probe_sup(lo, hi)
        if d == 1:
            width = 0.25 / max(1.0, self.spec.support_diameter)
            zf, wf = _panel_grid(lo, hi, width, 16)
            zc, wc = _panel_grid(lo, hi, width, 8)
            vf, ef = ms.fourier_eval_batch(self.spec, zf[:, None])
            vc, _ = ms.fourier_eval_batch(self.spec, zc[:, None])
            absf, absc = np.abs(vf), np.abs(vc)
            return _Region(
                lo,
                hi,
                volume,
                max(sup_probe, float(absf.max())),
                max(err_probe, float(ef.max()) if ef.size else 0.0),
                fine_vals=absf,
                fine_wts=wf,
                coarse_vals=absc,
                coarse_wts=wc,
            )
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, j]))
        x = rng.standard_normal((self.budget, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        u = rng.random(self.budget)
        rad = (lo**d + u * (hi**d - lo**d)) ** (1.0 / d)
        pts = x * rad[:, None]
        vals, errs = ms.fourier_eval_batch(self.spec, pts)
        absv = np.abs(vals)
        return _Region(
            lo,
            hi,
            volume,
            max(sup_probe, float(absv.max())),
            max(err_probe, float(errs.max()) if errs.size else 0.0),
            mc_vals=absv,
        )

    def stats(self, theta: float) -> "ShellStats":
        p = 2.0 / theta
        incs, ses = [], []
        for reg in self.regions:
            if reg.mc_vals is not None:
                vals = reg.mc_vals**p
                inc = reg.volume * float(vals.mean())
                se = reg.volume * float(vals.std(ddof=1)) / math.sqrt(vals.size)
            else:
                inc = 2.0 * float((reg.fine_vals**p) @ reg.fine_wts)
                coarse = 2.0 * float((reg.coarse_vals**p) @ reg.coarse_wts)
                se = abs(inc - coarse)
            incs.append(inc)
            ses.append(se)
        incs = np.array(incs)
        ses = np.array(ses)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(incs > 0, ses / np.maximum(incs, 1e-300), 0.0)
        return ShellStats(
            theta=float(theta),
            ambient_dim=self.d,
            radii=self.radii.copy(),
            shell_integrals=np.cumsum(incs),
            shell_stderrs=np.sqrt(np.cumsum(ses**2)),
            shell_sups=np.array([r.sup for r in self.regions]),
            stderr_ok=rel <= SHELL_STDERR_TARGET,
            total_mass=self.total_mass,
            max_abs_err=max(r.err_max for r in self.regions),
            budget=self.budget,
            seed=self.seed,
        )


_SHELL_CACHE: OrderedDict = OrderedDict()
_SHELL_CACHE_MAX = 16


def _shell_evaluations(spec, r_max, budget, seed) -> _ShellEvaluations:
    key = (spec.cache_key(), float(r_max), int(budget), int(seed))
    if key in _SHELL_CACHE:
        _SHELL_CACHE.move_to_end(key)
        return _SHELL_CACHE[key]
    ev = _ShellEvaluations(spec, r_max, budget, seed)
    _SHELL_CACHE[key] = ev
    while len(_SHELL_CACHE) > _SHELL_CACHE_MAX:
        _SHELL_CACHE.popitem(last=False)
    return ev


def clear_caches() -> None:
    _SHELL_CACHE.clear()
    _LATTICE_CACHE.clear()


# ---------------------------------------------------------------------------
# public types and operations


@dataclass
class ShellStats:
    """Cumulative ball integrals of |mu_hat|^{2/theta} and per-shell sups."""

    theta: float
    ambient_dim: int
    radii: np.ndarray
    shell_integrals: np.ndarray
    shell_stderrs: np.ndarray
    shell_sups: np.ndarray
    stderr_ok: np.ndarray
    total_mass: float
    max_abs_err: float
    budget: int
    seed: int


def shell_stats(
    spec: ms.MeasureSpec, theta: float, r_max: float, budget: int = 4096, seed: int = 0
) -> ShellStats:
    """Estimate S(R_j) = int_{|z|<=R_j} |mu_hat|^{2/theta} dz on dyadic radii.

    Ambient dimension 1 uses two-level panel quadrature (the level difference
    is the reported standard error); higher dimensions use shell-stratified
    Monte Carlo with per-shell RNG streams derived from (seed, shell index).
    Shells whose relative standard error exceeds 5% are flagged, not fatal.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if r_max < 4.0:
        raise ValueError("r_max must be >= 4")
    if budget < MIN_SHELL_BUDGET:
        raise ValueError(f"budget must be >= {MIN_SHELL_BUDGET} per shell")
    return _shell_evaluations(spec, r_max, budget, seed).stats(theta)


def sup_decay(stats: ShellStats) -> list[tuple[float, float]]:
    """Per-shell (R_j, sup of |mu_hat| over the shell) pairs."""
    return [(float(r), float(s)) for r, s in zip(stats.radii, stats.shell_sups)]


@dataclass
class LatticeEnergy:
    """Partial sums of the lattice representation of the (s, theta) energy."""

    s: float
    theta: float
    alpha: float
    radii: np.ndarray
    partial_sums: np.ndarray


class _LatticeEvaluations:
    """Exhaustive |mu_hat| over alpha*Z^d inside the R_max ball, reusable
    across (s, theta) reweightings."""

    def __init__(self, spec: ms.MeasureSpec, alpha: float, r_max: float):
        d = spec.ambient_dim
        self.d = d
        self.alpha = float(alpha)
        self.r_max = float(r_max)
        self.radii = _dyadic_radii(r_max)
        self.mass = ms.total_mass(spec)
        logs_v, logs_z, bins = [], [], []
        top = float(self.radii[-1])
        for Z in self._half_lattice_chunks(alpha, r_max, d):
            absz = np.sqrt(np.einsum("ij,ij->i", Z, Z))
            keep = (absz > 0) & (absz <= top)
            if not np.any(keep):
                continue
            Z, absz = Z[keep], absz[keep]
            vals, _ = ms.fourier_eval_batch(spec, Z)
            with np.errstate(divide="ignore"):
                logs_v.append(np.log(np.abs(vals)))
            logs_z.append(np.log(absz))
            bins.append(np.searchsorted(self.radii, absz, side="left").astype(np.int8))
        self.log_absv = np.concatenate(logs_v) if logs_v else np.empty(0)
        self.log_absz = np.concatenate(logs_z) if logs_z else np.empty(0)
        self.bins = np.concatenate(bins) if bins else np.empty(0, np.int8)

    @staticmethod
    def _half_lattice_chunks(alpha: float, r_max: float, d: int):
        # one representative of each +-z pair; magnitudes are symmetric so
        # off-origin contributions are doubled in energy()
        M = int(math.floor(r_max / alpha))
        if d == 1:
            m = np.arange(1, M + 1, dtype=float)
            yield alpha * m[:, None]
            return
        axis = np.arange(-M, M + 1, dtype=float)
        if d == 2:
            yield alpha * np.column_stack([np.zeros(M), np.arange(1, M + 1)])
            for m1 in range(1, M + 1):
                yield alpha * np.column_stack([np.full(axis.size, m1), axis])
            return
        # d == 3: the m1 = 0 plane reduces to the d = 2 half-lattice
        yield alpha * np.column_stack(
            [np.zeros(M), np.zeros(M), np.arange(1, M + 1)]
        )
        g2, g3 = np.meshgrid(axis, axis, indexing="ij")
        plane = np.column_stack([g2.ravel(), g3.ravel()])
        for m2 in range(1, M + 1):
            yield alpha * np.column_stack(
                [np.zeros(axis.size), np.full(axis.size, m2), axis]
            )
        for m1 in range(1, M + 1):
            yield alpha * np.column_stack([np.full(plane.shape[0], m1), plane])

    def energy(self, s: float, theta: float) -> LatticeEnergy:
        p = 2.0 / theta
        expo = s / theta - self.d
        with np.errstate(over="ignore"):
            w = np.exp(p * self.log_absv + expo * self.log_absz)
        per_bin = np.bincount(self.bins, weights=2.0 * w, minlength=self.radii.size)
        partial = self.mass**p + np.cumsum(per_bin[: self.radii.size])
        return LatticeEnergy(
            s=float(s),
            theta=float(theta),
            alpha=self.alpha,
            radii=self.radii.copy(),
            partial_sums=partial,
        )


_LATTICE_CACHE: OrderedDict = OrderedDict()
_LATTICE_CACHE_MAX = 2


def _lattice_evaluations(spec, alpha, r_max) -> _LatticeEvaluations:
    key = (spec.cache_key(), float(alpha), float(r_max))
    if key in _LATTICE_CACHE:
        _LATTICE_CACHE.move_to_end(key)
        return _LATTICE_CACHE[key]
    ev = _LatticeEvaluations(spec, alpha, r_max)
    _LATTICE_CACHE[key] = ev
    while len(_LATTICE_CACHE) > _LATTICE_CACHE_MAX:
        _LATTICE_CACHE.popitem(last=False)
    return ev


def lattice_point_count(d: int, alpha: float, r_max: float) -> float:
    return ball_volume(d, r_max / alpha)


def lattice_energy(
    spec: ms.MeasureSpec, s: float, theta: float, alpha: float, r_max: float
) -> LatticeEnergy:
    """Exact enumeration of |mu_hat(0)|^{2/theta} + sum over alpha*Z^d of
    |mu_hat(z)|^{2/theta} |z|^{s/theta - d}, cumulated at dyadic radii.

    Requires 0 < alpha < 1/diam(support) and ambient dimension <= 3.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if s < 0:
        raise ValueError("s must be >= 0")
    d = spec.ambient_dim
    if d > 3:
        raise LatticeBudgetError("exhaustive lattice enumeration refused for d > 3")
    diam = spec.support_diameter
    if alpha <= 0 or (diam > 0 and alpha >= 1.0 / diam):
        raise ValueError(
            f"alpha must lie in (0, 1/diameter) = (0, {1.0 / diam if diam > 0 else math.inf})"
        )
    count = lattice_point_count(d, alpha, r_max)
    if count > LATTICE_POINT_BUDGET:
        raise LatticeBudgetError(
            f"lattice of ~{count:.2e} points exceeds the {LATTICE_POINT_BUDGET:.0e} "
            f"budget; reduce r_max below {alpha * r_max * (LATTICE_POINT_BUDGET / count) ** (1.0 / d) / alpha:.1f} "
            "or increase alpha"
        )
    return _lattice_evaluations(spec, alpha, r_max).energy(s, theta)


# ---------------------------------------------------------------------------
# CSV contracts


def shellstats_to_csv(stats: ShellStats) -> str:
    rows = [
        (
            stats.theta,
            float(r),
            float(S),
            float(se),
            float(sup),
        )
        for r, S, se, sup in zip(
            stats.radii, stats.shell_integrals, stats.shell_stderrs, stats.shell_sups
        )
    ]
    return render_csv(["theta", "R", "S", "S_stderr", "shell_sup"], rows)


def lattice_to_csv(le: LatticeEnergy) -> str:
    rows = [
        (le.s, le.theta, le.alpha, float(r), float(p))
        for r, p in zip(le.radii, le.partial_sums)
    ]
    return render_csv(["s", "theta", "alpha", "R", "partial_sum"], rows)
