"""Dimension estimators built on shell statistics and lattice energies.

Repo-wide tolerance constants live here: REGIME_MARGIN separates the exact
(Strichartz) regime from the clamped one, CEILING_TOL is the slack allowed on
structural ceilings, and DIVERGENCE_SLOPE_TOL is the tail-slope threshold that
declares a lattice energy divergent (a pragmatic cutoff, echoed in outputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import measures as ms
from . import transform as tr
from ._csvio import render_csv

REGIME_MARGIN = 0.1
CEILING_TOL = 0.05
DIVERGENCE_SLOPE_TOL = 0.05

FLAG_EXACT = "EXACT_REGIME"
FLAG_CLAMPED = "CLAMPED"
FLAG_SUP = "SUP_DECAY"

_SHELL_RMAX_DEFAULT = {1: 2048.0, 2: 512.0, 3: 256.0}
_LATTICE_RMAX_DEFAULT = {1: 4096.0, 2: 512.0, 3: 64.0}


@dataclass
class Budgets:
    """Evaluation budgets shared by the spectrum estimators."""

    shell_budget: int = 4096
    seed: int = 0
    shell_r_max: float | None = None
    lattice_alpha: float | None = None
    lattice_r_max: float | None = None
    window: float = 1.0 / 3.0
    bisect_iters: int = 8

    def resolved_shell_r_max(self, d: int) -> float:
        if self.shell_r_max is not None:
            return float(self.shell_r_max)
        return _SHELL_RMAX_DEFAULT.get(d, 64.0)

    def resolved_lattice_r_max(self, d: int) -> float:
        if self.lattice_r_max is not None:
            return float(self.lattice_r_max)
        return _LATTICE_RMAX_DEFAULT.get(d, 16.0)

    def resolved_alpha(self, spec: ms.MeasureSpec) -> float:
        if self.lattice_alpha is not None:
            return float(self.lattice_alpha)
        diam = spec.support_diameter
        return 0.5 if diam <= 0 else min(0.5, 0.9 / diam)


def _window_slice(count: int, window: float) -> slice:
    take = max(3, int(math.floor(count * window)))
    take = min(take, count)
    return slice(count - take, count)


def _window_exponents(stats: tr.ShellStats, window: float):
    if stats.radii.size < 8:
        raise ValueError("at least 8 shells are required")
    if not np.all(np.isfinite(stats.shell_integrals)) or np.any(
        stats.shell_integrals <= 0
    ):
        raise ValueError("shell integrals must be finite and positive")
    logr = np.log2(stats.radii[1:])
    logs = np.log2(stats.shell_integrals[1:])
    d = stats.ambient_dim
    g = stats.theta * (d * logr - logs) / logr
    # stderr influence on the exponent, per shell
    dlogs = stats.shell_stderrs[1:] / (stats.shell_integrals[1:] * math.log(2.0))
    widen = stats.theta * dlogs / logr
    win = _window_slice(g.size, window)
    return g[win], widen[win], logr[win], logs[win]


def strichartz_exponents(
    stats: tr.ShellStats, window: float = 1.0 / 3.0
) -> tuple[float, float]:
    """(F_lower, F_upper): min/max windowed shell exponents, clipped to [0, d*theta].

    The window is the trailing fraction of shells (default last third),
    realising the liminf/limsup in the scaling definitions.
    """
    g, _, _, _ = _window_exponents(stats, window)
    dtheta = stats.ambient_dim * stats.theta
    lo = float(np.clip(g.min(), 0.0, dtheta))
    hi = float(np.clip(g.max(), 0.0, dtheta))
    return lo, hi


def strichartz_slope(stats: tr.ShellStats, window: float = 1.0 / 3.0) -> float:
    """OLS point estimate of the windowed scaling exponent (report diagnostic)."""
    _, _, logr, logs = _window_exponents(stats, window)
    slope = float(np.polyfit(logr, logs, 1)[0])
    return stats.theta * (stats.ambient_dim - slope)


@dataclass
class DimEstimate:
    value: float
    lower: float
    upper: float
    flag: str
    diagnostics: dict = field(default_factory=dict)


def _tail_slope(partial_sums: np.ndarray, radii: np.ndarray) -> float:
    k = len(radii) - max(3, len(radii) // 3)
    logs = np.log2(np.maximum(partial_sums[k:], 1e-300))
    logr = np.log2(radii[k:])
    return float(np.polyfit(logr, logs, 1)[0])


def lattice_diverges(le: tr.LatticeEnergy) -> tuple[bool, float]:
    slope = _tail_slope(le.partial_sums, le.radii)
    return slope > DIVERGENCE_SLOPE_TOL, slope


def estimate_dim_theta(
    spec: ms.MeasureSpec,
    theta: float,
    stats: tr.ShellStats | None = None,
    budgets: Budgets | None = None,
) -> DimEstimate:
    """Dimension estimate at theta in (0, 1].

    If the windowed lower Strichartz exponent sits clearly below d*theta the
    estimate is that exponent (EXACT_REGIME). Otherwise the shell averages are
    saturated and the finiteness boundary of the lattice energy is located by
    bisection over s (CLAMPED), the final bracket giving the band.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    budgets = budgets or Budgets()
    d = spec.ambient_dim
    if stats is None:
        stats = tr.shell_stats(
            spec,
            theta,
            budgets.resolved_shell_r_max(d),
            budgets.shell_budget,
            budgets.seed,
        )
    g, widen, _, _ = _window_exponents(stats, budgets.window)
    dtheta = d * theta
    f_lo = float(np.clip(g.min(), 0.0, dtheta))
    f_hi = float(np.clip(g.max(), 0.0, dtheta))
    wmax = float(widen.max())
    diag = {
        "f_lower": f_lo,
        "f_upper": f_hi,
        "ols": strichartz_slope(stats, budgets.window),
        "stderr_widen": wmax,
    }

    if f_lo < dtheta - REGIME_MARGIN:
        return DimEstimate(
            value=f_lo,
            lower=max(0.0, f_lo - wmax),
            upper=min(dtheta, f_hi + wmax),
            flag=FLAG_EXACT,
            diagnostics=diag,
        )

    alpha = budgets.resolved_alpha(spec)
    r_max = budgets.resolved_lattice_r_max(d)
    trace = []

    def diverges(s: float) -> bool:
        le = tr.lattice_energy(spec, s, theta, alpha, r_max)
        div, slope = lattice_diverges(le)
        trace.append({"s": s, "slope": slope, "diverges": div})
        return div

    lo, hi = dtheta, 2.0 * d + 2.0
    diag["bisection"] = trace
    diag["divergence_slope_tol"] = DIVERGENCE_SLOPE_TOL
    if diverges(lo):
        return DimEstimate(
            value=lo,
            lower=max(0.0, lo - CEILING_TOL),
            upper=lo + CEILING_TOL,
            flag=FLAG_CLAMPED,
            diagnostics=diag,
        )
    if not diverges(hi):
        return DimEstimate(
            value=hi, lower=hi - CEILING_TOL, upper=hi, flag=FLAG_CLAMPED, diagnostics=diag
        )
    for _ in range(budgets.bisect_iters):
        mid = 0.5 * (lo + hi)
        if diverges(mid):
            hi = mid
        else:
            lo = mid
    return DimEstimate(
        value=0.5 * (lo + hi),
        lower=lo,
        upper=hi,
        flag=FLAG_CLAMPED,
        diagnostics=diag,
    )


def estimate_fourier_dim(
    stats: tr.ShellStats, window: float = 1.0 / 3.0
) -> DimEstimate:
    """Fourier-dimension estimate from the worst windowed shell-sup decay."""
    pairs = tr.sup_decay(stats)[1:]
    if len(pairs) < 7:
        raise ValueError("at least 8 shells are required")
    sups = np.array([s for _, s in pairs])
    if np.any(sups <= 0.0):
        raise RuntimeError("zero shell sups for a nonzero measure")
    radii = np.array([r for r, _ in pairs])
    ratios = np.log2(sups) / np.log2(radii)
    win = _window_slice(ratios.size, window)
    ratios = ratios[win]
    value = float(max(0.0, -2.0 * ratios.max()))
    upper = float(max(0.0, -2.0 * ratios.min()))
    return DimEstimate(
        value=value,
        lower=value,
        upper=max(value, upper),
        flag=FLAG_SUP,
        diagnostics={"window_ratios": ratios.tolist()},
    )


@dataclass
class SpectrumCurve:
    """theta-grid of dimension estimates with envelope bands and flags."""

    thetas: np.ndarray
    dims: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    flags: list[str]
    notes: dict = field(default_factory=dict)


def spectrum_curve(
    spec: ms.MeasureSpec, theta_grid, budgets: Budgets | None = None
) -> SpectrumCurve:
    """Per-theta estimates over a sorted grid in [0,1]; theta = 0 is routed to
    the sup-decay path. No monotone post-processing is applied."""
    budgets = budgets or Budgets()
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.size == 0 or np.any(np.diff(thetas) < 0):
        raise ValueError("theta grid must be nonempty and sorted")
    if thetas.min() < 0.0 or thetas.max() > 1.0:
        raise ValueError("theta grid must lie in [0, 1]")
    d = spec.ambient_dim
    r_max = budgets.resolved_shell_r_max(d)

    dims, lows, ups, flags = [], [], [], []
    for theta in thetas:
        if theta == 0.0:
            ref = tr.shell_stats(spec, 1.0, r_max, budgets.shell_budget, budgets.seed)
            est = estimate_fourier_dim(ref, budgets.window)
        else:
            stats = tr.shell_stats(
                spec, theta, r_max, budgets.shell_budget, budgets.seed
            )
            est = estimate_dim_theta(spec, theta, stats, budgets)
        dims.append(est.value)
        lows.append(est.lower)
        ups.append(est.upper)
        flags.append(est.flag)
    return SpectrumCurve(
        thetas=thetas.copy(),
        dims=np.array(dims),
        lower=np.array(lows),
        upper=np.array(ups),
        flags=flags,
        notes={
            "shell_budget": budgets.shell_budget,
            "seed": budgets.seed,
            "shell_r_max": r_max,
            "divergence_slope_tol": DIVERGENCE_SLOPE_TOL,
        },
    )


def curve_to_csv(curve: SpectrumCurve) -> str:
    rows = [
        (float(t), float(v), float(lo), float(hi), flag)
        for t, v, lo, hi, flag in zip(
            curve.thetas, curve.dims, curve.lower, curve.upper, curve.flags
        )
    ]
    return render_csv(["theta", "dim", "lower", "upper", "flag"], rows)
