"""A-posteriori certification of computed trajectories.

A trajectory is accepted as a localized solution when three discrete
certificates hold on its grid: it never leaves the region (max h), its
states satisfy the differential equation away from the jump surfaces (a
discrete L1 defect built from the stored node slopes), and the fraction
of time spent within delta of any jump level is negligible (transversal
crossings occupy isolated instants).

These are grid certificates: they bound behaviour at and between the
recorded nodes through the interpolant implied by the stored slopes, not
the measure-theoretic statement itself.  Report headers carry this
caveat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import Trajectory
from .regions import ViablePair
from .rhs_model import RhsModel, surface_distance

Array = np.ndarray

# defect tolerance constants for rk4_events runs: C4 * step^4 covers the
# truncation defect (calibrated on the continuous band benchmark), the
# second term is the double-precision slope-differencing floor
_DEFECT_C4 = 1e-2
_EPS64 = float(np.finfo(np.float64).eps)


def residual_tolerance(step: float, span: float, state_scale: float = 1.0) -> float:
    """Default pass threshold for the discrete residual of an RK4 run."""
    floor = 20.0 * _EPS64 * max(1.0, state_scale) * span / step
    return _DEFECT_C4 * step ** 4 * span + floor


def certify_region(traj: Trajectory, pair: ViablePair,
                   tol: float = 1e-6) -> tuple[float, bool]:
    """Max of h over the grid; pass iff it stays at or below tol."""
    if len(traj.times) < 1:
        raise ValueError("empty trajectory")
    max_h = -math.inf
    for t, x in zip(traj.times, traj.states):
        hv = pair.h(float(t), x)
        if hv > max_h:
            max_h = hv
    return max_h, max_h <= tol


def region_violations(traj: Trajectory, pair: ViablePair,
                      tol: float = 1e-6, limit: int = 32) -> tuple[float, ...]:
    """Witness times with h above tol (capped at `limit` entries)."""
    out = []
    for t, x in zip(traj.times, traj.states):
        if pair.h(float(t), x) > tol:
            out.append(float(t))
            if len(out) >= limit:
                break
    return tuple(out)


def _interval_mask(traj: Trajectory, model: RhsModel, delta: float) -> Array:
    """Intervals whose endpoints and midpoint stay off the surfaces."""
    K = len(traj.times) - 1
    if not model.surfaces or delta <= 0.0:
        return np.ones(K, dtype=bool)
    node_dist = np.array([surface_distance(model, float(t), x)
                          for t, x in zip(traj.times, traj.states)])
    keep = np.empty(K, dtype=bool)
    for i in range(K):
        if node_dist[i] <= delta or node_dist[i + 1] <= delta:
            keep[i] = False
            continue
        tm = 0.5 * (float(traj.times[i]) + float(traj.times[i + 1]))
        xm = 0.5 * (traj.states[i] + traj.states[i + 1])
        keep[i] = surface_distance(model, tm, xm) > delta
    return keep


def certify_residual(traj: Trajectory, model: RhsModel,
                     delta_surface: float = 0.0,
                     tol: float | None = None) -> tuple[float, bool]:
    """Discrete L1 residual of x' = f(t, x) over off-surface intervals.

    Per interval the recorded mean slope (x_{i+1} - x_i)/dt is compared
    with the Simpson average of f along the cubic Hermite reconstruction
    through the stored node slopes; the L1 sum of the mismatch is a
    defect that shrinks like step^4 for smooth stretches of an RK4 run
    (until the double-precision differencing floor takes over).  Interior
    jumps never contribute: crossings sit at split nodes and intervals
    touching a surface within delta_surface are excluded.
    """
    if traj.derivs is None or len(traj.derivs) != len(traj.times):
        raise ValueError("trajectory carries no derivative samples")
    K = len(traj.times) - 1
    if K < 1:
        return 0.0, True

    keep = _interval_mask(traj, model, delta_surface)
    total = 0.0
    span = 0.0
    for i in range(K):
        if not keep[i]:
            continue
        t0, t1 = float(traj.times[i]), float(traj.times[i + 1])
        dt = t1 - t0
        x0, x1 = traj.states[i], traj.states[i + 1]
        d0, d1 = traj.derivs[i], traj.derivs[i + 1]
        xm = 0.5 * (x0 + x1) + (dt / 8.0) * (d0 - d1)
        f0 = model.fn(t0, x0)
        fm = model.fn(t0 + 0.5 * dt, xm)
        f1 = model.fn(t1, x1)
        simpson = (f0 + 4.0 * fm + f1) / 6.0
        slope = (x1 - x0) / dt
        total += float(np.linalg.norm(slope - simpson)) * dt
        span += dt

    if tol is None:
        if span <= 0.0:
            return total, True
        step = span / max(1, int(keep.sum()))
        scale = float(np.max(np.abs(traj.states))) if traj.states.size else 1.0
        tol = residual_tolerance(step, span, scale)
    return total, total <= tol


def surface_time(traj: Trajectory, model: RhsModel, delta: float,
                 tol: float = 1e-3) -> tuple[float, bool]:
    """Fraction of total time whose grid points sit within delta of a level.

    Each node owns half of its adjacent intervals (trapezoid weights).
    Models with no declared surfaces spend no time on them by convention.
    """
    if not model.surfaces:
        return 0.0, True
    t = np.asarray(traj.times, dtype=float)
    if len(t) == 1:
        return 0.0, True
    w = np.zeros(len(t))
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    on = np.array([surface_distance(model, float(ti), x) < delta
                   for ti, x in zip(t, traj.states)])
    frac = float(w[on].sum() / (t[-1] - t[0]))
    return frac, frac <= tol


@dataclass(frozen=True)
class CertReport:
    """Combined a-posteriori certificate for one trajectory."""

    max_h: float
    region_tol: float
    region_ok: bool
    residual: float
    residual_tol: float
    residual_ok: bool
    surface_time_fraction: float
    surface_time_tol: float
    surface_time_ok: bool
    violations: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.region_ok and self.residual_ok and self.surface_time_ok

    def to_text(self) -> str:
        lines = [
            "# discrete trajectory certificate (grid-level bounds, not a",
            "# measure-theoretic proof of absolute continuity)",
            f"max_h: {self.max_h!r}",
            f"region_tol: {self.region_tol!r}",
            f"region_ok: {self.region_ok}",
            f"residual: {self.residual!r}",
            f"residual_tol: {self.residual_tol!r}",
            f"residual_ok: {self.residual_ok}",
            f"surface_time_fraction: {self.surface_time_fraction!r}",
            f"surface_time_tol: {self.surface_time_tol!r}",
            f"surface_time_ok: {self.surface_time_ok}",
            f"violations: {' '.join(repr(v) for v in self.violations) or '-'}",
            f"verdict: {'pass' if self.passed else 'fail'}",
        ]
        return "\n".join(lines) + "\n"


def certify(traj: Trajectory, model: RhsModel, pair: ViablePair,
            region_tol: float = 1e-6, delta_surface: float = 0.0,
            residual_tol: float | None = None, surface_delta: float = 1e-6,
            surface_tol: float = 1e-3) -> CertReport:
    """Run all three certificates and assemble the combined report."""
    max_h, region_ok = certify_region(traj, pair, tol=region_tol)
    residual, residual_ok = certify_residual(traj, model,
                                             delta_surface=delta_surface,
                                             tol=residual_tol)
    if residual_tol is None:
        # recompute the tolerance actually used for the report
        _, span_guess = 0.0, float(traj.times[-1] - traj.times[0])
        step = span_guess / max(1, len(traj.times) - 1)
        scale = float(np.max(np.abs(traj.states))) if traj.states.size else 1.0
        residual_tol = residual_tolerance(step, span_guess, scale)
    frac, frac_ok = surface_time(traj, model, delta=surface_delta,
                                 tol=surface_tol)
    return CertReport(
        max_h=max_h, region_tol=region_tol, region_ok=region_ok,
        residual=residual, residual_tol=residual_tol, residual_ok=residual_ok,
        surface_time_fraction=frac, surface_time_tol=surface_tol,
        surface_time_ok=frac_ok,
        violations=region_violations(traj, pair, tol=region_tol),
    )
