"""Time integration of the projected problem with event detection.

The main driver integrates x' = f(p(t, x)) with fixed-step RK4, scanning
the declared surface values between nodes and splitting steps at level
crossings located by bisection.  Fixed stepping plus event splitting is
predictable around jumps, where adaptive controllers misbehave.

A set-valued Euler mode realizes one selection of the differential
inclusion x' in Kf(t, x) by drawing the step direction from the sampled
envelope whenever the current point sits on a declared surface.  A
reference mode wraps an adaptive embedded Runge-Kutta method (scipy) for
continuous fields and serves as the independent accuracy oracle.
"""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional
import warnings

import numpy as np
from scipy.integrate import solve_ivp

from .krasovskij import envelope_samples
from .regions import ViablePair
from .rhs_model import RhsModel, as_state, surface_distance

Array = np.ndarray

_CONTAINMENT_TOL = 1e-10


class IntegrationError(RuntimeError):
    """Integration failed (non-finite state or event localization stall)."""


@dataclass(frozen=True)
class Event:
    """A detected crossing of one jump level of one surface."""

    time: float
    surface: int
    level: float
    direction: int  # +1 upward in tau, -1 downward


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4_events"  # rk4_events | euler | setvalued_euler | reference_adaptive
    step: float = 1e-3
    event_tol: float = 1e-10
    max_event_bisections: int = 60
    selection: str = "center"   # for setvalued_euler: center | random
    seed: int = 0

    def validate(self, horizon: float) -> None:
        if self.method not in ("rk4_events", "euler", "setvalued_euler",
                               "reference_adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (0.0 < self.step <= horizon):
            raise ValueError(f"step must lie in (0, {horizon}]")
        if not (0.0 < self.event_tol < self.step):
            raise ValueError("event_tol must be positive and below step")
        if self.max_event_bisections < 1:
            raise ValueError("max_event_bisections must be >= 1")
        if self.selection not in ("center", "random"):
            raise ValueError(f"unknown selection {self.selection!r}")


@dataclass(frozen=True)
class Trajectory:
    """Grid, states, node derivatives, and the event log of one run."""

    times: Array
    states: Array
    derivs: Array
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("trajectory needs at least one node")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory states must be finite")
        ev = tuple(self.events)
        if any(ev[i].time > ev[i + 1].time for i in range(len(ev) - 1)):
            raise ValueError("events must be sorted by time")
        object.__setattr__(self, "events", ev)

    @property
    def n(self) -> int:
        return self.states.shape[1]


def _rk4(fn, t: float, x: Array, dt: float, k1: Array) -> Array:
    k2 = fn(t + 0.5 * dt, x + (0.5 * dt) * k1)
    k3 = fn(t + 0.5 * dt, x + (0.5 * dt) * k2)
    k4 = fn(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _hermite(x0: Array, d0: Array, x1: Array, d1: Array,
             dt: float, s: float) -> Array:
    """Cubic dense output of one step at offset s in [0, dt]."""
    u = s / dt
    w = 1.0 - u
    return ((1.0 + 2.0 * u) * w * w) * x0 + (s * w * w) * d0 + \
        (u * u * (3.0 - 2.0 * u)) * x1 + (u * u * (s - dt)) * d1


def integrate_modified(model: RhsModel, pair: ViablePair, x0,
                       config: IntegratorConfig) -> Trajectory:
    """Fixed-step RK4 on the projected field with event splitting.

    After every step the tau-value sequence of each surface is scanned
    for crossings of the nearest jump levels; a crossing is localized in
    time to event_tol by bisection on the step's cubic dense output, the
    step is split at the event (integration restarts from the located
    state), and the event is logged.  Endpoints are exactly 0 and the
    horizon.  Identical inputs give bitwise identical trajectories.
    """
    config.validate(model.horizon)
    if config.method != "rk4_events":
        raise ValueError("integrate_modified requires method 'rk4_events'")
    x0v = as_state(x0, model.n)
    if pair.h(0.0, x0v) > 0.0:
        warnings.warn("starting point lies outside the region "
                      "(h(0, x0) > 0); run continues", RuntimeWarning)

    def ftilde(t: float, x: Array) -> Array:
        tp, xp = pair.p(t, x)
        return model.fn(tp, xp)

    T = model.horizon
    step = config.step
    surfaces = model.surfaces

    times = [0.0]
    states = [x0v]
    t, x = 0.0, x0v
    d = np.asarray(ftilde(t, x), dtype=float)
    derivs = [d]
    events: list[Event] = []
    taus = [float(s.tau(t, x)) for s in surfaces]

    def locate_event(t0: float, x0_: Array, d0: Array, x1: Array, d1: Array,
                     dt: float, surf_idx: int, level: float) -> tuple[float, Array]:
        # bisect on the step's cubic dense output: unlike re-integrated
        # partial steps (whose stages straddle the jump and make the map
        # s -> state(s) discontinuous), the interpolant is continuous in
        # s, so the bracket genuinely pins tau = level to event_tol
        surf = surfaces[surf_idx]
        f_lo = taus[surf_idx] - level
        lo, hi = 0.0, dt
        x_hi = x1
        for _ in range(config.max_event_bisections):
            if hi - lo <= config.event_tol:
                break
            mid = 0.5 * (lo + hi)
            x_mid = _hermite(x0_, d0, x1, d1, dt, mid)
            f_mid = float(surf.tau(t0 + mid, x_mid)) - level
            if f_mid == 0.0 or (f_mid < 0.0) == (f_lo < 0.0):
                lo = mid
                if f_mid == 0.0:
                    hi, x_hi = mid, x_mid
                    break
            else:
                hi, x_hi = mid, x_mid
        else:
            raise IntegrationError(
                f"event localization exceeded {config.max_event_bisections} "
                f"bisections on surface {surf_idx} level {level} "
                f"(bracket [{t0 + lo}, {t0 + hi}])")
        return hi, x_hi

    k = 0
    while t < T:
        k += 1
        t_target = T if k * step >= T - 1e-12 * T else k * step
        # containment of the evaluation point: p maps into R by construction
        tp, xp = pair.p(t, x)
        if pair.h(tp, xp) > _CONTAINMENT_TOL:
            raise IntegrationError(
                f"projected point left the region at t={t}: h={pair.h(tp, xp)}")
        while t < t_target:
            dt = t_target - t
            x_cand = _rk4(ftilde, t, x, dt, d)
            if not np.all(np.isfinite(x_cand)):
                raise IntegrationError(f"state went non-finite in step at t={t}")
            t_cand = t_target
            taus_cand = [float(s.tau(t_cand, x_cand)) for s in surfaces]

            # earliest crossing among surfaces (nearest levels only)
            hit: Optional[tuple[float, Array, int, float, int]] = None
            d_cand: Optional[Array] = None
            for si, surf in enumerate(surfaces):
                crossed = surf.levels.crossed(taus[si], taus_cand[si])[:3]
                if not crossed:
                    continue
                if d_cand is None:
                    d_cand = np.asarray(ftilde(t_cand, x_cand), dtype=float)
                c = crossed[0]
                s_ev, x_ev = locate_event(t, x, d, x_cand, d_cand, dt, si, c)
                direction = 1 if taus_cand[si] > taus[si] else -1
                if hit is None or s_ev < hit[0]:
                    hit = (s_ev, x_ev, si, float(c), direction)

            if hit is None:
                t, x = t_cand, x_cand
                taus = taus_cand
            else:
                s_ev, x_ev, si, c, direction = hit
                t_ev = t + s_ev
                if t_ev <= times[-1]:  # crossing indistinguishable from the node
                    t_ev = np.nextafter(times[-1], math.inf)
                events.append(Event(time=t_ev, surface=si, level=c,
                                    direction=direction))
                t, x = t_ev, x_ev
                taus = [float(s.tau(t, x)) for s in surfaces]
            times.append(t)
            states.append(x)
            d = np.asarray(ftilde(t, x), dtype=float)
            derivs.append(d)

    return Trajectory(times=np.array(times), states=np.vstack(states),
                      derivs=np.vstack(derivs), events=tuple(events))


def integrate_inclusion_euler(model: RhsModel, x0,
                              config: IntegratorConfig,
                              envelope_m: int = 32) -> Trajectory:
    """Explicit Euler realizing one selection of the envelope inclusion.

    Away from the declared surfaces the step direction is the plain
    branch value.  Whenever the current point sits within event_tol of a
    jump level, the direction is drawn from the sampled envelope at the
    point instead: 'center' takes the sample mean (an element of the
    sampled hull, yielding sliding-like motion), 'random' picks one
    sampled value (chattering selections; seed-dependent).  The recorded
    node derivatives are the selections actually taken.  With no declared
    surfaces the run coincides bitwise with plain Euler.
    """
    config.validate(model.horizon)
    if config.method not in ("euler", "setvalued_euler"):
        raise ValueError("integrate_inclusion_euler requires an euler method")
    x0v = as_state(x0, model.n)
    rng = np.random.default_rng(config.seed)
    eps_env = config.step

    T = model.horizon
    step = config.step
    times = [0.0]
    states = [x0v]
    derivs = []
    events: list[Event] = []
    t, x = 0.0, x0v
    taus = [float(s.tau(t, x)) for s in model.surfaces]

    k = 0
    while t < T:
        k += 1
        t_next = T if k * step >= T - 1e-12 * T else k * step
        z = None
        if (config.method == "setvalued_euler" and model.surfaces
                and surface_distance(model, t, x) < config.event_tol):
            env = envelope_samples(model, t, x, eps=eps_env, m=envelope_m,
                                   seed=config.seed)
            if config.selection == "center":
                z = env.points.mean(axis=0)
            else:
                z = env.points[int(rng.integers(len(env.points)))]
        if z is None:
            z = np.asarray(model.fn(t, x), dtype=float)
        derivs.append(z)
        x = x + (t_next - t) * z
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"state went non-finite at t={t_next}")
        t = t_next
        taus_new = [float(s.tau(t, x)) for s in model.surfaces]
        for si, surf in enumerate(model.surfaces):
            for c in surf.levels.crossed(taus[si], taus_new[si])[:3]:
                events.append(Event(time=t, surface=si, level=float(c),
                                    direction=1 if taus_new[si] > taus[si] else -1))
        taus = taus_new
        times.append(t)
        states.append(x)
    derivs.append(np.asarray(model.fn(t, x), dtype=float))

    return Trajectory(times=np.array(times), states=np.vstack(states),
                      derivs=np.vstack(derivs), events=tuple(events))


def reference_solution(model: RhsModel, x0, T: Optional[float] = None,
                       rel_tol: float = 1e-10, times=None) -> Trajectory:
    """High-accuracy adaptive Runge-Kutta oracle for continuous fields.

    Refuses models with declared surfaces: adaptive error control is only
    trustworthy for continuous right-hand sides.  Dense output is
    evaluated at the requested times (default: the solver's own grid).
    """
    if model.surfaces:
        raise ValueError("reference mode is for continuous fields only "
                         "(model declares surfaces)")
    x0v = as_state(x0, model.n)
    T = model.horizon if T is None else float(T)
    if not (0.0 < T <= model.horizon):
        raise ValueError(f"T must lie in (0, {model.horizon}]")

    sol = solve_ivp(lambda t, x: model.fn(t, x), (0.0, T), x0v,
                    method="DOP853", rtol=rel_tol,
                    atol=rel_tol * 1e-2, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"reference integration failed: {sol.message}")

    if times is None:
        ts = sol.t
        xs = sol.y.T
    else:
        ts = np.asarray(times, dtype=float)
        if np.any(ts < 0.0) or np.any(ts > T):
            raise ValueError("requested times outside [0, T]")
        xs = sol.sol(ts).T
    ds = np.vstack([model.fn(float(t), x) for t, x in zip(ts, xs)])
    return Trajectory(times=ts.copy(), states=xs.copy(), derivs=ds)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(path: str, traj: Trajectory, model: RhsModel,
                         pair: ViablePair) -> None:
    """CSV with columns t, x1..xn, h(t, x(t)), surface_distance."""
    n = traj.n
    header = "t," + ",".join(f"x{i + 1}" for i in range(n)) + ",h,surface_distance"
    rows = [header]
    for t, x in zip(traj.times, traj.states):
        t = float(t)
        hval = pair.h(t, x)
        sdist = surface_distance(model, t, x)
        cells = [repr(t)] + [repr(float(c)) for c in x] + [repr(hval), repr(sdist)]
        rows.append(",".join(cells))
    _atomic_write(path, "\n".join(rows) + "\n")


def write_events_file(path: str, traj: Trajectory) -> None:
    """Sidecar text file: one 'time surface level direction' line per event."""
    lines = ["# event log: time surface level direction"]
    for ev in traj.events:
        lines.append(f"{ev.time!r} {ev.surface} {ev.level!r} {ev.direction:+d}")
    _atomic_write(path, "\n".join(lines) + "\n")
