"""Sampled Krasovskij envelopes and support-function queries.

The envelope of f at (t, x) is the intersection over eps > 0 of the
closed convex hulls of f(t, B_eps(x)).  We approximate it by evaluating
f at nested low-discrepancy point sets of shrinking balls and answering
linear support queries over the samples: the support of a convex hull in
a direction equals the support of its generators, so the hull is never
materialized.

Nesting is structural: the sample set reported for radius eps_j is the
union of the point sets of all radii <= eps_j (every argument lies inside
the eps_j ball), so support intervals shrink monotonically with eps by
construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rhs_model import RhsModel
from .sampling import unit_directions

Array = np.ndarray

# radius multipliers cycled over the shared directions inside one ball
_RADIUS_CYCLE = (1.0, 0.5, 0.25)


@dataclass(frozen=True)
class EpsSchedule:
    """Strictly decreasing ball radii eps0 * factor^j, j = 0..depth-1."""

    eps0: float = 1e-2
    factor: float = 0.5
    depth: int = 6

    def __post_init__(self):
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if not (0.0 < self.factor < 1.0):
            raise ValueError("factor must lie in (0, 1)")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def radii(self) -> list[float]:
        return [self.eps0 * self.factor ** j for j in range(self.depth)]


@dataclass(frozen=True)
class EnvelopeSample:
    """f-values sampled at the center and at points of one eps-ball."""

    eps: float
    points: Array  # (m, n) exact eval outputs, row 0 is the center value


@dataclass(frozen=True)
class SupportInterval:
    """Estimated [min, max] of <v, z> over the envelope at the deepest radius.

    `levels` reports the per-radius sequence (eps, lower, upper) so callers
    can inspect convergence; m and eps are recorded because the estimate is
    only as good as the sample that produced it.
    """

    lower: float
    upper: float
    eps: float
    m: int
    levels: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("support interval with lower > upper")


def _ball_args(x: Array, eps: float, m: int, seed: int) -> Array:
    """Center plus m-1 direction points of the closed eps-ball around x."""
    n = x.shape[0]
    if m == 1:
        return x[None, :]
    dirs = unit_directions(n, m - 1, seed=seed)
    scales = np.array([_RADIUS_CYCLE[i % len(_RADIUS_CYCLE)] for i in range(m - 1)])
    return np.vstack([x[None, :], x[None, :] + eps * scales[:, None] * dirs])


def envelope_samples(model: RhsModel, t: float, x, eps: float, m: int,
                     seed: int = 0) -> EnvelopeSample:
    """Evaluate f at x and at m-1 low-discrepancy points of B_eps(x)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    xv = np.asarray(x, dtype=float)
    args = _ball_args(xv, eps, m, seed)
    vals = model.eval_batch(t, args)
    return EnvelopeSample(eps=eps, points=vals)


def _pair_products(vals: Array, v: Array, n: int) -> Array:
    """<v, z> per sample row; a v of length n+1 pairs as <v, (1, z)>."""
    if v.shape[0] == n:
        return vals @ v
    if v.shape[0] == n + 1:
        return v[0] + vals @ v[1:]
    raise ValueError(f"direction has length {v.shape[0]}, expected {n} or {n + 1}")


def support_interval(model: RhsModel, t: float, x, v,
                     schedule: EpsSchedule = EpsSchedule(),
                     m: int = 64, seed: int = 0) -> SupportInterval:
    """Support bounds of <v, z> over the sampled envelope at (t, x).

    A direction of length n pairs with z directly; length n+1 pairs with
    (1, z), the form taken by the region and transversality functionals.
    The reported interval is the deepest-radius one; shallower radii in
    `levels` include all deeper samples, so the sequence is nested.
    """
    if m < 1:
        raise ValueError("empty sample: m must be >= 1")
    vv = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(vv)):
        raise ValueError("direction must be finite")
    xv = np.asarray(x, dtype=float)
    radii = schedule.radii()

    # one batched evaluation for all radii: depth*(m-1) ball points + center
    blocks = [xv[None, :]]
    for eps in radii:
        blocks.append(_ball_args(xv, eps, m, seed)[1:])
    args = np.vstack(blocks)
    vals = model.eval_batch(t, args)
    prods = _pair_products(vals, vv, model.n)

    center = float(prods[0])
    per_level = prods[1:].reshape(len(radii), -1) if m > 1 else \
        np.empty((len(radii), 0))

    # cumulative from the deepest level up: level j covers all radii <= eps_j
    levels: list[tuple[float, float, float]] = []
    lo_run, up_run = center, center
    for j in range(len(radii) - 1, -1, -1):
        if per_level.shape[1]:
            lo_run = min(lo_run, float(per_level[j].min()))
            up_run = max(up_run, float(per_level[j].max()))
        levels.append((radii[j], lo_run, up_run))
    levels.reverse()

    deep_eps, deep_lo, deep_up = levels[-1]
    return SupportInterval(lower=deep_lo, upper=deep_up, eps=deep_eps, m=m,
                           levels=tuple(levels))


def support_upper(model: RhsModel, t: float, x, v,
                  schedule: EpsSchedule = EpsSchedule(),
                  m: int = 64, seed: int = 0) -> float:
    """Upper support bound only; what the one-sided region checks consume."""
    return support_interval(model, t, x, v, schedule=schedule, m=m, seed=seed).upper
