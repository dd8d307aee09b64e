"""Built-in benchmark models and regions.

Two presets ship with the tool:

* ``ball_example`` -- a planar system whose first component is forced by a
  bounded function phi that jumps on a lattice of values of
  tau(t,x,y) = x^2 + y^2 + alpha*t.  Solutions are localized in the unit
  ball; the jump surfaces are crossed transversally once |alpha| exceeds
  twice the bound M on |x*z1 + y*z2| over the region.

* ``band_example`` -- the scalar equation x' = -x^2 - x + 2t + 1 localized
  between the lower curve alpha(t) = t and an upper curve that jumps from
  1 to 2 at t = 1/2 (handled by the hand-built band45 pair).

Custom models are registered here; the scenario format deliberately has
no expression language.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .regions import PiecewiseFn, ViablePair, ball_pair, band_pair, example_band45_pair
from .rhs_model import ExplicitLevels, LatticeLevels, RhsModel, SurfaceSpec, factored_model

Array = np.ndarray

PHI_LO = 0.3
PHI_HI = 0.7


def phi(s, q: int = 10):
    """Bounded forcing with values in {0.3, 0.7}, jumping at every k/q.

    Right-continuous by the floor convention: the branch for s in
    [k/q, (k+1)/q) applies at s = k/q exactly.
    """
    if np.ndim(s) == 0:
        return PHI_LO + 0.4 * (math.floor(q * s) % 2)
    return PHI_LO + 0.4 * (np.floor(q * np.asarray(s, dtype=float)) % 2)


def ball_example_model(alpha: float, q: int = 10, box_halfwidth: float = 3.0,
                       horizon: float = 1.0) -> RhsModel:
    """Planar field with a lattice-discontinuous forcing on the first axis.

    x' = x^3 + y - 3x + phi(x^2 + y^2 + alpha*t)
    y' = y^3 - x - 3y * exp(|x|)

    The jump levels are the lattice {k/q} truncated to the tau-range of
    the scenario box [0,T] x [-b, b]^2, which is every level a confined
    trajectory or checker can meet.
    """
    alpha = float(alpha)
    q = int(q)
    if q < 1:
        raise ValueError("q must be a positive integer")
    b2 = 2.0 * box_halfwidth * box_halfwidth
    lo = min(0.0, alpha * horizon) - 1.0 / q
    hi = b2 + max(0.0, alpha * horizon) + 1.0 / q

    def tau(t: float, x: Array):
        if x.ndim == 1:
            return x[0] * x[0] + x[1] * x[1] + alpha * t
        return x[..., 0] ** 2 + x[..., 1] ** 2 + alpha * t

    def tau_grad(t: float, x: Array):
        return alpha, np.array([2.0 * x[0], 2.0 * x[1]])

    surface = SurfaceSpec(tau=tau, grad=tau_grad,
                          levels=LatticeLevels(step=1.0 / q, lo=lo, hi=hi),
                          name="tau=x^2+y^2+alpha*t")

    def g(s, x):
        return phi(s, q)

    def outer(t: float, gvals, x: Array) -> Array:
        ph = gvals[0]
        if x.ndim == 1:
            xv, yv = x[0], x[1]
            return np.array([
                xv * xv * xv + yv - 3.0 * xv + ph,
                yv * yv * yv - xv - 3.0 * yv * math.exp(abs(xv)),
            ])
        xv, yv = x[..., 0], x[..., 1]
        return np.stack([
            xv ** 3 + yv - 3.0 * xv + ph,
            yv ** 3 - xv - 3.0 * yv * np.exp(np.abs(xv)),
        ], axis=-1)

    return factored_model(n=2, horizon=horizon, outer=outer,
                          inners=[(g, surface)],
                          name=f"ball_example(alpha={alpha}, q={q})")


@lru_cache(maxsize=8)
def ball_example_bound(grid_points: int = 1201, boundary_points: int = 200_000) -> float:
    """Grid maximum M of |x*z1 + y*z2| over the unit-ball region.

    The forcing is worst-cased over its envelope [0.3, 0.7] (the scalar
    product is affine in phi, so the extremes are attained at the
    endpoint values), and the inner product is time-independent:

        x*f1 + y*f2 = x^4 - 3x^2 + y^4 - 3y^2*exp(|x|) + x*phi.

    Dense grid over the disc interior plus a dense boundary circle; well
    over 1e6 evaluation points at the default sizes.
    """
    xs = np.linspace(-1.0, 1.0, grid_points)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    mask = gx * gx + gy * gy <= 1.0
    x, y = gx[mask], gy[mask]

    theta = np.linspace(0.0, 2.0 * np.pi, boundary_points, endpoint=False)
    x = np.concatenate([x, np.cos(theta)])
    y = np.concatenate([y, np.sin(theta)])

    a = x ** 4 - 3.0 * x ** 2 + y ** 4 - 3.0 * y ** 2 * np.exp(np.abs(x))
    worst = np.maximum(np.abs(a + PHI_LO * x), np.abs(a + PHI_HI * x))
    return float(worst.max())


def band_example_model(horizon: float = 1.0) -> RhsModel:
    """Scalar continuous field x' = -x^2 - x + 2t + 1; no jump surfaces."""
    def fn(t: float, x: Array) -> Array:
        if x.ndim == 1:
            xi = x[0]
            return np.array([-xi * xi - xi + 2.0 * t + 1.0])
        xi = x[..., 0]
        return (-xi * xi - xi + 2.0 * t + 1.0)[..., None]

    return RhsModel(n=1, horizon=horizon, fn=fn, surfaces=(),
                    name="band_example")


def sign_model(gain: float = -1.0, level: float = 0.0,
               horizon: float = 1.0) -> RhsModel:
    """Scalar f(t,x) = gain * sgn(x - level) with sgn(0) = +1.

    The right-continuous branch convention makes the value at the jump
    level itself the one from the upper branch.
    """
    def fn(t: float, x: Array) -> Array:
        if x.ndim == 1:
            return np.array([gain if x[0] >= level else -gain])
        s = np.where(x[..., 0] >= level, gain, -gain)
        return s[..., None]

    def tau(t: float, x: Array):
        if x.ndim == 1:
            return x[0]
        return x[..., 0]

    def tau_grad(t: float, x: Array):
        return 0.0, np.array([1.0])

    surf = SurfaceSpec(tau=tau, grad=tau_grad,
                       levels=ExplicitLevels((level,)), name="x")
    return RhsModel(n=1, horizon=horizon, fn=fn, surfaces=(surf,),
                    sup_bound=abs(gain), name=f"sign(gain={gain})")


# ---------------------------------------------------------------------------
# Token grammars for scenarios (deliberately tiny; no expression language)
# ---------------------------------------------------------------------------

def curve_from_tokens(spec: str) -> PiecewiseFn:
    """Parse a curve preset: 'constant c' | 'linear c0 c1' |
    'step v0 v1 t_jump' | 'ramp_cap c0 c1 cap'."""
    parts = spec.split()
    if not parts:
        raise ValueError("empty curve spec")
    kind, args = parts[0], [float(p) for p in parts[1:]]
    try:
        if kind == "constant" and len(args) == 1:
            return PiecewiseFn.constant(*args)
        if kind == "linear" and len(args) == 2:
            return PiecewiseFn.linear(*args)
        if kind == "step" and len(args) == 3:
            return PiecewiseFn.step(*args)
        if kind == "ramp_cap" and len(args) == 3:
            return PiecewiseFn.ramp_cap(*args)
    except TypeError:
        pass
    raise ValueError(f"unrecognized curve spec {spec!r}")


def parse_alpha(token: str, bound_m: float) -> float:
    """Resolve an alpha token: a float, or 'M', 'kM', 'kM+c', 'kM-c'.

    The restricted form lets scenarios and sweeps reference the computed
    bound M without an expression language.
    """
    token = token.strip()
    try:
        return float(token)
    except ValueError:
        pass
    import re
    m = re.fullmatch(r"([+-]?\d*\.?\d*)\s*M\s*(?:([+-])\s*(\d+\.?\d*))?", token)
    if not m:
        raise ValueError(f"cannot parse alpha token {token!r}")
    coef = m.group(1)
    k = float(coef) if coef not in ("", "+", "-") else float(coef + "1")
    val = k * bound_m
    if m.group(2):
        off = float(m.group(3))
        val = val + off if m.group(2) == "+" else val - off
    return val


MODEL_PRESETS: dict[str, Callable[..., RhsModel]] = {
    "ball_example": ball_example_model,
    "band_example": band_example_model,
}


def region_from_spec(kind: str, params: dict, horizon: float) -> ViablePair:
    """Build a region preset: ball | example_band45 | band."""
    if kind == "ball":
        return ball_pair(float(params.get("r", 1.0)), n=int(params.get("n", 2)))
    if kind == "example_band45":
        return example_band45_pair()
    if kind == "band":
        alpha = curve_from_tokens(params["alpha_fn"])
        beta = curve_from_tokens(params["beta_fn"])
        return band_pair(alpha, beta, horizon=horizon)
    raise ValueError(f"unknown region kind {kind!r}")
