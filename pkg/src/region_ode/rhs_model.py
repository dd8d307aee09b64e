"""Right-hand sides that may jump across declared hyper-surfaces.

A model holds a vector field f : [0,T] x R^n -> R^n together with the
surfaces tau(t,x) = c (c running over a finite level set) across which f
is allowed to be discontinuous.  Away from all declared levels the field
is continuous; on a level the evaluation follows a fixed right-continuous
branch convention, so f is single-valued everywhere and evaluation is
deterministic.

Fields can be given directly or in factored form
f(t,x) = F(t, g_1(tau_1(t,x), x), ..., g_N(tau_N(t,x), x), x),
where each scalar g_i carries the jumps of f in its first argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Array = np.ndarray


class EvaluationError(RuntimeError):
    """A model produced a non-finite value (model bug, not user error)."""


def as_state(x, n: int) -> Array:
    """Validate and convert `x` to a finite float vector of dimension n."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"state has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"state contains non-finite components: {arr}")
    return arr


# ---------------------------------------------------------------------------
# Level sets
# ---------------------------------------------------------------------------

_MAX_LEVELS = 1_000_000


@dataclass(frozen=True)
class ExplicitLevels:
    """A finite, sorted, duplicate-free list of jump levels."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if list(vals) != sorted(set(vals)):
            raise ValueError("levels must be sorted and duplicate-free")
        object.__setattr__(self, "values", vals)

    def enumerate(self) -> Array:
        return np.asarray(self.values, dtype=float)

    def distance(self, v: float) -> float:
        if not self.values:
            return math.inf
        return min(abs(v - c) for c in self.values)

    def crossed(self, a: float, b: float) -> list[float]:
        """Levels passed when the tau-value moves from a to b (b inclusive)."""
        if a == b:
            return []
        lo, hi = (a, b) if a < b else (b, a)
        hit = [c for c in self.values if lo < c <= hi] if a < b else \
              [c for c in reversed(self.values) if lo <= c < hi]
        return hit


@dataclass(frozen=True)
class LatticeLevels:
    """The levels {k*step : k integer, lo <= k*step <= hi}, step > 0.

    A finite stand-in for a dense null set of jump values: only the
    levels inside [lo, hi] can ever be met by a trajectory confined to
    the scenario box, so the truncation is exact for the checks.
    """

    step: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("lattice step must be positive")
        if self.hi < self.lo:
            raise ValueError("empty lattice range")
        if (self.hi - self.lo) / self.step > _MAX_LEVELS:
            raise ValueError("lattice enumeration would exceed 1e6 levels")

    def _k_range(self) -> tuple[int, int]:
        k0 = math.ceil(self.lo / self.step - 1e-12)
        k1 = math.floor(self.hi / self.step + 1e-12)
        return k0, k1

    def enumerate(self) -> Array:
        k0, k1 = self._k_range()
        if k1 < k0:
            return np.empty(0)
        return np.arange(k0, k1 + 1) * self.step

    def distance(self, v: float) -> float:
        k0, k1 = self._k_range()
        if k1 < k0:
            return math.inf
        k = min(max(round(v / self.step), k0), k1)
        return abs(v - k * self.step)

    def crossed(self, a: float, b: float) -> list[float]:
        if a == b:
            return []
        k0, k1 = self._k_range()
        if a < b:
            ka = max(math.floor(a / self.step) + 1, k0)
            kb = min(math.floor(b / self.step + 1e-15), k1)
            return [k * self.step for k in range(ka, kb + 1)]
        ka = min(math.ceil(a / self.step) - 1, k1)
        kb = max(math.ceil(b / self.step - 1e-15), k0)
        return [k * self.step for k in range(ka, kb - 1, -1)]


LevelSet = ExplicitLevels | LatticeLevels


# ---------------------------------------------------------------------------
# Surfaces and models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceSpec:
    """A C^1 surface function tau with its jump levels.

    `tau(t, x)` accepts x of shape (n,) or (batch, n) and broadcasts.
    `grad(t, x)` returns (dtau/dt, grad_x tau) at a single point.
    """

    tau: Callable[[float, Array], float | Array]
    grad: Callable[[float, Array], tuple[float, Array]]
    levels: LevelSet
    name: str = ""


@dataclass(frozen=True)
class RhsModel:
    """Immutable field description; all operations are pure functions.

    `fn(t, x)` must accept x of shape (n,) or (batch, n) and return the
    matching shape.  It must be the single-valued right-continuous branch
    selection, so repeated evaluation at identical arguments returns
    identical bits.
    """

    n: int
    horizon: float
    fn: Callable[[float, Array], Array]
    surfaces: tuple[SurfaceSpec, ...] = ()
    sup_bound: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("state dimension must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "surfaces", tuple(self.surfaces))

    # internal fast paths: no argument validation, output checked by caller
    def __call__(self, t: float, x: Array) -> Array:
        return self.fn(t, x)

    def eval_batch(self, t: float, xs: Array) -> Array:
        """Evaluate at a batch of states, shape (m, n) -> (m, n)."""
        out = np.asarray(self.fn(t, xs), dtype=float)
        if out.shape != xs.shape:
            raise EvaluationError(
                f"model {self.name!r} returned shape {out.shape} for batch {xs.shape}")
        bad = ~np.isfinite(out)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise EvaluationError(
                f"model {self.name!r}: non-finite component {j} at t={t}, x={xs[i]}")
        return out


def factored_model(n: int,
                   horizon: float,
                   outer: Callable[[float, list, Array], Array],
                   inners: Sequence[tuple[Callable[[float | Array, Array], float | Array],
                                          SurfaceSpec]],
                   extra_surfaces: Sequence[SurfaceSpec] = (),
                   sup_bound: Optional[float] = None,
                   name: str = "") -> RhsModel:
    """Build f(t,x) = outer(t, [g_i(tau_i(t,x), x)], x).

    Each inner pair (g_i, surface_i) contributes the scalar
    g_i(tau_i(t,x), x); the g_i carry all jumps, the outer map is
    continuous, so the discontinuity set of f is exactly the union of
    the declared surface level sets.
    """
    inners = tuple(inners)

    def fn(t: float, x: Array) -> Array:
        gvals = [g(surf.tau(t, x), x) for g, surf in inners]
        return outer(t, gvals, x)

    surfaces = tuple(s for _, s in inners) + tuple(extra_surfaces)
    return RhsModel(n=n, horizon=horizon, fn=fn, surfaces=surfaces,
                    sup_bound=sup_bound, name=name)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def eval_rhs(model: RhsModel, t: float, x) -> Array:
    """Evaluate the branch selection of f at (t, x), fully validated."""
    if not (0.0 <= t <= model.horizon):
        raise ValueError(f"t={t} outside [0, {model.horizon}]")
    xv = as_state(x, model.n)
    out = np.asarray(model.fn(t, xv), dtype=float)
    if out.shape != (model.n,):
        raise EvaluationError(
            f"model {model.name!r} returned shape {out.shape}, expected ({model.n},)")
    for j in range(model.n):
        if not math.isfinite(out[j]):
            raise EvaluationError(
                f"model {model.name!r}: non-finite component {j} at t={t}, x={xv}")
    return out


def surface_distance(model: RhsModel, t: float, x) -> float:
    """Distance from (t,x) to the nearest declared jump level.

    min over surfaces of min over levels of |tau(t,x) - c|; +inf when the
    model declares no surfaces (empty minimum convention).
    """
    if not model.surfaces:
        return math.inf
    xv = np.asarray(x, dtype=float)
    best = math.inf
    for surf in model.surfaces:
        d = surf.levels.distance(float(surf.tau(t, xv)))
        if d < best:
            best = d
    return best


def empirical_bound(model: RhsModel, sampler, m: int,
                    functional: Optional[Callable[[float, Array], Array]] = None) -> float:
    """Sampled sup-norm bound of f (or of |<v(t,x), f(t,x)>|) over a compact set.

    `sampler` yields deterministic points of the set K (see sampling module);
    the first m points of a sampler are a prefix of the first m' > m, so the
    bound is monotone nondecreasing in m.  When `functional` is given it maps
    (t, x) to a direction v and the bound taken is max |<v, f>|.
    """
    if m < 1:
        raise ValueError("sample count must be >= 1")
    ts, xs = sampler.sample(m)
    inside = sampler.contains(ts, xs)
    if not np.all(inside):
        k = int(np.argmin(inside))
        raise ValueError(f"sampler produced a point outside K: t={ts[k]}, x={xs[k]}")
    best = 0.0
    for t, x in zip(ts, xs):
        fx = model.fn(float(t), x)
        if functional is None:
            val = float(np.linalg.norm(fx))
        else:
            val = abs(float(np.dot(functional(float(t), x), fx)))
        if val > best:
            best = val
    return best


def estimate_lipschitz(model: RhsModel, box, seed: int = 0, m: int = 1000,
                       safety: float = 10.0, min_surface_dist: float = 1e-3) -> float:
    """Crude off-surface Lipschitz constant from random secant slopes.

    Samples m secant pairs inside `box` (list of (lo, hi) per coordinate,
    time first), keeps those with both ends off the declared surfaces, and
    returns safety * max slope.  Used to size continuity tolerances; not a
    certified bound.
    """
    from . import sampling  # local import to avoid a cycle at module load

    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    best = 0.0
    for _ in range(m):
        p = lo + (hi - lo) * rng.random(len(box))
        q = p + (hi - lo) * 1e-4 * (rng.random(len(box)) - 0.5)
        q = np.minimum(np.maximum(q, lo), hi)
        t0, x0 = float(p[0]), p[1:]
        t1, x1 = float(q[0]), q[1:]
        if (surface_distance(model, t0, x0) < min_surface_dist or
                surface_distance(model, t1, x1) < min_surface_dist):
            continue
        dx = math.sqrt(float(np.sum((q - p) ** 2)))
        if dx == 0.0:
            continue
        df = float(np.linalg.norm(model.fn(t1, x1) - model.fn(t0, x0)))
        slope = df / dx
        if slope > best:
            best = slope
    return safety * max(best, 1.0)
