"""Deterministic low-discrepancy samplers shared by the checkers.

Everything here is seeded and reproducible: the same (seed, m) always
yields the same points, and the first m points of a sampler are a prefix
of the first m' > m points, which makes sampled bounds monotone in m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

Array = np.ndarray


def halton(dim: int, m: int, seed: int = 0) -> Array:
    """First m points of a scrambled Halton sequence in [0,1)^dim."""
    eng = qmc.Halton(d=dim, scramble=True, seed=seed)
    return eng.random(m)


_DIRECTION_CACHE: dict[tuple[int, int, int], Array] = {}


def unit_directions(n: int, count: int, seed: int = 0) -> Array:
    """`count` unit vectors in R^n from a Halton-Gaussian map, cached."""
    key = (n, count, seed)
    cached = _DIRECTION_CACHE.get(key)
    if cached is not None:
        return cached
    u = halton(n, count, seed=seed)
    z = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    if n == 1:
        d = np.sign(z)
        d[d == 0.0] = 1.0
    else:
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        d = z / norms
    _DIRECTION_CACHE[key] = d
    return d


@dataclass(frozen=True)
class BoxSampler:
    """Uniform low-discrepancy points of a box in (t, x) space.

    bounds: sequence of (lo, hi), time axis first, then the n state axes.
    """

    bounds: tuple[tuple[float, float], ...]
    seed: int = 0

    def sample(self, m: int) -> tuple[Array, Array]:
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        pts = lo + (hi - lo) * halton(len(self.bounds), m, seed=self.seed)
        return pts[:, 0], pts[:, 1:]

    def contains(self, ts: Array, xs: Array) -> Array:
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        pts = np.column_stack([ts, xs])
        tol = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)


@dataclass(frozen=True)
class BallSampler:
    """Points (t, x) with x in the closed ball of given radius.

    Rejection from the bounding box; rejection preserves the prefix
    property, so nested sample sets stay nested.
    """

    radius: float
    t_range: tuple[float, float]
    n: int = 2
    center: Optional[Array] = None
    seed: int = 0

    def sample(self, m: int) -> tuple[Array, Array]:
        c = np.zeros(self.n) if self.center is None else np.asarray(self.center, float)
        ts = np.empty(m)
        xs = np.empty((m, self.n))
        got = 0
        offset = 0
        while got < m:
            draw = max(2 * (m - got), 64)
            u = halton(1 + self.n, offset + draw, seed=self.seed)[offset:]
            offset += draw
            t = self.t_range[0] + (self.t_range[1] - self.t_range[0]) * u[:, 0]
            x = c + self.radius * (2.0 * u[:, 1:] - 1.0)
            keep = np.linalg.norm(x - c, axis=1) <= self.radius
            take = min(int(keep.sum()), m - got)
            ts[got:got + take] = t[keep][:take]
            xs[got:got + take] = x[keep][:take]
            got += take
        return ts, xs

    def contains(self, ts: Array, xs: Array) -> Array:
        c = np.zeros(self.n) if self.center is None else np.asarray(self.center, float)
        ok_t = (ts >= self.t_range[0] - 1e-12) & (ts <= self.t_range[1] + 1e-12)
        ok_x = np.linalg.norm(xs - c, axis=1) <= self.radius * (1 + 1e-12)
        return ok_t & ok_x


@dataclass(frozen=True)
class SphereSampler:
    """Points (t, x) with ||x|| exactly r (boundary samples)."""

    radius: float
    t_range: tuple[float, float]
    n: int = 2
    seed: int = 0

    def sample(self, m: int) -> tuple[Array, Array]:
        u = halton(1, m, seed=self.seed + 1)[:, 0]
        ts = self.t_range[0] + (self.t_range[1] - self.t_range[0]) * u
        xs = self.radius * unit_directions(self.n, m, seed=self.seed)
        return ts, xs

    def contains(self, ts: Array, xs: Array) -> Array:
        ok_t = (ts >= self.t_range[0] - 1e-12) & (ts <= self.t_range[1] + 1e-12)
        ok_x = np.abs(np.linalg.norm(xs, axis=1) - self.radius) <= 1e-9 * max(self.radius, 1.0)
        return ok_t & ok_x


@dataclass
class RegionComplementSampler:
    """Points of the complement {h > 0} inside a scenario box.

    Rejection-samples the box, keeping points with h > 0 that stay at
    least `seam_tol` away from the pair's gradient seams (where declared).
    Tracks how many otherwise-valid draws were discarded for sitting on a
    seam, so checkers can flag a sampler that fights its region.
    """

    pair: object  # regions.ViablePair
    box: tuple[tuple[float, float], ...]
    seed: int = 0
    seam_tol: float = 1e-3
    max_tries_factor: int = 500
    seam_hits: int = 0

    def sample(self, m: int) -> tuple[Array, Array]:
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        dim = len(self.box)
        ts = np.empty(m)
        xs = np.empty((m, dim - 1))
        got = 0
        offset = 0
        budget = self.max_tries_factor * m
        self.seam_hits = 0
        while got < m:
            if offset > budget:
                raise RuntimeError(
                    f"complement sampler exhausted {budget} draws for {m} points; "
                    "box may not intersect the complement")
            draw = max(2 * (m - got), 128)
            u = halton(dim, offset + draw, seed=self.seed)[offset:]
            offset += draw
            pts = lo + (hi - lo) * u
            for row in pts:
                t, x = float(row[0]), row[1:]
                if self.pair.h(t, x) <= 0.0:
                    continue
                if self.pair.seam_distance is not None and \
                        self.pair.seam_distance(t, x) < self.seam_tol:
                    self.seam_hits += 1
                    continue
                ts[got] = t
                xs[got] = x
                got += 1
                if got == m:
                    break
        return ts, xs

    def contains(self, ts: Array, xs: Array) -> Array:
        return np.array([self.pair.h(float(t), x) > 0.0 for t, x in zip(ts, xs)])


@dataclass
class RegionSampler:
    """Points of the region {h <= 0} inside a scenario box (rejection)."""

    pair: object
    box: tuple[tuple[float, float], ...]
    seed: int = 0
    max_tries_factor: int = 500

    def sample(self, m: int) -> tuple[Array, Array]:
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        dim = len(self.box)
        ts = np.empty(m)
        xs = np.empty((m, dim - 1))
        got = 0
        offset = 0
        budget = self.max_tries_factor * m
        while got < m:
            if offset > budget:
                raise RuntimeError(
                    f"region sampler exhausted {budget} draws for {m} points")
            draw = max(2 * (m - got), 128)
            u = halton(dim, offset + draw, seed=self.seed)[offset:]
            offset += draw
            pts = lo + (hi - lo) * u
            for row in pts:
                t, x = float(row[0]), row[1:]
                if self.pair.h(t, x) <= 0.0:
                    ts[got] = t
                    xs[got] = x
                    got += 1
                    if got == m:
                        break
        return ts, xs

    def contains(self, ts: Array, xs: Array) -> Array:
        return np.array([self.pair.h(float(t), x) <= 0.0 for t, x in zip(ts, xs)])
