"""Closed-form transport between linear densities and per-cell-pair composition.

The monotone map between two 1-d densities is the quantile map
``m(x) = Q_target(P_source(x))``; between product densities the optimal map
acts coordinate-wise and the quadratic cost splits into a sum of per-axis
terms.  Costs use the ``0.5 * |y - x|^2`` convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .density1d import LinearDensity1D, linear_cdf, linear_quantile
from .geometry import CellIndex

DEFAULT_QUADRATURE_ORDER = 32


@lru_cache(maxsize=None)
def _leggauss(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def transport_1d(x, src_left, src_right, src_slope, tgt_left, tgt_right, tgt_slope):
    """Quantile map between two linear densities, broadcasting over arrays."""
    u = linear_cdf(x, src_left, src_right, src_slope)
    u = np.clip(u, 0.0, 1.0)
    return linear_quantile(u, tgt_left, tgt_right, tgt_slope, validate=False)


@dataclass(frozen=True)
class Map1D:
    """Monotone optimal map from one linear density to another."""

    source: LinearDensity1D
    target: LinearDensity1D

    def __call__(self, x):
        return transport_1d(
            x,
            self.source.left, self.source.right, self.source.slope,
            self.target.left, self.target.right, self.target.slope,
        )


def map_1d(source: LinearDensity1D, target: LinearDensity1D) -> Map1D:
    return Map1D(source, target)


def cost_1d(
    source: LinearDensity1D,
    target: LinearDensity1D,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> float:
    """Transport cost ``integral of 0.5*(m(x)-x)^2 * source(x)`` by Gauss-Legendre."""
    nodes, weights = _leggauss(order)
    half = 0.5 * source.width
    x = source.center + half * nodes
    y = transport_1d(
        x,
        source.left, source.right, source.slope,
        target.left, target.right, target.slope,
    )
    dens = (1.0 + source.slope * (x - source.center)) / source.width
    return float(half * np.dot(weights, 0.5 * (y - x) ** 2 * dens))


def pair_costs_1d(
    src_left, src_right, src_slope,
    tgt_left, tgt_right, tgt_slope,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> np.ndarray:
    """Vectorized cost_1d over parallel arrays of density parameters."""
    nodes, weights = _leggauss(order)
    sl = np.asarray(src_left, dtype=float)[:, None]
    sr = np.asarray(src_right, dtype=float)[:, None]
    sa = np.asarray(src_slope, dtype=float)[:, None]
    tl = np.asarray(tgt_left, dtype=float)[:, None]
    tr = np.asarray(tgt_right, dtype=float)[:, None]
    ta = np.asarray(tgt_slope, dtype=float)[:, None]
    mid = 0.5 * (sl + sr)
    half = 0.5 * (sr - sl)
    x = mid + half * nodes[None, :]
    y = transport_1d(x, sl, sr, sa, tl, tr, ta)
    dens = (1.0 + sa * (x - mid)) / (sr - sl)
    return (0.5 * (y - x) ** 2 * dens) @ weights * half[:, 0]


@dataclass(frozen=True, eq=False)
class CellDensity:
    """One mixture component: a weight and one linear density per axis."""

    cell: CellIndex
    weight: float
    factors: tuple[LinearDensity1D, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.weight < 0:
            raise ValueError("cell weight must be nonnegative")

    @property
    def dim(self) -> int:
        return len(self.factors)

    def density(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        out = np.ones(pts.shape[0])
        for l, f in enumerate(self.factors):
            out *= f.density(pts[:, l])
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Inverse-CDF sampling, one independent draw per axis."""
        cols = [f.quantile(rng.random(n)) for f in self.factors]
        return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class CellPairMap:
    """Coordinate-wise optimal map between two product densities."""

    maps: tuple[Map1D, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))

    @property
    def dim(self) -> int:
        return len(self.maps)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[None, :]
        out = np.stack([m(pts[:, l]) for l, m in enumerate(self.maps)], axis=1)
        return out[0] if squeeze else out


def _check_dims(source: CellDensity, target: CellDensity):
    if source.dim != target.dim:
        raise ValueError(f"dimension mismatch: {source.dim} vs {target.dim}")


def cell_pair_cost(
    source: CellDensity,
    target: CellDensity,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> float:
    """Transport cost between product densities: the sum of per-axis 1-d costs."""
    _check_dims(source, target)
    return float(
        sum(cost_1d(s, t, order) for s, t in zip(source.factors, target.factors))
    )


def cell_pair_map(source: CellDensity, target: CellDensity) -> CellPairMap:
    _check_dims(source, target)
    return CellPairMap(tuple(map_1d(s, t) for s, t in zip(source.factors, target.factors)))
