"""One-dimensional linear densities on intervals: fitting, CDF and quantile.

A density here is ``(1 + a*(x - center)) / width`` on ``[left, right]`` and
zero elsewhere.  The slope is bounded by ``|a| <= 2/width`` so the density
stays nonnegative at both endpoints; the form integrates to one for any
admissible slope.  Slope zero recovers the uniform density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this magnitude the quadratic CDF inversion degrades; use the uniform
# formulas instead (they agree to machine precision at slope -> 0).
SLOPE_EPS = 1e-14


def max_slope(left: float, right: float) -> float:
    """Largest slope magnitude keeping the density nonnegative on [left, right]."""
    return 2.0 / (right - left)


def linear_cdf(x, left, right, slope):
    """CDF of the linear density, clamped to the support. Broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(right, dtype=float) - np.asarray(left, dtype=float)
    t = np.clip(x - left, 0.0, w)
    # integral of (1 + a*(s - center))/w from left to x, with t = x - left
    return (t + 0.5 * np.asarray(slope, dtype=float) * (t * t - t * w)) / w


def linear_quantile(u, left, right, slope, validate: bool = True):
    """Inverse CDF of the linear density. Broadcasts over arrays.

    Uses the sign-aware quadratic formula; for both slope signs the root inside
    the support is ``2*u*w / (B + sqrt(B^2 + 2*a*u*w))`` with ``B = 1 - a*w/2``.
    u = 0 and u = 1 map exactly to the endpoints.
    """
    u = np.asarray(u, dtype=float)
    if validate and (np.any(u < 0.0) or np.any(u > 1.0)):
        raise ValueError("quantile argument must lie in [0, 1]")
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    a = np.asarray(slope, dtype=float)
    w = right - left

    b_lin = 1.0 - 0.5 * a * w
    disc = b_lin * b_lin + 2.0 * a * u * w
    denom = b_lin + np.sqrt(np.maximum(disc, 0.0))
    # denom vanishes only at u == 0 with the slope clamped to +2/w; that case
    # is overwritten by the endpoint fixups below.
    safe = np.where(denom > 0.0, denom, 1.0)
    x = left + 2.0 * u * w / safe
    x = np.where(np.abs(a) < SLOPE_EPS, left + u * w, x)
    x = np.where(u <= 0.0, left, np.where(u >= 1.0, right, x))
    return np.clip(x, left, right)


@dataclass(frozen=True)
class LinearDensity1D:
    """A linear probability density supported on ``[left, right]``."""

    left: float
    right: float
    slope: float = 0.0
    uniform_fallback: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.left) and np.isfinite(self.right)):
            raise ValueError("interval endpoints must be finite")
        if not self.right > self.left:
            raise ValueError(f"empty interval [{self.left}, {self.right}]")
        bound = max_slope(self.left, self.right)
        if abs(self.slope) > bound * (1.0 + 1e-12):
            raise ValueError(f"slope {self.slope} exceeds positivity bound {bound}")
        if abs(self.slope) > bound:
            object.__setattr__(self, "slope", float(np.clip(self.slope, -bound, bound)))

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def center(self) -> float:
        return 0.5 * (self.left + self.right)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.left) & (x <= self.right)
        val = (1.0 + self.slope * (x - self.center)) / self.width
        return np.where(inside, np.maximum(val, 0.0), 0.0)

    def cdf(self, x):
        return linear_cdf(x, self.left, self.right, self.slope)

    def quantile(self, u):
        return linear_quantile(u, self.left, self.right, self.slope)


def uniform_density(left: float, right: float) -> LinearDensity1D:
    return LinearDensity1D(float(left), float(right), 0.0)


def fit_linear_density(values, left: float, right: float) -> LinearDensity1D:
    """Fit the slope from the values' offsets around the interval center.

    The raw slope is ``4 * sum(v - center) / (n * width)``, clamped into the
    positivity bound ``[-2/width, 2/width]``.  An empty value set falls back
    to the uniform density and is flagged.
    """
    left = float(left)
    right = float(right)
    if not right > left:
        raise ValueError(f"empty interval [{left}, {right}]")
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        return LinearDensity1D(left, right, 0.0, uniform_fallback=True)
    width = right - left
    if np.any(vals < left - 1e-9 * width) or np.any(vals > right + 1e-9 * width):
        raise ValueError("values outside the target interval")
    center = 0.5 * (left + right)
    a0 = 4.0 * float(np.sum(vals - center)) / (vals.size * width)
    bound = max_slope(left, right)
    return LinearDensity1D(left, right, float(np.clip(a0, -bound, bound)))
