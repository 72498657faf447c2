"""Seeded sample generators for the benchmark distributions."""

from __future__ import annotations

import numpy as np

# the cross: a horizontal bar plus the two stubs above and below the overlap
CROSS_ARM_LENGTH = 1.5
CROSS_ARM_HALF_WIDTH = 0.5


def gaussian_cloud(rng: np.random.Generator, n: int, mean, cov) -> np.ndarray:
    """Multivariate normal draws via the Cholesky factor (fails on non-PD cov)."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    chol = np.linalg.cholesky(cov)  # raises LinAlgError if not positive definite
    return rng.standard_normal((n, mean.size)) @ chol.T + mean


def uniform_square(rng: np.random.Generator, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    return rng.uniform(low, high, size=(n, 2))


def uniform_cross(
    rng: np.random.Generator,
    n: int,
    arm_length: float = CROSS_ARM_LENGTH,
    arm_half_width: float = CROSS_ARM_HALF_WIDTH,
) -> np.ndarray:
    """Uniform draws over a plus-shaped cross centered at the origin.

    Decomposed into three disjoint rectangles (full horizontal bar, top stub,
    bottom stub) picked with area-proportional probability, so no rejection.
    """
    a, w = arm_length, arm_half_width
    rects = np.array(
        [
            [-a, -w, a, w],   # horizontal bar
            [-w, w, w, a],    # top stub
            [-w, -a, w, -w],  # bottom stub
        ]
    )
    areas = (rects[:, 2] - rects[:, 0]) * (rects[:, 3] - rects[:, 1])
    choice = rng.choice(3, size=n, p=areas / areas.sum())
    u = rng.random((n, 2))
    lo = rects[choice, :2]
    hi = rects[choice, 2:]
    return lo + u * (hi - lo)


def cube_root_target(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draws whose coordinates are cube roots of standard normal coordinates."""
    return np.cbrt(rng.standard_normal((n, 2)))
