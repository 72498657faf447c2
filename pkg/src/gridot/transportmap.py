"""Recovered transport map evaluation, pushforward and quality metrics.

The plan-to-map reduction evaluates, inside the containing source cell, the
coupling-weighted average of the per-pair coordinate maps.  Because cell
supports are disjoint the source density factors cancel, so only the
containing cell's partners contribute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfSupportError
from .geometry import SampleSet
from .localtransport import transport_1d
from .refinement import LevelSolution, MarginalModel, TransportSolution


@dataclass(frozen=True, eq=False)
class MapEvaluator:
    """Pointwise evaluator of the optimal map recovered from one level."""

    source: MarginalModel
    target: MarginalModel
    partner_cols: tuple[np.ndarray, ...]
    partner_weights: tuple[np.ndarray, ...]

    @classmethod
    def from_level(cls, level: LevelSolution) -> "MapEvaluator":
        cols: list[list[int]] = [[] for _ in range(level.source.n_cells)]
        weights: list[list[float]] = [[] for _ in range(level.source.n_cells)]
        values = level.coupling.values
        for k in level.coupling.support(0.0).tolist():
            cols[level.pattern.rows[k]].append(int(level.pattern.cols[k]))
            weights[level.pattern.rows[k]].append(float(values[k]))
        return cls(
            level.source,
            level.target,
            tuple(np.asarray(c, dtype=np.int64) for c in cols),
            tuple(np.asarray(w, dtype=float) for w in weights),
        )

    @classmethod
    def from_solution(cls, solution: TransportSolution) -> "MapEvaluator":
        return cls.from_level(solution.final)

    def evaluate_many(self, points) -> np.ndarray:
        """Map an (n, d) batch of points; unoccupied or outside points error out
        with all offending indices listed."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        cells, ok = self.source.grid.locate_many(pts, return_mask=True)
        ordinals = np.full(pts.shape[0], -1, dtype=np.int64)
        for r in np.flatnonzero(ok):
            ordinal = self.source.index.get(tuple(int(c) for c in cells[r]))
            if ordinal is not None:
                ordinals[r] = ordinal
        bad = np.flatnonzero(ordinals < 0)
        if bad.size:
            raise OutOfSupportError(
                f"{bad.size} point(s) outside the model support "
                f"(first: index {bad[0]})",
                indices=bad.tolist(),
            )
        out = np.empty_like(pts)
        src = self.source
        tgt = self.target
        for ordinal in np.unique(ordinals).tolist():
            group = np.flatnonzero(ordinals == ordinal)
            x = pts[group]
            partners = self.partner_cols[ordinal]
            lam = self.partner_weights[ordinal]
            acc = np.zeros_like(x)
            for j, w in zip(partners.tolist(), lam / lam.sum()):
                mapped = np.stack(
                    [
                        transport_1d(
                            x[:, l],
                            src.lefts[ordinal, l], src.rights[ordinal, l],
                            src.slopes[ordinal, l],
                            tgt.lefts[j, l], tgt.rights[j, l], tgt.slopes[j, l],
                        )
                        for l in range(x.shape[1])
                    ],
                    axis=1,
                )
                acc += w * mapped
            out[group] = acc
        return out

    def __call__(self, point) -> np.ndarray:
        return self.evaluate_many(np.asarray(point, dtype=float)[None, :])[0]


def evaluate_map(evaluator: MapEvaluator, point) -> np.ndarray:
    return evaluator(point)


def push_samples(evaluator: MapEvaluator, samples: SampleSet) -> SampleSet:
    """Map every sample; output order matches input order."""
    return SampleSet(evaluator.evaluate_many(samples.points))


def map_error(evaluator: MapEvaluator, samples: SampleSet, reference) -> float:
    """Root mean squared distance between the numerical and reference maps.

    ``reference`` is either a callable mapping an (n, d) array to an (n, d)
    array, or a precomputed (n, d) array aligned with the samples.
    """
    mapped = evaluator.evaluate_many(samples.points)
    if callable(reference):
        expected = np.asarray(reference(samples.points), dtype=float)
    else:
        expected = np.asarray(reference, dtype=float)
    if expected.shape != mapped.shape:
        raise ValueError("reference output does not match the sample shape")
    return float(np.sqrt(np.mean(np.sum((mapped - expected) ** 2, axis=1))))


def wasserstein_distance(solution) -> float:
    """Quadratic Wasserstein distance from a solve: sqrt(2 * objective).

    Accepts a TransportSolution, a LevelSolution, or a bare objective value
    (the internal cost convention is half the squared displacement).
    """
    objective = getattr(solution, "objective", solution)
    return float(np.sqrt(max(2.0 * float(objective), 0.0)))


def distance_error(w_numerical: float, w_reference: float) -> float:
    """Signed distance error, numerical minus reference."""
    return float(w_numerical) - float(w_reference)


# ----------------------------------------------------------------- references


def _spd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(np.asarray(mat, dtype=float))
    if np.any(vals < -1e-10 * max(1.0, abs(vals).max())):
        raise ValueError("matrix is not positive semidefinite")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.T


def _spd_inv_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(np.asarray(mat, dtype=float))
    if np.any(vals <= 0.0):
        raise ValueError("matrix must be positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def gaussian_affine_map(mean1, cov1, mean2, cov2):
    """The linear optimal map between two Gaussians as a callable on point arrays."""
    mean1 = np.asarray(mean1, dtype=float)
    mean2 = np.asarray(mean2, dtype=float)
    root2 = _spd_sqrt(cov2)
    middle = root2 @ np.asarray(cov1, dtype=float) @ root2
    matrix = root2 @ _spd_inv_sqrt(middle) @ root2

    def apply(points):
        pts = np.asarray(points, dtype=float)
        return (pts - mean1) @ matrix.T + mean2

    return apply


def gaussian_wasserstein(mean1, cov1, mean2, cov2) -> float:
    """Closed-form quadratic Wasserstein distance between two Gaussians."""
    mean1 = np.asarray(mean1, dtype=float)
    mean2 = np.asarray(mean2, dtype=float)
    cov1 = np.asarray(cov1, dtype=float)
    cov2 = np.asarray(cov2, dtype=float)
    root2 = _spd_sqrt(cov2)
    cross = _spd_sqrt(root2 @ cov1 @ root2)
    squared = float(
        np.sum((mean1 - mean2) ** 2)
        + np.trace(cov1) + np.trace(cov2) - 2.0 * np.trace(cross)
    )
    return float(np.sqrt(max(squared, 0.0)))


def cube_root_map(points) -> np.ndarray:
    """Coordinate-wise cube root, the reference map of the nonlinear benchmark."""
    return np.cbrt(np.asarray(points, dtype=float))
