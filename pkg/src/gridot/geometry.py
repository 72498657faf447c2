"""Sample clouds, rectangular grids, cell weights and grid refinement.

Cells are cartesian products of per-axis half-open segments ``[b_{k-1}, b_k)``.
A point sitting exactly on an interior breakpoint belongs to the segment on
its right; a point on the final breakpoint belongs to the last segment.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import OutOfSupportError, ParseError

CellIndex = tuple[int, ...]

# Relative padding applied to the sample range so every sample is strictly
# inside the half-open support.
PAD_REL = 1e-9


@dataclass(frozen=True, eq=False)
class SampleSet:
    """A cloud of d-dimensional points stored as an (n, d) read-only array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must form a 2-d array")
        if pts.shape[0] == 0:
            raise ValueError("a sample set needs at least one point")
        if not np.isfinite(pts).all():
            raise ValueError("sample coordinates must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def load_samples(source, header: bool = False) -> SampleSet:
    """Parse CSV rows (one point per line) into a SampleSet.

    ``source`` may be raw CSV text, bytes, or a file-like object.  Errors name
    the 1-based offending row.  Blank lines are skipped.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise TypeError("source must be text, bytes or a readable stream")

    rows: list[list[float]] = []
    dim = None
    lines = io.StringIO(text).readlines()
    start = 1 if header and lines else 0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        stripped = line.strip()
        if not stripped:
            continue
        fields = stripped.split(",")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"row {lineno}: non-numeric field ({exc})") from None
        if any(not np.isfinite(v) for v in values):
            raise ParseError(f"row {lineno}: non-finite value")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ParseError(f"row {lineno}: expected {dim} fields, got {len(values)}")
        rows.append(values)
    if not rows:
        raise ParseError("empty input: no data rows")
    return SampleSet(np.asarray(rows, dtype=float))


@dataclass(frozen=True, eq=False)
class AxisPartition:
    """Strictly increasing breakpoints defining half-open segments on one axis."""

    axis: int
    breakpoints: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp = np.ascontiguousarray(bp)
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def n_segments(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def segment_of(self, x) -> np.ndarray:
        """Segment indices for coordinates; out-of-support yields -1 or n_segments."""
        x = np.asarray(x, dtype=float)
        bp = self.breakpoints
        idx = np.searchsorted(bp, x, side="right") - 1
        idx = np.where(x == bp[-1], bp.size - 2, idx)
        return np.minimum(idx, bp.size - 1)


@dataclass(frozen=True, eq=False)
class Grid:
    """Cartesian product of per-axis partitions; cells tile the support rectangle."""

    partitions: tuple[AxisPartition, ...]

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(self.partitions))
        if not self.partitions:
            raise ValueError("grid needs at least one axis")

    @property
    def dim(self) -> int:
        return len(self.partitions)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(p.n_segments for p in self.partitions)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def degenerate_axes(self) -> tuple[int, ...]:
        return tuple(p.axis for p in self.partitions if p.degenerate)

    @property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([p.breakpoints[0] for p in self.partitions])
        hi = np.array([p.breakpoints[-1] for p in self.partitions])
        return lo, hi

    def cell_bounds(self, cell: CellIndex) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([p.breakpoints[k] for p, k in zip(self.partitions, cell)])
        hi = np.array([p.breakpoints[k + 1] for p, k in zip(self.partitions, cell)])
        return lo, hi

    def linear_index(self, cell: CellIndex) -> int:
        return int(np.ravel_multi_index(cell, self.shape))

    def cell_of_linear(self, index: int) -> CellIndex:
        return tuple(int(k) for k in np.unravel_index(index, self.shape))

    def locate_many(self, points, return_mask: bool = False):
        """Cell indices of points as an (n, d) int array.

        With ``return_mask`` a boolean in-support mask is returned alongside
        and no error is raised; otherwise the first out-of-support point
        raises OutOfSupportError naming it.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, grid {self.dim}")
        cells = np.empty(pts.shape, dtype=np.int64)
        ok = np.ones(pts.shape[0], dtype=bool)
        for l, part in enumerate(self.partitions):
            idx = part.segment_of(pts[:, l])
            ok &= (idx >= 0) & (idx < part.n_segments)
            cells[:, l] = np.clip(idx, 0, part.n_segments - 1)
        if return_mask:
            return cells, ok
        if not ok.all():
            bad = np.flatnonzero(~ok)
            raise OutOfSupportError(
                f"point {bad[0]} outside grid support", indices=bad.tolist()
            )
        return cells


def locate(grid: Grid, point) -> CellIndex:
    """Containing cell of one point under the right-closed boundary convention."""
    cells = grid.locate_many(np.asarray(point, dtype=float)[None, :])
    return tuple(int(k) for k in cells[0])


@dataclass(frozen=True, eq=False)
class WeightedPartition:
    """Per-cell sample counts normalized to weights; empty cells are absent."""

    grid: Grid
    weights: dict[CellIndex, float]
    membership: dict[CellIndex, np.ndarray]

    def __post_init__(self):
        if set(self.weights) != set(self.membership):
            raise ValueError("weights and membership must list the same cells")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, expected 1")
        if any(w <= 0 for w in self.weights.values()):
            raise ValueError("occupied cells must carry positive weight")

    @property
    def occupied(self) -> tuple[CellIndex, ...]:
        return tuple(sorted(self.weights))

    @property
    def n_samples(self) -> int:
        return sum(len(v) for v in self.membership.values())

    def axis_counts(self, axis: int) -> np.ndarray:
        """Number of sample coordinates falling in each segment of one axis."""
        counts = np.zeros(self.grid.partitions[axis].n_segments, dtype=np.int64)
        for cell, members in self.membership.items():
            counts[cell[axis]] += len(members)
        return counts


def initial_grid(samples: SampleSet, padding: float = PAD_REL) -> Grid:
    """Coarse starting grid: each axis support bisected into two equal segments.

    Degenerate axes (all coordinates equal) collapse to a single tiny segment
    centered on the value and are flagged on the partition.
    """
    parts = []
    for l in range(samples.dim):
        coords = samples.points[:, l]
        lo, hi = float(coords.min()), float(coords.max())
        if hi <= lo:
            eps = max(1e-9, abs(lo) * 1e-9)
            parts.append(AxisPartition(l, np.array([lo - eps, lo + eps]), degenerate=True))
            continue
        pad = (hi - lo) * padding
        lo_p, hi_p = lo - pad, hi + pad
        if hi_p <= hi:  # padding lost to rounding; the top sample must stay inside
            hi_p = np.nextafter(hi, np.inf)
        parts.append(AxisPartition(l, np.array([lo_p, 0.5 * (lo_p + hi_p), hi_p])))
    return Grid(tuple(parts))


def assign_weights(samples: SampleSet, grid: Grid) -> WeightedPartition:
    """Count samples per cell; weight = count / total under the boundary convention."""
    cells = grid.locate_many(samples.points)
    shape = grid.shape
    linear = np.ravel_multi_index(cells.T, shape)
    order = np.argsort(linear, kind="stable")
    uniq, starts = np.unique(linear[order], return_index=True)
    total = len(samples)
    weights: dict[CellIndex, float] = {}
    membership: dict[CellIndex, np.ndarray] = {}
    bounds = np.append(starts, linear.size)
    for u, s, e in zip(uniq, bounds[:-1], bounds[1:]):
        cell = tuple(int(k) for k in np.unravel_index(u, shape))
        members = order[s:e]
        members.setflags(write=False)
        weights[cell] = (e - s) / total
        membership[cell] = members
    return WeightedPartition(grid, weights, membership)


@dataclass(frozen=True, eq=False)
class Refinement:
    """A refined grid plus the child-to-parent segment maps per axis."""

    grid: Grid
    parents: tuple[np.ndarray, ...]
    changed: bool

    def parent_cell(self, cell: CellIndex) -> CellIndex:
        return tuple(int(self.parents[l][k]) for l, k in enumerate(cell))

    @classmethod
    def identity(cls, grid: Grid) -> "Refinement":
        parents = tuple(np.arange(p.n_segments) for p in grid.partitions)
        return cls(grid, parents, changed=False)


def _split_axis(part: AxisPartition, counts: np.ndarray, n_min: int):
    """Bisect every segment holding more than n_min coordinates."""
    bp = part.breakpoints
    new_bp = [bp[0]]
    parents: list[int] = []
    changed = False
    for k in range(part.n_segments):
        lo, hi = bp[k], bp[k + 1]
        mid = 0.5 * (lo + hi)
        if counts[k] > n_min and lo < mid < hi:
            new_bp.extend([mid, hi])
            parents.extend([k, k])
            changed = True
        else:
            new_bp.append(hi)
            parents.append(k)
    return (
        AxisPartition(part.axis, np.asarray(new_bp), degenerate=part.degenerate),
        np.asarray(parents, dtype=np.int64),
        changed,
    )


def refine_grid(
    grid: Grid,
    partition: WeightedPartition,
    policy: str = "standard",
    n_min: int = 10,
) -> Refinement:
    """Bisect eligible segments into two equal halves.

    ``standard`` touches every axis; ``longest_axis`` only the axis with the
    longest support (ties broken by lowest axis index), so the cell count at
    most doubles.  Degenerate axes are never split.  If nothing is eligible
    the grid comes back unchanged with ``changed=False``.
    """
    if partition.grid is not grid:
        raise ValueError("partition was built on a different grid")
    if policy not in ("standard", "longest_axis"):
        raise ValueError(f"unknown refinement policy {policy!r}")

    if policy == "longest_axis":
        spans = [p.breakpoints[-1] - p.breakpoints[0] for p in grid.partitions]
        target = int(np.argmax(spans))
        axes = [target]
    else:
        axes = list(range(grid.dim))

    parts = list(grid.partitions)
    parents = []
    changed = False
    for l in range(grid.dim):
        part = grid.partitions[l]
        if l in axes and not part.degenerate:
            new_part, par, ch = _split_axis(part, partition.axis_counts(l), n_min)
            parts[l] = new_part
            parents.append(par)
            changed |= ch
        else:
            parents.append(np.arange(part.n_segments, dtype=np.int64))
    if not changed:
        return Refinement(grid, tuple(parents), changed=False)
    return Refinement(Grid(tuple(parts)), tuple(parents), changed=True)


def cell_neighbors(grid: Grid, cell: CellIndex) -> set[CellIndex]:
    """Cells whose closed rectangles touch the given cell's (Moore neighborhood)."""
    shape = grid.shape
    if len(cell) != grid.dim or any(not 0 <= c < s for c, s in zip(cell, shape)):
        raise ValueError(f"cell {cell} not in grid of shape {shape}")
    ranges = [
        range(max(0, c - 1), min(s, c + 2)) for c, s in zip(cell, shape)
    ]
    return {idx for idx in product(*ranges) if idx != tuple(cell)}
