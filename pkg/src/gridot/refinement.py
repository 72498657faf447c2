"""Multilevel transport driver: weighting, density fitting, sparse LP, refinement.

Each level models both marginals as mixtures of per-cell product densities,
prices every admitted cell pair in closed form, and solves the restricted
transportation LP.  Between levels the grids are refined, the sparsity
pattern is rebuilt from the coarse solution's support (children of active
parent pairs, optionally fattened by rectangle neighbors) and the coarse
coupling is rescaled into a feasible warm start.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .density1d import LinearDensity1D, fit_linear_density, uniform_density
from .errors import InternalError
from .geometry import (
    CellIndex,
    Grid,
    Refinement,
    SampleSet,
    WeightedPartition,
    assign_weights,
    cell_neighbors,
    initial_grid,
    refine_grid,
)
from .localtransport import DEFAULT_QUADRATURE_ORDER, CellDensity, pair_costs_1d
from .lpsolver import (
    FEAS_TOL,
    OPT_TOL,
    STATUS_FEASIBLE,
    STATUS_OPTIMAL,
    CouplingSolution,
    SparsityPattern,
    TransportationProblem,
    solve_transportation,
)

SUPPORT_THRESHOLD = 1e-12  # coupling values above this count as "nonzero"


@dataclass(frozen=True)
class SolveConfig:
    """Free parameters of the multilevel solve."""

    max_levels: int = 5
    n_min: int = 10
    policy: str = "standard"
    neighbor_expansion: bool = True
    density_model: str = "linear"
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    support_threshold: float = SUPPORT_THRESHOLD

    def __post_init__(self):
        if self.max_levels < 1:
            raise ValueError("max_levels must be at least 1")
        if self.n_min < 1:
            raise ValueError("n_min must be at least 1")
        if self.policy not in ("standard", "longest_axis"):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.density_model not in ("uniform", "linear"):
            raise ValueError(f"unknown density model {self.density_model!r}")


@dataclass(frozen=True, eq=False)
class MarginalModel:
    """One marginal at one level: grid, weights and per-cell product densities.

    Occupied cells are ordered lexicographically; that ordinal is the row or
    column index used by patterns and couplings.  The density parameters are
    also mirrored into flat arrays for vectorized pair pricing.
    """

    grid: Grid
    partition: WeightedPartition
    cells: tuple[CellIndex, ...]
    densities: tuple[CellDensity, ...]

    def __post_init__(self):
        n, d = len(self.cells), self.grid.dim
        lefts = np.empty((n, d))
        rights = np.empty((n, d))
        slopes = np.empty((n, d))
        weights = np.empty(n)
        for k, dens in enumerate(self.densities):
            weights[k] = dens.weight
            for l, f in enumerate(dens.factors):
                lefts[k, l] = f.left
                rights[k, l] = f.right
                slopes[k, l] = f.slope
        for arr in (lefts, rights, slopes, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "lefts", lefts)
        object.__setattr__(self, "rights", rights)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "index", {c: k for k, c in enumerate(self.cells)})

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def fit_cell_densities(
    samples: SampleSet,
    partition: WeightedPartition,
    density_model: str = "linear",
) -> MarginalModel:
    """Fit one product density per occupied cell from the samples it contains.

    Cells holding fewer than two samples fall back to uniform factors; the
    ``uniform`` model skips slope fitting everywhere.
    """
    grid = partition.grid
    cells = tuple(sorted(partition.weights))
    densities = []
    for cell in cells:
        lo, hi = grid.cell_bounds(cell)
        members = partition.membership[cell]
        factors = []
        for l in range(grid.dim):
            if density_model == "uniform" or len(members) < 2:
                factors.append(uniform_density(lo[l], hi[l]))
            else:
                values = samples.points[members, l]
                factors.append(fit_linear_density(values, lo[l], hi[l]))
        densities.append(
            CellDensity(cell, partition.weights[cell], tuple(factors))
        )
    return MarginalModel(grid, partition, cells, tuple(densities))


@dataclass(frozen=True, eq=False)
class LevelSolution:
    """Everything one refinement level produced."""

    level: int
    source: MarginalModel
    target: MarginalModel
    pattern: SparsityPattern
    coupling: CouplingSolution
    objective: float
    wall_time: float

    def record(self) -> dict:
        return {
            "level": self.level,
            "source_cells_per_dim": [p.n_segments for p in self.source.grid.partitions],
            "target_cells_per_dim": [p.n_segments for p in self.target.grid.partitions],
            "pattern_size": len(self.pattern),
            "objective": self.objective,
            "wall_time_s": self.wall_time,
        }


@dataclass(frozen=True, eq=False)
class TransportSolution:
    """The level history of one multilevel solve; the last level is the answer."""

    levels: tuple[LevelSolution, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("a transport solution needs at least one level")

    @property
    def final(self) -> LevelSolution:
        return self.levels[-1]

    @property
    def objective(self) -> float:
        return self.final.objective


def _children_by_parent(model: MarginalModel, ref: Refinement, previous: MarginalModel):
    """Occupied-child ordinals grouped by occupied-parent ordinal."""
    groups: dict[int, list[int]] = {}
    for ordinal, cell in enumerate(model.cells):
        parent = ref.parent_cell(cell)
        parent_ord = previous.index.get(parent)
        if parent_ord is None:
            raise InternalError(
                f"occupied cell {cell} has unoccupied parent {parent}"
            )
        groups.setdefault(parent_ord, []).append(ordinal)
    return {h: np.asarray(v, dtype=np.int64) for h, v in groups.items()}


def minimal_pattern(
    previous: LevelSolution,
    source_model: MarginalModel,
    target_model: MarginalModel,
    source_ref: Refinement,
    target_ref: Refinement,
    threshold: float = SUPPORT_THRESHOLD,
) -> SparsityPattern:
    """Child pairs of every parent pair that carried coupling mass."""
    src_children = _children_by_parent(source_model, source_ref, previous.source)
    tgt_children = _children_by_parent(target_model, target_ref, previous.target)
    n_cols = target_model.n_cells
    codes = []
    active = previous.coupling.support(threshold)
    for k in active.tolist():
        h = int(previous.pattern.rows[k])
        g = int(previous.pattern.cols[k])
        ci = src_children.get(h)
        cj = tgt_children.get(g)
        if ci is None or cj is None:
            continue
        codes.append((ci[:, None] * n_cols + cj[None, :]).ravel())
    if not codes:
        raise InternalError("previous coupling has no support above the threshold")
    merged = np.unique(np.concatenate(codes))
    return SparsityPattern(
        source_model.n_cells, n_cols, merged // n_cols, merged % n_cols
    )


def scaled_feasible(
    previous: LevelSolution,
    source_model: MarginalModel,
    target_model: MarginalModel,
    source_ref: Refinement,
    target_ref: Refinement,
    threshold: float = SUPPORT_THRESHOLD,
) -> CouplingSolution:
    """Coarse coupling rescaled onto the children: a feasible fine-level start.

    Each active parent pair (h, g) spreads its mass over its child pairs in
    proportion to the child weights: ``l_ij = p_i q_j / (P_h Q_g) * L_hg``.
    """
    src_children = _children_by_parent(source_model, source_ref, previous.source)
    tgt_children = _children_by_parent(target_model, target_ref, previous.target)
    n_cols = target_model.n_cells
    p = source_model.weights
    q = target_model.weights
    codes = []
    values = []
    active = previous.coupling.support(threshold)
    for k in active.tolist():
        h = int(previous.pattern.rows[k])
        g = int(previous.pattern.cols[k])
        mass = previous.coupling.values[k]
        ci = src_children.get(h)
        cj = tgt_children.get(g)
        if ci is None or cj is None:
            continue
        parent_p = previous.source.weights[h]
        parent_q = previous.target.weights[g]
        if parent_p <= 0 or parent_q <= 0:
            raise InternalError("active parent pair with nonpositive weight")
        block = np.outer(p[ci] / parent_p, q[cj] / parent_q) * mass
        codes.append((ci[:, None] * n_cols + cj[None, :]).ravel())
        values.append(block.ravel())
    code_arr = np.concatenate(codes)
    value_arr = np.concatenate(values)
    order = np.argsort(code_arr, kind="stable")
    code_arr = code_arr[order]
    value_arr = value_arr[order]
    # child pairs belong to exactly one parent pair, so codes are unique
    pattern = SparsityPattern(
        source_model.n_cells, n_cols, code_arr // n_cols, code_arr % n_cols
    )
    return CouplingSolution(pattern, value_arr, objective=None, status=STATUS_FEASIBLE)


def _occupied_neighbor_map(model: MarginalModel, cells_needed) -> dict[int, np.ndarray]:
    """Ordinals of occupied neighbors for each requested occupied ordinal."""
    out = {}
    for ordinal in cells_needed:
        cell = model.cells[ordinal]
        nbrs = [
            model.index[c]
            for c in cell_neighbors(model.grid, cell)
            if c in model.index
        ]
        out[ordinal] = np.asarray(sorted(nbrs), dtype=np.int64)
    return out


def expand_pattern(
    minimal: SparsityPattern,
    source_model: MarginalModel,
    target_model: MarginalModel,
) -> SparsityPattern:
    """Fatten a pattern with occupied rectangle neighbors on either side.

    For every pair (i, j), adds (i, neighbors of j) and (neighbors of i, j),
    neighbors being the occupied cells whose closed rectangles touch.
    """
    if len(minimal) == 0:
        raise ValueError("cannot expand an empty pattern")
    n_cols = target_model.n_cells
    src_nbrs = _occupied_neighbor_map(source_model, set(minimal.rows.tolist()))
    tgt_nbrs = _occupied_neighbor_map(target_model, set(minimal.cols.tolist()))
    codes = [minimal.rows * n_cols + minimal.cols]
    for i, j in zip(minimal.rows.tolist(), minimal.cols.tolist()):
        codes.append(i * n_cols + tgt_nbrs[j])
        codes.append(src_nbrs[i] * n_cols + j)
    merged = np.unique(np.concatenate(codes))
    return SparsityPattern(
        source_model.n_cells, n_cols, merged // n_cols, merged % n_cols
    )


def _pattern_costs(
    source_model: MarginalModel,
    target_model: MarginalModel,
    pattern: SparsityPattern,
    order: int,
) -> np.ndarray:
    """Pair costs over the pattern: per-axis 1-d costs summed per pair."""
    rows = pattern.rows
    cols = pattern.cols
    total = np.zeros(len(pattern))
    for l in range(source_model.grid.dim):
        total += pair_costs_1d(
            source_model.lefts[rows, l],
            source_model.rights[rows, l],
            source_model.slopes[rows, l],
            target_model.lefts[cols, l],
            target_model.rights[cols, l],
            target_model.slopes[cols, l],
            order=order,
        )
    return total


def _pad_warm_start(
    warm: CouplingSolution, pattern: SparsityPattern
) -> CouplingSolution:
    """Embed warm values (on a sub-pattern) into a larger pattern with zeros."""
    n_cols = pattern.n_cols
    codes = pattern.rows * n_cols + pattern.cols
    warm_codes = warm.pattern.rows * n_cols + warm.pattern.cols
    pos = np.searchsorted(codes, warm_codes)
    if np.any(pos >= codes.size) or np.any(codes[pos] != warm_codes):
        raise InternalError("warm start support not contained in the pattern")
    values = np.zeros(len(pattern))
    values[pos] = warm.values
    return CouplingSolution(pattern, values, objective=None, status=STATUS_FEASIBLE)


def _solve_level(
    level: int,
    source_model: MarginalModel,
    target_model: MarginalModel,
    pattern: SparsityPattern,
    warm: CouplingSolution | None,
    config: SolveConfig,
) -> LevelSolution:
    start = time.perf_counter()
    p = source_model.weights
    q = target_model.weights
    if not pattern.covers(p, q):
        raise InternalError(
            f"level {level}: pattern misses occupied cells "
            f"(|S|={len(pattern)}, rows={source_model.n_cells}, "
            f"cols={target_model.n_cells})"
        )
    costs = _pattern_costs(source_model, target_model, pattern, config.quadrature_order)
    problem = TransportationProblem(p, q, costs)
    coupling = solve_transportation(
        problem,
        pattern,
        warm_start=warm,
        feas_tol=config.feas_tol,
        opt_tol=config.opt_tol,
    )
    if coupling.status != STATUS_OPTIMAL:
        raise InternalError(
            f"level {level}: restricted problem reported {coupling.status}; "
            f"|S|={len(pattern)}, sum p={p.sum()!r}, sum q={q.sum()!r}"
        )
    return LevelSolution(
        level=level,
        source=source_model,
        target=target_model,
        pattern=pattern,
        coupling=coupling,
        objective=float(coupling.objective),
        wall_time=time.perf_counter() - start,
    )


def solve(
    source: SampleSet,
    target: SampleSet,
    config: SolveConfig = SolveConfig(),
    on_level=None,
) -> TransportSolution:
    """Run the multilevel loop and return the recorded levels.

    Starts from two-segments-per-axis grids with the dense pattern over
    occupied cells; stops after ``max_levels`` or when neither grid has a
    segment left to split.  ``on_level`` receives each level's record dict.
    """
    if source.dim != target.dim:
        raise ValueError(f"dimension mismatch: {source.dim} vs {target.dim}")

    src_partition = assign_weights(source, initial_grid(source))
    tgt_partition = assign_weights(target, initial_grid(target))
    src_model = fit_cell_densities(source, src_partition, config.density_model)
    tgt_model = fit_cell_densities(target, tgt_partition, config.density_model)
    pattern = SparsityPattern.dense(src_model.n_cells, tgt_model.n_cells)
    warm: CouplingSolution | None = None

    levels: list[LevelSolution] = []
    for level in range(1, config.max_levels + 1):
        solved = _solve_level(level, src_model, tgt_model, pattern, warm, config)
        levels.append(solved)
        if on_level is not None:
            on_level(solved.record())
        if level == config.max_levels:
            break

        src_ref = refine_grid(
            src_model.grid, src_model.partition, config.policy, config.n_min
        )
        tgt_ref = refine_grid(
            tgt_model.grid, tgt_model.partition, config.policy, config.n_min
        )
        if not (src_ref.changed or tgt_ref.changed):
            break
        new_src_partition = assign_weights(source, src_ref.grid)
        new_tgt_partition = assign_weights(target, tgt_ref.grid)
        new_src_model = fit_cell_densities(source, new_src_partition, config.density_model)
        new_tgt_model = fit_cell_densities(target, new_tgt_partition, config.density_model)

        minimal = minimal_pattern(
            solved, new_src_model, new_tgt_model, src_ref, tgt_ref,
            config.support_threshold,
        )
        warm_min = scaled_feasible(
            solved, new_src_model, new_tgt_model, src_ref, tgt_ref,
            config.support_threshold,
        )
        if config.neighbor_expansion:
            pattern = expand_pattern(minimal, new_src_model, new_tgt_model)
        else:
            pattern = minimal
        warm = _pad_warm_start(warm_min, pattern)
        src_model, tgt_model = new_src_model, new_tgt_model

    return TransportSolution(tuple(levels))
