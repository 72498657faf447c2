"""Sparse transportation linear program solved by a primal network simplex.

The problem: minimize ``sum(C_ij * l_ij)`` over nonnegative ``l_ij`` supported
on an explicit pair pattern, with fixed row sums ``p`` and column sums ``q``.
The constraint graph is bipartite, so every basis is a spanning tree of the
row/column node set and all simplex steps are tree operations:

* initial flows come from a pattern-respecting row-major greedy rule (cold
  start) or from an externally supplied feasible solution (warm start), both
  reduced to a forest by cycle canceling; artificial arcs absorb whatever the
  pattern could not place and bridge stray components;
* degeneracy is softened by a deterministic perturbation of the supplies,
  balanced inside each connected component of the pattern and removed on
  termination by recomputing the basic flows from the exact marginals;
* pivoting picks the most negative reduced cost (lowest pair index on ties)
  and falls back to Bland's rule after a pivot budget to rule out cycling.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InternalError

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9         # primal feasibility on the marginal sums
OPT_TOL = 1e-10         # reduced-cost optimality threshold
ARTIFICIAL_TOL = 1e-10  # artificial flow above this after phase 1 = infeasible
PERTURB = 1e-12         # supply perturbation scale, row i gets PERTURB*(i+1)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_FEASIBLE = "feasible"


@dataclass(frozen=True, eq=False)
class SparsityPattern:
    """Sorted, deduplicated (row, col) pairs admitted to carry flow."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise ValueError("rows and cols must be parallel 1-d arrays")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.n_cols:
                raise ValueError("col index out of range")
            code = rows * self.n_cols + cols
            if not np.all(np.diff(code) > 0):
                raise ValueError("pairs must be sorted by (row, col) and unique")
        rows.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_pairs(cls, n_rows: int, n_cols: int, pairs) -> "SparsityPattern":
        arr = np.asarray(list(pairs), dtype=np.int64)
        if arr.size == 0:
            return cls(n_rows, n_cols, np.empty(0, np.int64), np.empty(0, np.int64))
        code = np.unique(arr[:, 0] * n_cols + arr[:, 1])
        return cls(n_rows, n_cols, code // n_cols, code % n_cols)

    @classmethod
    def dense(cls, n_rows: int, n_cols: int) -> "SparsityPattern":
        rows = np.repeat(np.arange(n_rows, dtype=np.int64), n_cols)
        cols = np.tile(np.arange(n_cols, dtype=np.int64), n_rows)
        return cls(n_rows, n_cols, rows, cols)

    def __len__(self) -> int:
        return self.rows.size

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def covers(self, p, q, tol: float = 0.0) -> bool:
        """True if every row/col with weight above tol appears in some pair."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        row_hit = np.zeros(self.n_rows, dtype=bool)
        col_hit = np.zeros(self.n_cols, dtype=bool)
        row_hit[self.rows] = True
        col_hit[self.cols] = True
        return bool(np.all(row_hit[p > tol]) and np.all(col_hit[q > tol]))

    def index_of(self) -> dict[tuple[int, int], int]:
        return {
            (int(r), int(c)): k
            for k, (r, c) in enumerate(zip(self.rows, self.cols))
        }


@dataclass(frozen=True, eq=False)
class TransportationProblem:
    """Balanced marginals plus one cost per pattern pair (same ordering)."""

    row_weights: np.ndarray
    col_weights: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.row_weights, dtype=float)
        q = np.asarray(self.col_weights, dtype=float)
        c = np.asarray(self.costs, dtype=float)
        if p.ndim != 1 or q.ndim != 1 or p.size == 0 or q.size == 0:
            raise ValueError("weights must be nonempty 1-d arrays")
        if np.any(p < 0) or np.any(q < 0):
            raise ValueError("weights must be nonnegative")
        if abs(p.sum() - q.sum()) > 1e-12:
            raise ValueError(
                f"unbalanced problem: sum p = {p.sum()!r}, sum q = {q.sum()!r}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("costs must be finite")
        for name, arr in (("row_weights", p), ("col_weights", q), ("costs", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class CouplingSolution:
    """Nonnegative pair weights over a pattern, with objective and status."""

    pattern: SparsityPattern
    values: np.ndarray
    objective: float | None
    status: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.pattern.rows.shape:
            raise ValueError("values must align with the pattern pairs")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def row_sums(self) -> np.ndarray:
        return np.bincount(
            self.pattern.rows, weights=self.values, minlength=self.pattern.n_rows
        )

    def col_sums(self) -> np.ndarray:
        return np.bincount(
            self.pattern.cols, weights=self.values, minlength=self.pattern.n_cols
        )

    def support(self, threshold: float = 0.0) -> np.ndarray:
        """Indices of pairs whose value exceeds the threshold."""
        return np.flatnonzero(self.values > threshold)


def product_feasible(p, q) -> CouplingSolution:
    """The always-feasible product coupling ``l_ij = p_i * q_j / total`` (dense)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = p.sum()
    if total <= 0 or q.sum() <= 0:
        raise ValueError("total mass must be positive")
    if abs(total - q.sum()) > 1e-12:
        raise ValueError("marginals must balance")
    pattern = SparsityPattern.dense(p.size, q.size)
    values = np.outer(p, q).ravel() / total
    return CouplingSolution(pattern, values, objective=None, status=STATUS_FEASIBLE)


def _perturbed_marginals(p, q, pattern: SparsityPattern):
    """Supplies nudged by PERTURB*(i+1), re-balanced inside each pattern component.

    Each connected component of the pattern graph absorbs its own row
    perturbations on its highest-index column, so a feasible pattern stays
    feasible after perturbation even when the pattern is disconnected.
    """
    m, n = p.size, q.size
    parent = np.arange(m + n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    for r, c in zip(pattern.rows.tolist(), pattern.cols.tolist()):
        a, b = find(r), find(m + c)
        if a != b:
            parent[a] = b

    has_arc = np.zeros(m, dtype=bool)
    has_arc[pattern.rows] = True
    delta = np.where(has_arc, PERTURB * (np.arange(m) + 1.0), 0.0)

    comp_sum: dict[int, float] = {}
    comp_col: dict[int, int] = {}
    for i in range(m):
        if delta[i] > 0:
            root = find(i)
            comp_sum[root] = comp_sum.get(root, 0.0) + delta[i]
    for j in range(n):
        root = find(m + j)
        if root in comp_sum:
            comp_col[root] = j  # ascending scan leaves the max index
    pp = p + delta
    qp = q.astype(float).copy()
    for root, s in comp_sum.items():
        qp[comp_col[root]] += s
    return pp, qp


class _Simplex:
    """Working state for one transportation solve; nodes are rows then columns."""

    def __init__(self, p, q, pattern: SparsityPattern, feas_tol, opt_tol):
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.m, self.n = self.p.size, self.q.size
        self.N = self.m + self.n
        self.pattern = pattern
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.pp, self.qp = _perturbed_marginals(self.p, self.q, pattern)
        self.arc_row: np.ndarray | None = None
        self.arc_col: np.ndarray | None = None
        self.n_pattern = len(pattern)
        self.n_arcs = 0
        self.flows: np.ndarray | None = None
        self.in_basis: np.ndarray | None = None
        self.adj: list[list[int]] = []
        self.parent = np.full(self.N, -1, dtype=np.int64)
        self.parent_arc = np.full(self.N, -1, dtype=np.int64)
        self.depth = np.zeros(self.N, dtype=np.int64)
        self.pot = np.zeros(self.N)
        self.phase_costs: np.ndarray | None = None

    # ------------------------------------------------------------------ setup

    def _set_arcs(self, rows: list[int], col_nodes: list[int], flows: list[float]):
        self.arc_row = np.asarray(rows, dtype=np.int64)
        self.arc_col = np.asarray(col_nodes, dtype=np.int64)
        self.n_arcs = self.arc_row.size
        self.flows = np.asarray(flows, dtype=float)
        self._row_list = self.arc_row.tolist()
        self._col_list = self.arc_col.tolist()

    def _append_arc(self, row: int, col_node: int, flow: float) -> int:
        self.arc_row = np.append(self.arc_row, row)
        self.arc_col = np.append(self.arc_col, col_node)
        self.flows = np.append(self.flows, flow)
        self._row_list.append(row)
        self._col_list.append(col_node)
        self.n_arcs += 1
        return self.n_arcs - 1

    def _greedy_arcs(self):
        """Row-major greedy fill over pattern arcs on the perturbed marginals."""
        rem_p = self.pp.copy()
        rem_q = self.qp.copy()
        flows = [0.0] * self.n_pattern
        rows = self.pattern.rows
        cols = self.pattern.cols
        starts = np.searchsorted(rows, np.arange(self.m), side="left")
        ends = np.searchsorted(rows, np.arange(self.m), side="right")
        for i in range(self.m):
            if rem_p[i] <= 0.0:
                continue
            for k in range(starts[i], ends[i]):
                j = cols[k]
                if rem_q[j] > 0.0:
                    f = min(rem_p[i], rem_q[j])
                    flows[k] = f
                    rem_p[i] -= f
                    rem_q[j] -= f
                    if rem_p[i] <= 0.0:
                        break
        arc_rows = list(rows)
        arc_cols = list(cols + self.m)
        # artificial arcs absorb whatever the pattern could not place
        rows_left = [i for i in range(self.m) if rem_p[i] > 0.0]
        cols_left = [j for j in range(self.n) if rem_q[j] > 0.0]
        ri = ci = 0
        while ri < len(rows_left) and ci < len(cols_left):
            i, j = rows_left[ri], cols_left[ci]
            f = min(rem_p[i], rem_q[j])
            arc_rows.append(i)
            arc_cols.append(self.m + j)
            flows.append(f)
            rem_p[i] -= f
            rem_q[j] -= f
            if rem_p[i] <= 0.0:
                ri += 1
            if rem_q[j] <= 0.0:
                ci += 1
        return arc_rows, arc_cols, flows

    def _forest_from_flows(self) -> set[int]:
        """Cancel cycles among the positive-flow arcs in place; return a forest."""
        flows = self.flows
        rows = self._row_list
        cols = self._col_list
        order = np.lexsort((np.arange(self.n_arcs), -flows))
        forest: set[int] = set()
        adj: dict[int, list[tuple[int, int]]] = {}

        def path(src, dst):
            prev: dict[int, tuple[int, int]] = {src: (-1, -1)}
            queue = deque([src])
            while queue:
                x = queue.popleft()
                if x == dst:
                    break
                for arc, other in adj.get(x, ()):
                    if other not in prev:
                        prev[other] = (x, arc)
                        queue.append(other)
            if dst not in prev:
                return None
            arcs = []
            x = dst
            while x != src:
                px, arc = prev[x]
                arcs.append((arc, x))
                x = px
            return arcs[::-1]

        def link(arc, a, b):
            forest.add(arc)
            adj.setdefault(a, []).append((arc, b))
            adj.setdefault(b, []).append((arc, a))

        def unlink(arc, a, b):
            forest.discard(arc)
            adj[a] = [e for e in adj[a] if e[0] != arc]
            adj[b] = [e for e in adj[b] if e[0] != arc]

        for k in order.tolist():
            if flows[k] <= 0.0:
                continue
            r, c = rows[k], cols[k]
            arcs = path(r, c)
            if arcs is None:
                link(k, r, c)
                continue
            # closing a cycle: drain arc k through the parallel forest path
            signs = []
            node = r
            for arc, nxt in arcs:
                signs.append(1.0 if rows[arc] == node else -1.0)
                node = nxt
            theta = flows[k]
            binder = -1
            for (arc, _), s in zip(arcs, signs):
                if s < 0 and flows[arc] < theta:
                    theta = flows[arc]
                    binder = arc
            for (arc, _), s in zip(arcs, signs):
                flows[arc] = max(flows[arc] + s * theta, 0.0)
            flows[k] -= theta
            if binder >= 0 and flows[k] > 0.0:
                unlink(binder, rows[binder], cols[binder])
                flows[binder] = 0.0
                link(k, r, c)
            else:
                flows[k] = 0.0
        return forest

    def _complete_basis(self, flow_arcs: set[int]):
        """Grow the arc set with zero-flow arcs until it spans all nodes."""
        parent = list(range(self.N))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        basis = set()
        for k in sorted(flow_arcs):
            a, b = find(self._row_list[k]), find(self._col_list[k])
            if a == b:
                raise InternalError("initial flow arcs contain a cycle")
            parent[a] = b
            basis.add(k)
        for k in range(self.n_arcs):
            if len(basis) == self.N - 1:
                break
            a, b = find(self._row_list[k]), find(self._col_list[k])
            if a != b:
                parent[a] = b
                basis.add(k)
        if len(basis) < self.N - 1:
            # still disconnected: bridge components with zero-flow artificial
            # arcs, visiting column-bearing components first so an anchor
            # column exists by the time rows-only components show up
            comps: dict[int, list[int]] = {}
            for x in range(self.N):
                comps.setdefault(find(x), []).append(x)
            roots = sorted(
                comps, key=lambda r: (not any(x >= self.m for x in comps[r]), r)
            )
            anchor = comps[roots[0]]
            anchor_row = next((x for x in anchor if x < self.m), None)
            anchor_col = next((x for x in anchor if x >= self.m), None)
            for root in roots[1:]:
                nodes = comps[root]
                row = next((x for x in nodes if x < self.m), None)
                col = next((x for x in nodes if x >= self.m), None)
                if col is not None and anchor_row is not None:
                    arc = self._append_arc(anchor_row, col, 0.0)
                elif row is not None and anchor_col is not None:
                    arc = self._append_arc(row, anchor_col, 0.0)
                else:
                    raise InternalError("cannot bridge purely same-side components")
                basis.add(arc)
                if anchor_row is None and row is not None:
                    anchor_row = row
                if anchor_col is None and col is not None:
                    anchor_col = col
        self.in_basis = np.zeros(self.n_arcs, dtype=bool)
        self.in_basis[list(basis)] = True
        self.adj = [[] for _ in range(self.N)]
        for k in sorted(basis):
            self.adj[self._row_list[k]].append(k)
            self.adj[self._col_list[k]].append(k)

    def prepare(self, warm_values: np.ndarray | None):
        """Build the initial basis; a usable warm start skips the greedy fill."""
        if warm_values is not None:
            self._set_arcs(
                list(self.pattern.rows),
                list(self.pattern.cols + self.m),
                list(np.asarray(warm_values, dtype=float)),
            )
            forest = self._forest_from_flows()
            self._complete_basis(forest)
            self.phase_costs = np.zeros(self.n_arcs)
            self._rebuild()
            tree = self._tree_flows(self.pp, self.qp)
            art = tree[self.n_pattern:]
            if art.size == 0 or np.all(np.abs(art) <= 1e-7):
                self.flows = np.clip(tree, 0.0, None)
                return
            # warm values cannot carry the marginals on this pattern; fall back
        arc_rows, arc_cols, flows = self._greedy_arcs()
        self._set_arcs(arc_rows, arc_cols, flows)
        forest = self._forest_from_flows()
        self._complete_basis(forest)

    # ----------------------------------------------------------- tree algebra

    def _rebuild(self):
        """BFS from node 0: parent pointers, depths and dual potentials."""
        costs = self.phase_costs
        rows = self._row_list
        cols = self._col_list
        parent = self.parent
        parent_arc = self.parent_arc
        depth = self.depth
        pot = self.pot
        seen = [False] * self.N
        parent[0] = -1
        parent_arc[0] = -1
        depth[0] = 0
        pot[0] = 0.0
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            x = queue.popleft()
            dx = depth[x]
            px = pot[x]
            for arc in self.adj[x]:
                other = cols[arc] if rows[arc] == x else rows[arc]
                if seen[other]:
                    continue
                seen[other] = True
                parent[other] = x
                parent_arc[other] = arc
                depth[other] = dx + 1
                pot[other] = costs[arc] - px
                queue.append(other)
                count += 1
        if count != self.N:
            raise InternalError("basis does not span the node set")

    def _tree_flows(self, supplies_rows, demands_cols) -> np.ndarray:
        """Unique basic flows for given marginals, by leaf stripping."""
        residual = np.concatenate([supplies_rows, demands_cols]).astype(float)
        flows = np.zeros(self.n_arcs)
        order = np.argsort(self.depth, kind="stable")[::-1]
        parent = self.parent
        parent_arc = self.parent_arc
        for x in order.tolist():
            arc = parent_arc[x]
            if arc < 0:
                continue
            flows[arc] = residual[x]
            residual[parent[x]] -= residual[x]
        return flows

    # ------------------------------------------------------------- pivot loop

    def _cycle(self, entering: int):
        """Arcs of the basis cycle closed by the entering arc, with flow signs."""
        rows = self._row_list
        parent = self.parent
        parent_arc = self.parent_arc
        depth = self.depth
        arcs = [(entering, 1.0)]
        x = rows[entering]
        y = self._col_list[entering]
        # cycle orientation: row --entering--> col --tree path--> back to row
        while depth[y] > depth[x]:
            arc = int(parent_arc[y])
            arcs.append((arc, 1.0 if rows[arc] == y else -1.0))
            y = int(parent[y])
        while depth[x] > depth[y]:
            arc = int(parent_arc[x])
            arcs.append((arc, -1.0 if rows[arc] == x else 1.0))
            x = int(parent[x])
        while x != y:
            arc = int(parent_arc[y])
            arcs.append((arc, 1.0 if rows[arc] == y else -1.0))
            y = int(parent[y])
            arc = int(parent_arc[x])
            arcs.append((arc, -1.0 if rows[arc] == x else 1.0))
            x = int(parent[x])
        return arcs

    def _pivot(self, entering: int):
        cycle = self._cycle(entering)
        theta = np.inf
        leaving = -1
        for arc, sign in cycle:
            if sign < 0:
                f = self.flows[arc]
                if f < theta or (f == theta and arc < leaving):
                    theta = f
                    leaving = arc
        if leaving < 0:
            raise InternalError("transportation cycle without a blocking arc")
        theta = max(theta, 0.0)
        flows = self.flows
        for arc, sign in cycle:
            flows[arc] = max(flows[arc] + sign * theta, 0.0)
        flows[leaving] = 0.0
        self.in_basis[leaving] = False
        self.in_basis[entering] = True
        self.adj[self._row_list[leaving]].remove(leaving)
        self.adj[self._col_list[leaving]].remove(leaving)
        self.adj[self._row_list[entering]].append(entering)
        self.adj[self._col_list[entering]].append(entering)
        self._rebuild()

    def _optimize(self):
        """Pivot until no pattern arc prices out below -opt_tol."""
        costs = self.phase_costs[: self.n_pattern]
        rows = self.arc_row[: self.n_pattern]
        cols = self.arc_col[: self.n_pattern]
        max_pivots = 1000 + 60 * (self.N + self.n_arcs)
        bland_after = max_pivots // 2
        pivots = 0
        while True:
            red = costs - self.pot[rows] - self.pot[cols]
            red[self.in_basis[: self.n_pattern]] = 0.0
            eligible = red < -self.opt_tol
            if not eligible.any():
                return
            if pivots < bland_after:
                entering = int(np.argmin(red))
            else:
                entering = int(np.flatnonzero(eligible)[0])
            self._pivot(entering)
            pivots += 1
            if pivots > max_pivots:
                raise InternalError("pivot budget exhausted; suspected cycling")

    # ----------------------------------------------------------------- phases

    def _run_phase1(self) -> float:
        self.phase_costs = np.zeros(self.n_arcs)
        self.phase_costs[self.n_pattern:] = 1.0
        self._rebuild()
        self._optimize()
        return float(self.flows[self.n_pattern:].sum())

    def feasibility(self) -> bool:
        """Phase 1; re-checked on the exact marginals if perturbation interferes."""
        if self.flows[self.n_pattern:].sum() <= 0.0:
            return True
        residue = self._run_phase1()
        if residue <= ARTIFICIAL_TOL:
            return True
        # the perturbation can inflate the artificial flow near a tight cut;
        # re-run from the exact marginals before declaring infeasibility
        self.flows = np.clip(self._tree_flows(self.p, self.q), 0.0, None)
        residue = self._run_phase1()
        return residue <= ARTIFICIAL_TOL

    def _evict_artificials(self):
        """Swap zero-flow basic artificial arcs for crossing pattern arcs.

        Artificials that stay are true bridges between pattern components: no
        pattern arc crosses them, so no pivot cycle can ever route flow there.
        """
        for arc in range(self.n_pattern, self.n_arcs):
            if not self.in_basis[arc]:
                continue
            side = [False] * self.N
            start = self._row_list[arc]
            side[start] = True
            queue = deque([start])
            while queue:
                x = queue.popleft()
                for a in self.adj[x]:
                    if a == arc:
                        continue
                    other = (
                        self._col_list[a] if self._row_list[a] == x else self._row_list[a]
                    )
                    if not side[other]:
                        side[other] = True
                        queue.append(other)
            side_arr = np.asarray(side)
            crossing = np.flatnonzero(
                side_arr[self.arc_row[: self.n_pattern]]
                != side_arr[self.arc_col[: self.n_pattern]]
            )
            candidates = crossing[~self.in_basis[crossing]]
            if candidates.size == 0:
                continue
            swap = int(candidates[0])
            self.in_basis[arc] = False
            self.in_basis[swap] = True
            self.adj[self._row_list[arc]].remove(arc)
            self.adj[self._col_list[arc]].remove(arc)
            self.adj[self._row_list[swap]].append(swap)
            self.adj[self._col_list[swap]].append(swap)

    def solve_phase2(self, costs: np.ndarray):
        art = self.flows[self.n_pattern:]
        if art.size:
            np.clip(art, 0.0, None, out=art)
            art[art <= ARTIFICIAL_TOL] = 0.0
        self.phase_costs = np.concatenate(
            [costs, np.zeros(self.n_arcs - self.n_pattern)]
        )
        self._evict_artificials()
        self._rebuild()
        self._optimize()

    def finish(self) -> np.ndarray:
        """Exact basic flows for the unperturbed marginals on the final basis."""
        flows = self._tree_flows(self.p, self.q)
        art = flows[self.n_pattern:]
        if art.size and np.any(np.abs(art) > self.feas_tol):
            raise InternalError("artificial flow survived in the final basis")
        values = flows[: self.n_pattern]
        if values.size and values.min() < -1e-7:
            raise InternalError(
                f"basic flow {values.min()} below zero beyond rounding"
            )
        np.clip(values, 0.0, None, out=values)
        row_sums = np.bincount(
            self.arc_row[: self.n_pattern], weights=values, minlength=self.m
        )
        col_sums = np.bincount(
            self.arc_col[: self.n_pattern] - self.m, weights=values, minlength=self.n
        )
        if (
            np.max(np.abs(row_sums - self.p), initial=0.0) > self.feas_tol
            or np.max(np.abs(col_sums - self.q), initial=0.0) > self.feas_tol
        ):
            raise InternalError("optimal basis violates the marginal sums")
        return values

    def dump_basis(self):
        arcs = sorted(np.flatnonzero(self.in_basis).tolist())
        logger.debug(
            "basis tree: %s",
            [
                (self._row_list[a], self._col_list[a] - self.m, float(self.flows[a]))
                for a in arcs
            ],
        )


def check_feasible(p, q, pattern: SparsityPattern) -> bool:
    """True iff some nonnegative flow on the pattern meets both marginals."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    state = _Simplex(p, q, pattern, FEAS_TOL, OPT_TOL)
    state.prepare(None)
    return state.feasibility()


def solve_transportation(
    problem: TransportationProblem,
    pattern: SparsityPattern,
    warm_start: CouplingSolution | None = None,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    dump_basis: bool = False,
) -> CouplingSolution:
    """Optimal basic solution of the transportation LP restricted to the pattern.

    ``warm_start`` may carry any feasible values on the same pattern; it seeds
    the initial basis and skips phase 1.  Identical inputs produce identical
    outputs (all tie-breaking is by lowest pair index).
    """
    p = problem.row_weights
    q = problem.col_weights
    costs = problem.costs
    if costs.size != len(pattern):
        raise ValueError("costs must align with the pattern pairs")
    if p.size != pattern.n_rows or q.size != pattern.n_cols:
        raise ValueError("weights do not match the pattern shape")

    state = _Simplex(p, q, pattern, feas_tol, opt_tol)
    warm_values = None
    if warm_start is not None:
        if len(warm_start.values) != len(pattern):
            raise ValueError("warm start values do not align with the pattern")
        warm_values = warm_start.values
    state.prepare(warm_values)
    if not state.feasibility():
        return CouplingSolution(
            pattern,
            np.zeros(len(pattern)),
            objective=None,
            status=STATUS_INFEASIBLE,
        )
    state.solve_phase2(costs)
    values = state.finish()
    if dump_basis:
        state.dump_basis()
    objective = float(np.dot(costs, values))
    return CouplingSolution(pattern, values, objective=objective, status=STATUS_OPTIMAL)
