"""Fixed-point barycenter over sample clouds via pairwise transport solves.

One step solves the pairwise problem from the current cloud to every
marginal, pushes the cloud through each recovered map, and averages the
mapped positions with the barycenter weights.  Iterating contracts toward
the weighted barycenter; the pairwise solves are independent and may run in
parallel, with the averaging done in fixed marginal order for determinism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import SampleSet
from .refinement import SolveConfig, solve
from .transportmap import MapEvaluator


@dataclass(frozen=True, eq=False)
class BarycenterProblem:
    """Marginals, weights and iteration controls for one barycenter run."""

    marginals: tuple[SampleSet, ...]
    weights: np.ndarray
    init: SampleSet | None = None
    config: SolveConfig = field(default_factory=SolveConfig)
    max_iters: int = 10
    tol: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        marg = tuple(self.marginals)
        if not marg:
            raise ValueError("need at least one marginal")
        dim = marg[0].dim
        if any(m.dim != dim for m in marg):
            raise ValueError("marginals must share one dimension")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(marg),):
            raise ValueError("one weight per marginal required")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        if self.init is not None and self.init.dim != dim:
            raise ValueError("initial cloud dimension mismatch")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        w.setflags(write=False)
        object.__setattr__(self, "marginals", marg)
        object.__setattr__(self, "weights", w)

    @property
    def start(self) -> SampleSet:
        return self.init if self.init is not None else self.marginals[0]


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    samples: SampleSet
    iterations: int
    displacements: tuple[float, ...]
    objectives: tuple[float, ...]


def _push_toward(current: SampleSet, marginal: SampleSet, config: SolveConfig):
    solution = solve(current, marginal, config)
    evaluator = MapEvaluator.from_solution(solution)
    return evaluator.evaluate_many(current.points), solution.objective


def _step(current: SampleSet, problem: BarycenterProblem):
    """One fixed-point update; returns the new cloud and the step objective."""
    indices = [i for i, w in enumerate(problem.weights) if w > 0.0]
    results: dict[int, tuple[np.ndarray, float]] = {}
    if problem.workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=problem.workers) as pool:
            futures = {
                i: pool.submit(_push_toward, current, problem.marginals[i], problem.config)
                for i in indices
            }
            for i, fut in futures.items():
                results[i] = fut.result()
    else:
        for i in indices:
            try:
                results[i] = _push_toward(current, problem.marginals[i], problem.config)
            except Exception as exc:
                raise RuntimeError(f"pairwise solve toward marginal {i} failed") from exc
    # fixed marginal order keeps the reduction deterministic
    new_points = np.zeros_like(current.points)
    objective = 0.0
    for i in indices:
        mapped, pair_objective = results[i]
        new_points += problem.weights[i] * mapped
        objective += problem.weights[i] * 2.0 * pair_objective  # squared distance
    return SampleSet(new_points), objective


def barycenter_step(current: SampleSet, problem: BarycenterProblem) -> SampleSet:
    """Map the cloud to every marginal and average with the weights."""
    if current.dim != problem.marginals[0].dim:
        raise ValueError("current cloud dimension mismatch")
    return _step(current, problem)[0]


def _support_diameter(problem: BarycenterProblem) -> float:
    points = np.vstack(
        [m.points for m in problem.marginals] + [problem.start.points]
    )
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def barycenter(problem: BarycenterProblem) -> BarycenterResult:
    """Iterate the fixed-point update until the cloud stops moving.

    Convergence: mean displacement per iteration at or below ``tol`` times the
    support diameter of all inputs, or ``max_iters`` reached.
    """
    current = problem.start
    scale = _support_diameter(problem)
    displacements: list[float] = []
    objectives: list[float] = []
    for _ in range(problem.max_iters):
        updated, objective = _step(current, problem)
        moved = float(
            np.mean(np.linalg.norm(updated.points - current.points, axis=1))
        )
        displacements.append(moved)
        objectives.append(objective)
        current = updated
        if moved <= problem.tol * scale:
            break
    return BarycenterResult(
        samples=current,
        iterations=len(displacements),
        displacements=tuple(displacements),
        objectives=tuple(objectives),
    )


def interpolate(
    source: SampleSet,
    target: SampleSet,
    t: float,
    config: SolveConfig = SolveConfig(),
    max_iters: int = 10,
    tol: float = 1e-3,
    workers: int = 1,
) -> SampleSet:
    """Displacement interpolation: the two-marginal barycenter at weights (1-t, t)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("interpolation parameter must lie in [0, 1]")
    problem = BarycenterProblem(
        marginals=(source, target),
        weights=np.array([1.0 - t, t]),
        config=config,
        max_iters=max_iters,
        tol=tol,
        workers=workers,
    )
    return barycenter(problem).samples
