"""Command-line front end: solve, barycenter, interpolate, generate, metrics.

Point clouds travel as headerless CSV (one point per line); couplings as
sparse triplet CSV; telemetry as JSON lines.  All numeric output is printed
with 17 significant digits so identical runs produce identical bytes.
Exit codes: 0 success, 2 input/parse problems, 3 internal infeasibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import generators
from .barycenter import BarycenterProblem, barycenter, interpolate
from .errors import InfeasibleError, InternalError, OutOfSupportError, ParseError
from .geometry import SampleSet, load_samples
from .refinement import SolveConfig, solve
from .transportmap import (
    MapEvaluator,
    distance_error,
    gaussian_affine_map,
    map_error,
    push_samples,
    wasserstein_distance,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _json_dumps(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""

    def render(x):
        if isinstance(x, dict):
            items = ", ".join(f"{json.dumps(k)}: {render(v)}" for k, v in x.items())
            return "{" + items + "}"
        if isinstance(x, (list, tuple)):
            return "[" + ", ".join(render(v) for v in x) + "]"
        if isinstance(x, bool) or x is None:
            return json.dumps(x)
        if isinstance(x, float):
            return _fmt(x)
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, np.floating):
            return _fmt(float(x))
        return json.dumps(x)

    return render(obj)


def _write_points_csv(path: Path, points: np.ndarray):
    lines = [",".join(_fmt(v) for v in row) for row in np.atleast_2d(points)]
    path.write_text("\n".join(lines) + "\n")


def _read_samples(path: str, header: bool = False) -> SampleSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_samples(fh, header=header)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def _parse_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ParseError(f"expected comma-separated numbers, got {text!r}") from None


def _apply_config_file(args: argparse.Namespace):
    """Values from --config override the parsed flags (matching dest names)."""
    if not getattr(args, "config", None):
        return
    try:
        overrides = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read config {args.config}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {args.config} is not valid JSON: {exc}") from None
    if not isinstance(overrides, dict):
        raise ParseError("config file must hold a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ParseError(f"config key {key!r} matches no option")
        setattr(args, dest, value)


def _solve_config(args: argparse.Namespace) -> SolveConfig:
    return SolveConfig(
        max_levels=int(args.levels),
        n_min=int(args.n_min),
        policy=args.policy.replace("-", "_"),
        neighbor_expansion=not args.no_neighbor_expansion,
        density_model=args.density,
        quadrature_order=int(args.quadrature_order),
    )


def _add_solver_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--levels", type=int, default=5, help="refinement levels")
    parser.add_argument("--n-min", type=int, default=10,
                        help="segments above this sample count get split")
    parser.add_argument("--policy", choices=["standard", "longest-axis"],
                        default="standard")
    parser.add_argument("--density", choices=["linear", "uniform"], default="linear")
    parser.add_argument("--no-neighbor-expansion", action="store_true",
                        help="restrict the pattern to children of active pairs")
    parser.add_argument("--quadrature-order", type=int, default=32)
    parser.add_argument("--header", action="store_true",
                        help="input CSVs carry a header row")
    parser.add_argument("--config", help="JSON file whose entries override flags")


def cmd_solve(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    src = _read_samples(args.src, args.header)
    dst = _read_samples(args.dst, args.header)
    if src.dim != dst.dim:
        raise ParseError(
            f"dimension mismatch: {args.src} has d={src.dim}, {args.dst} has d={dst.dim}"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _solve_config(args)

    records = []
    try:
        solution = solve(src, dst, config, on_level=records.append)
    except InternalError:
        raise
    with open(out / "levels.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_json_dumps(record) + "\n")

    final = solution.final
    with open(out / "coupling.csv", "w", encoding="utf-8") as fh:
        fh.write("source_cell_linear_index,target_cell_linear_index,lambda\n")
        for k in final.coupling.support(0.0).tolist():
            i = final.source.grid.linear_index(final.source.cells[final.pattern.rows[k]])
            j = final.target.grid.linear_index(final.target.cells[final.pattern.cols[k]])
            fh.write(f"{i},{j},{_fmt(final.coupling.values[k])}\n")

    evaluator = MapEvaluator.from_solution(solution)
    mapped = push_samples(evaluator, src)
    _write_points_csv(out / "mapped.csv", mapped.points)

    e1 = None
    if args.reference_map:
        table = _read_samples(args.reference_map).points
        if table.shape != (len(src), 2 * src.dim):
            raise ParseError(
                "reference map table must pair each input point with its image "
                f"({len(src)} rows of {2 * src.dim} fields)"
            )
        expected = table[:, src.dim:]
        e1 = float(np.sqrt(np.mean(np.sum((mapped.points - expected) ** 2, axis=1))))
    w = wasserstein_distance(solution)
    e2 = distance_error(w, args.w_reference) if args.w_reference is not None else None
    metrics = {
        "level": final.level,
        "E1_source_side": e1,
        "W": w,
        "E2": e2,
    }
    (out / "metrics.json").write_text(_json_dumps(metrics) + "\n")
    print(_json_dumps(metrics))
    return EXIT_OK


def cmd_barycenter(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    clouds = [_read_samples(path, args.header) for path in args.marginals]
    if len(clouds) < 2:
        raise ParseError("need at least two marginal files")
    if args.weights:
        weights = _parse_floats(args.weights)
        if weights.size != len(clouds):
            raise ParseError(
                f"{weights.size} weights for {len(clouds)} marginals"
            )
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ParseError(f"weights sum to {weights.sum()!r}, expected 1")
        weights = weights / weights.sum()
    else:
        weights = np.full(len(clouds), 1.0 / len(clouds))
    problem = BarycenterProblem(
        marginals=tuple(clouds),
        weights=weights,
        config=_solve_config(args),
        max_iters=int(args.iters),
        tol=float(args.tol),
        workers=int(args.workers),
    )
    result = barycenter(problem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_points_csv(out / "barycenter.csv", result.samples.points)
    with open(out / "history.jsonl", "w", encoding="utf-8") as fh:
        for it, (moved, objective) in enumerate(
            zip(result.displacements, result.objectives), start=1
        ):
            fh.write(
                _json_dumps(
                    {"iteration": it, "mean_displacement": moved, "objective": objective}
                )
                + "\n"
            )
    print(_json_dumps({"iterations": result.iterations}))
    return EXIT_OK


def cmd_interpolate(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    src = _read_samples(args.src, args.header)
    dst = _read_samples(args.dst, args.header)
    if src.dim != dst.dim:
        raise ParseError(
            f"dimension mismatch: {args.src} has d={src.dim}, {args.dst} has d={dst.dim}"
        )
    if not 0.0 <= args.t <= 1.0:
        raise ParseError("--t must lie in [0, 1]")
    cloud = interpolate(
        src, dst, float(args.t),
        config=_solve_config(args),
        max_iters=int(args.iters),
        tol=float(args.tol),
        workers=int(args.workers),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_points_csv(out / "interpolated.csv", cloud.points)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    if args.shape == "gaussian":
        mean = _parse_floats(args.mean)
        cov_flat = _parse_floats(args.cov)
        d = mean.size
        if cov_flat.size != d * d:
            raise ParseError(f"covariance needs {d * d} entries, got {cov_flat.size}")
        cov = cov_flat.reshape(d, d)
        try:
            points = generators.gaussian_cloud(rng, args.n, mean, cov)
        except np.linalg.LinAlgError:
            raise ParseError("covariance matrix is not positive definite") from None
    elif args.shape == "uniform-square":
        points = generators.uniform_square(rng, args.n)
    elif args.shape == "uniform-cross":
        points = generators.uniform_cross(rng, args.n)
    elif args.shape == "cuberoot-target":
        points = generators.cube_root_target(rng, args.n)
    else:  # unreachable behind argparse choices
        raise ParseError(f"unknown shape {args.shape}")
    _write_points_csv(Path(args.out), points)

    if args.reference_out:
        if args.shape != "gaussian":
            raise ParseError("--reference-out only applies to gaussian clouds")
        if not (args.target_mean and args.target_cov):
            raise ParseError("--reference-out needs --target-mean and --target-cov")
        tmean = _parse_floats(args.target_mean)
        tcov_flat = _parse_floats(args.target_cov)
        if tcov_flat.size != tmean.size ** 2:
            raise ParseError("target covariance size mismatch")
        tcov = tcov_flat.reshape(tmean.size, tmean.size)
        try:
            reference = gaussian_affine_map(
                _parse_floats(args.mean), cov, tmean, tcov
            )
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        table = np.hstack([points, reference(points)])
        _write_points_csv(Path(args.reference_out), table)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    mapped = _read_samples(args.mapped).points
    reference = _read_samples(args.reference).points
    d = mapped.shape[1]
    if reference.shape == mapped.shape:
        expected = reference
    elif reference.shape == (mapped.shape[0], 2 * d):
        expected = reference[:, d:]
    else:
        raise ParseError("reference must hold images, or (point, image) pairs")
    e1 = float(np.sqrt(np.mean(np.sum((mapped - expected) ** 2, axis=1))))
    w = None
    e2 = None
    if args.metrics:
        try:
            w = json.loads(Path(args.metrics).read_text()).get("W")
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read metrics file: {exc}") from None
    if args.w_reference is not None and w is not None:
        e2 = distance_error(w, args.w_reference)
    print(_json_dumps({"E1_source_side": e1, "W": w, "E2": e2}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridot",
        description="Sample-based optimal transport on adaptively refined grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_workers = int(os.environ.get("OT_WORKERS", "1"))

    p_solve = sub.add_parser("solve", help="pairwise transport between two clouds")
    p_solve.add_argument("--src", required=True, help="source point CSV")
    p_solve.add_argument("--dst", required=True, help="target point CSV")
    p_solve.add_argument("--out", required=True, help="output directory")
    p_solve.add_argument("--reference-map",
                         help="CSV of (point, reference image) pairs for the map error")
    p_solve.add_argument("--w-reference", type=float,
                         help="reference distance for the distance error")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bary = sub.add_parser("barycenter", help="weighted barycenter of clouds")
    p_bary.add_argument("marginals", nargs="+", help="marginal point CSVs")
    p_bary.add_argument("--weights", help="comma-separated weights (default uniform)")
    p_bary.add_argument("--out", required=True)
    p_bary.add_argument("--iters", type=int, default=10)
    p_bary.add_argument("--tol", type=float, default=1e-3)
    p_bary.add_argument("--workers", type=int, default=default_workers,
                        help="parallel pairwise solves per step")
    _add_solver_flags(p_bary)
    p_bary.set_defaults(func=cmd_barycenter)

    p_interp = sub.add_parser("interpolate", help="displacement interpolation")
    p_interp.add_argument("--src", required=True)
    p_interp.add_argument("--dst", required=True)
    p_interp.add_argument("--t", type=float, required=True)
    p_interp.add_argument("--out", required=True)
    p_interp.add_argument("--iters", type=int, default=10)
    p_interp.add_argument("--tol", type=float, default=1e-3)
    p_interp.add_argument("--workers", type=int, default=default_workers)
    _add_solver_flags(p_interp)
    p_interp.set_defaults(func=cmd_interpolate)

    p_gen = sub.add_parser("generate", help="benchmark sample clouds")
    p_gen.add_argument("shape", choices=[
        "gaussian", "uniform-square", "uniform-cross", "cuberoot-target",
    ])
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--mean", default="0,0", help="gaussian mean")
    p_gen.add_argument("--cov", default="1,0,0,1", help="gaussian covariance, row-major")
    p_gen.add_argument("--target-mean", help="image gaussian mean for the reference map")
    p_gen.add_argument("--target-cov", help="image gaussian covariance")
    p_gen.add_argument("--reference-out",
                       help="write (point, reference image) pairs to this CSV")
    p_gen.set_defaults(func=cmd_generate)

    p_metrics = sub.add_parser("metrics", help="map error from mapped + reference CSVs")
    p_metrics.add_argument("--mapped", required=True)
    p_metrics.add_argument("--reference", required=True)
    p_metrics.add_argument("--metrics", help="metrics.json from a solve (for W)")
    p_metrics.add_argument("--w-reference", type=float)
    p_metrics.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OutOfSupportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InternalError, InfeasibleError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
