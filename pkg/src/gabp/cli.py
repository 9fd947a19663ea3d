"""Command-line front end: solve, bench, analyze, gen, lsq.

Exit codes: 0 success/convergence, 1 usage or input error, 2 divergence.
Benchmark tables mirror the conventions of the iteration-count tables this
package reproduces: one row per (solver, acceleration) combination and a
"-" entry for diverging runs.  CSV outputs are byte-stable for fixed inputs;
wall-clock times appear only in the human-readable table.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from .acceleration import AccelConfig, accelerated_solve
from .classical import ClassicalOptions, optimal_sor_alpha
from .linalg import (
    MatrixMarketError,
    RectMatrix,
    SingularMatrixError,
    SpectralReport,
    SymSystem,
    ZeroDiagonalError,
    condition_number_normal,
    direct_solve_ge,
    dominance_class,
    parse_matrix_market,
    parse_vector,
    residual_norm_per_eq,
    spectral_radius_gabp_test,
    system_from_matrix_market,
    write_matrix_market,
    write_vector,
)
from .problems import load_instance
from .pseudoinverse import LeastSquaresDivergence, normal_equations_oracle, solve_least_squares
from .solver import SolveOptions, SolveReport

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGED = 2

GABP_SOLVERS = {
    "gabp-parallel": ("gabp", "parallel"),
    "gabp-serial": ("gabp", "serial"),
    "gabp-broadcast": ("gabp", "broadcast"),
}
CLASSICAL_SOLVERS = ("jacobi", "gs", "sor")
DEFAULT_BENCH = ["jacobi", "gs", "sor", "gabp-parallel", "gabp-serial"]

TABLE_LABELS = {
    "jacobi": "Jacobi",
    "gs": "GS",
    "sor": "Optimal SOR",
    "gabp-parallel": "Parallel GaBP",
    "gabp-serial": "Serial GaBP",
    "gabp-broadcast": "Broadcast GaBP",
}


@dataclass
class TraceRow:
    iteration: int
    max_change: float
    residual_per_eq: float


@dataclass
class BenchRow:
    problem: str
    solver: str
    accel: str
    converged: bool
    iterations: int
    final_residual: float
    wall_time: float


def trace_rows(report: SolveReport) -> list[TraceRow]:
    return [
        TraceRow(iteration=i + 1, max_change=c, residual_per_eq=r)
        for i, (c, r) in enumerate(zip(report.max_change_history, report.residual_history))
    ]


def write_trace_csv(path: str, report: SolveReport) -> None:
    lines = ["iteration,max_change,residual_per_eq"]
    for row in trace_rows(report):
        lines.append(f"{row.iteration},{row.max_change:.17g},{row.residual_per_eq:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_solver(system: SymSystem, solver: str, accel: str, epsilon: float,
               max_iter: int, schedule: str = "parallel",
               alpha: float | None = None) -> SolveReport:
    """Uniform entry point used by both the solve and bench commands."""
    cfg = AccelConfig(mode=accel) if accel != "none" else None
    if solver in GABP_SOLVERS:
        base, sched = GABP_SOLVERS[solver]
        opts = SolveOptions(epsilon=epsilon, max_iter=max_iter, schedule=sched)
        return accelerated_solve(base, system, opts, cfg)
    if solver == "gabp":
        opts = SolveOptions(epsilon=epsilon, max_iter=max_iter, schedule=schedule)
        return accelerated_solve("gabp", system, opts, cfg)
    if solver in ("jacobi", "gs"):
        opts = ClassicalOptions(epsilon=epsilon, max_iter=max_iter)
        return accelerated_solve(solver, system, opts, cfg)
    if solver == "sor":
        if alpha is None:
            best_alpha, report = optimal_sor_alpha(
                system, ClassicalOptions(epsilon=epsilon, max_iter=max_iter)
            )
            if accel == "none" or best_alpha is None:
                return report
            # accelerate at the grid-optimal weight found by the plain search
            alpha = best_alpha
        opts = ClassicalOptions(epsilon=epsilon, max_iter=max_iter, alpha=alpha)
        return accelerated_solve("sor", system, opts, cfg)
    raise ValueError(f"unknown solver {solver!r}")


def _read_system(matrix_path: str, rhs_path: str) -> SymSystem:
    with open(matrix_path) as fh:
        text = fh.read()
    with open(rhs_path) as fh:
        rhs = parse_vector(fh.read())
    return system_from_matrix_market(text, rhs)


def _print_vector(x) -> None:
    for v in x:
        print(f"{v:.6f}")


def cmd_solve(args) -> int:
    system = _read_system(args.matrix, args.rhs)
    report = run_solver(
        system, args.solver, args.accel, args.eps, args.max_iter,
        schedule=args.schedule, alpha=args.alpha,
    )
    if args.trace:
        write_trace_csv(args.trace, report)
    if not report.converged:
        print("diverged", file=sys.stderr)
        return EXIT_DIVERGED
    _print_vector(report.means)
    return EXIT_OK


def _split_solver_spec(spec: str) -> tuple[str, str]:
    if "+" in spec:
        solver, accel = spec.split("+", 1)
    else:
        solver, accel = spec, "none"
    if solver not in TABLE_LABELS:
        raise ValueError(f"unknown solver {solver!r}")
    if accel not in ("none", "aitken", "steffensen"):
        raise ValueError(f"unknown acceleration {accel!r}")
    return solver, accel


def run_bench(problem: str, solver_specs: list[str], epsilon: float, max_iter: int) -> list[BenchRow]:
    instance = load_instance(problem)
    rows = []
    for spec in solver_specs:
        solver, accel = _split_solver_spec(spec)
        t0 = time.perf_counter()
        report = run_solver(instance.system, solver, accel, epsilon, max_iter)
        wall = time.perf_counter() - t0
        res = residual_norm_per_eq(instance.system, report.means) if np.all(
            np.isfinite(report.means)
        ) else float("inf")
        rows.append(
            BenchRow(
                problem=instance.id,
                solver=solver,
                accel=accel,
                converged=report.converged,
                iterations=report.iterations,
                final_residual=res,
                wall_time=wall,
            )
        )
    return rows


def _row_label(row: BenchRow) -> str:
    label = TABLE_LABELS[row.solver]
    if row.accel != "none":
        label += f"+{row.accel.capitalize()}"
    return label


def render_bench_table(rows: list[BenchRow]) -> str:
    out = [f"{'Algorithm':<28} {'Iterations':>10} {'Residual':>12} {'Wall [ms]':>10}"]
    for row in rows:
        iters = str(row.iterations) if row.converged else "-"
        res = f"{row.final_residual:.3e}" if np.isfinite(row.final_residual) else "-"
        out.append(f"{_row_label(row):<28} {iters:>10} {res:>12} {row.wall_time * 1e3:>10.2f}")
    return "\n".join(out)


def render_bench_csv(rows: list[BenchRow]) -> str:
    out = ["problem,solver,accel,converged,iterations,final_residual"]
    for row in rows:
        iters = str(row.iterations) if row.converged else "-"
        res = f"{row.final_residual:.17g}" if np.isfinite(row.final_residual) else "-"
        out.append(
            f"{row.problem},{row.solver},{row.accel},{int(row.converged)},{iters},{res}"
        )
    return "\n".join(out)


def cmd_bench(args) -> int:
    solvers = args.solvers.split(",") if args.solvers else list(DEFAULT_BENCH)
    rows = run_bench(args.suite, solvers, args.eps, args.max_iter)
    if args.format == "table":
        print(f"suite: {args.suite} (epsilon={args.eps:g})")
        print(render_bench_table(rows))
    else:
        print(render_bench_csv(rows))
    return EXIT_OK


def analyze_system(system: SymSystem) -> SpectralReport:
    return SpectralReport(
        rho=spectral_radius_gabp_test(system),
        dominance=dominance_class(system),
        kappa=condition_number_normal(system),
    )


def cmd_analyze(args) -> int:
    with open(args.matrix) as fh:
        text = fh.read()
    rect = parse_matrix_market(text)
    if rect.m != rect.n:
        print(f"matrix is {rect.m}x{rect.n}, not square", file=sys.stderr)
        return EXIT_INPUT
    system = system_from_matrix_market(text, np.zeros(rect.m))
    report = analyze_system(system)
    print(f"rho(|I - D^-1 A|) = {report.rho:.4f}")
    print(f"diagonal dominance: {report.dominance}")
    kappa = "inf" if not np.isfinite(report.kappa) else f"{report.kappa:.4f}"
    print(f"condition number kappa = {kappa}")
    if report.dominance == "strict":
        print("verdict: Theorem 1: converges (strict diagonal dominance)")
    elif report.rho < 1.0:
        print("verdict: Theorem 2: converges (spectral radius < 1)")
    else:
        print("verdict: no guarantee (rho >= 1, not strictly dominant)")
    return EXIT_OK


def cmd_gen(args) -> int:
    name = args.problem if args.problem != "poisson" else f"poisson:{args.p}"
    instance = load_instance(name)
    matrix_path = f"{args.out_prefix}.mtx"
    rhs_path = f"{args.out_prefix}.rhs"
    with open(matrix_path, "w") as fh:
        fh.write(write_matrix_market(instance.system))
    with open(rhs_path, "w") as fh:
        fh.write(write_vector(instance.system.rhs))
    print(matrix_path)
    print(rhs_path)
    return EXIT_OK


def cmd_lsq(args) -> int:
    with open(args.matrix) as fh:
        rect = parse_matrix_market(fh.read())
    with open(args.rhs) as fh:
        y = parse_vector(fh.read())
    if y.size != rect.m:
        print(f"rhs length {y.size} != row count {rect.m}", file=sys.stderr)
        return EXIT_INPUT
    options = SolveOptions(
        schedule="serial", epsilon=args.eps, max_iter=args.max_iter
    )
    try:
        x = solve_least_squares(rect, y, args.psi, options)
    except LeastSquaresDivergence as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DIVERGED
    _print_vector(x)
    if args.check:
        oracle = normal_equations_oracle(rect, y, args.psi)
        dev = float(np.max(np.abs(x - oracle)))
        print(f"oracle deviation: {dev:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gabp",
        description="Gaussian belief propagation linear solver and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a system from Matrix Market + vector files")
    p.add_argument("--matrix", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--solver", default="gabp", choices=["gabp", "jacobi", "gs", "sor"])
    p.add_argument("--schedule", default="parallel", choices=["parallel", "serial", "broadcast"])
    p.add_argument("--accel", default="none", choices=["none", "aitken", "steffensen"])
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=None,
                   help="SOR weight; omitted = grid-optimal")
    p.add_argument("--trace", default=None, help="write per-iteration CSV here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a built-in benchmark suite")
    p.add_argument("--suite", required=True,
                   help="toy3 | cdma3 | cdma4 | nonpsd3 | poisson:<p>")
    p.add_argument("--solvers", default=None,
                   help="comma list, e.g. jacobi,gs,sor,gabp-serial+steffensen")
    p.add_argument("--format", default="table", choices=["table", "csv"])
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="matrix convergence diagnostics")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gen", help="write a built-in problem to files")
    p.add_argument("--problem", required=True,
                   choices=["toy3", "cdma3", "cdma4", "nonpsd3", "poisson"])
    p.add_argument("--p", type=int, default=3, help="grid size for poisson")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("lsq", help="regularized least squares via the augmented system")
    p.add_argument("--matrix", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--psi", type=float, default=1e-6)
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_lsq)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (MatrixMarketError, ZeroDiagonalError, SingularMatrixError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
