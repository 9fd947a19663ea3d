"""Aitken delta-squared extrapolation and Steffensen restarts.

Both wrappers apply to any iterative solver in the package.  Steffensen
alternates two base sweeps with one extrapolate-and-restart step: for GaBP
the restart replaces the mean-message vector (precision messages settle
monotonically on their own and are left alone), for the classical solvers it
replaces the solution vector.  One reported iteration is one step of the
accelerated sequence, i.e. a two-sweep cycle.

Componentwise Aitken is only sound where a scalar geometric model fits the
three samples.  Message sequences of loopy GaBP routinely violate that
model (their update maps have complex or sign-tied dominant eigenvalues,
e.g. +/-0.396j on the 3-user CDMA system), and ungated extrapolation then
amplifies those components and can destabilize an otherwise convergent run.
The restart therefore applies a per-component stability gate: extrapolate
only where the second difference is comparable to the first differences.

Aitken mode never restarts: the base solver runs untouched while a trailing
window of three tentative solutions feeds an extrapolated sequence, and the
run stops once that sequence settles.  Its iteration count stays in base
sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import ClassicalOptions, make_step
from .linalg import SymSystem, residual_norm_per_eq
from .solver import (
    SingularSubgraphError,
    SolveOptions,
    SolveReport,
    build_graph,
    infer_marginals,
    initial_state,
    sweep,
)

GABP = "gabp"
CLASSICAL = ("jacobi", "gs", "sor")


@dataclass
class AccelConfig:
    mode: str = "steffensen"  # none | aitken | steffensen
    denom_guard: float = 1e-12
    target: str | None = None  # solution_vector | mean_messages; None = per solver
    # extrapolate a component only if |second difference| >= stability * |first differences|
    stability: float = 1.5

    def __post_init__(self):
        if self.mode not in ("none", "aitken", "steffensen"):
            raise ValueError(f"unknown acceleration mode {self.mode!r}")
        if self.denom_guard <= 0.0:
            raise ValueError("denom_guard must be positive")
        if self.target not in (None, "solution_vector", "mean_messages"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.stability < 0.0:
            raise ValueError("stability must be >= 0")


def aitken_extrapolate(x_n, x_n1, x_n2, guard: float = 1e-12) -> np.ndarray:
    """Componentwise y = x_n - (x_{n+1} - x_n)^2 / (x_{n+2} - 2 x_{n+1} + x_n).

    Components whose second difference is below the guard pass through
    x_{n+2} unmodified, which keeps the formula harmless at convergence.
    """
    x_n = np.asarray(x_n, dtype=float)
    x_n1 = np.asarray(x_n1, dtype=float)
    x_n2 = np.asarray(x_n2, dtype=float)
    if not (x_n.shape == x_n1.shape == x_n2.shape):
        raise ValueError("the three iterates must have equal length")
    denom = x_n2 - 2.0 * x_n1 + x_n
    out = x_n2.copy()
    ok = np.abs(denom) >= guard
    diff = x_n1 - x_n
    out[ok] = x_n[ok] - diff[ok] * diff[ok] / denom[ok]
    return out


class _GabpStepper:
    """One-sweep-at-a-time view of the GaBP engine."""

    target_kind = "mean_messages"

    def __init__(self, system: SymSystem, options: SolveOptions):
        self.system = system
        self.options = options
        self.graph = build_graph(system)
        self.state = initial_state(self.graph, options.schedule)

    def step(self) -> float:
        self.state, max_change = sweep(self.graph, self.state, self.options)
        return max_change

    def solution(self) -> np.ndarray:
        return infer_marginals(self.graph, self.state)[0]

    def report_extras(self):
        means, precs = infer_marginals(self.graph, self.state)
        return means, precs, self.graph.is_tree()

    def target(self, kind: str) -> np.ndarray:
        if kind == "mean_messages":
            return self.state.mean.copy()
        return self.solution()

    def set_target(self, v: np.ndarray, kind: str) -> None:
        if kind != "mean_messages":
            raise ValueError("GaBP restarts replace the mean messages only")
        self.state.mean = np.asarray(v, dtype=float).copy()

    def blown(self) -> bool:
        arrays = (self.state.prec, self.state.mean)
        if any(not np.all(np.isfinite(a)) for a in arrays):
            return True
        biggest = max(float(np.max(np.abs(a), initial=0.0)) for a in arrays)
        return biggest > self.options.blowup


class _ClassicalStepper:
    """Same interface over a classical step function."""

    target_kind = "solution_vector"

    def __init__(self, kind: str, system: SymSystem, options: ClassicalOptions):
        self.system = system
        self.options = options
        self._step = make_step(system, kind, options.alpha)
        self.x = (
            np.array(options.x0, dtype=float)
            if options.x0 is not None
            else system.rhs.copy()
        )

    def step(self) -> float:
        x_new = self._step(self.x)
        if not np.all(np.isfinite(x_new)):
            self.x = x_new
            return np.inf
        change = float(np.max(np.abs(x_new - self.x), initial=0.0))
        self.x = x_new
        return change

    def solution(self) -> np.ndarray:
        return self.x.copy()

    def report_extras(self):
        return self.x.copy(), None, None

    def target(self, kind: str) -> np.ndarray:
        if kind != "solution_vector":
            raise ValueError("classical solvers extrapolate the solution vector")
        return self.x.copy()

    def set_target(self, v: np.ndarray, kind: str) -> None:
        self.x = np.asarray(v, dtype=float).copy()

    def blown(self) -> bool:
        return not np.all(np.isfinite(self.x)) or bool(
            np.max(np.abs(self.x), initial=0.0) > self.options.blowup
        )


def _make_stepper(base_solver: str, system: SymSystem, options):
    if base_solver == GABP:
        return _GabpStepper(system, options or SolveOptions())
    if base_solver in CLASSICAL:
        return _ClassicalStepper(base_solver, system, options or ClassicalOptions())
    raise ValueError(f"unknown base solver {base_solver!r}")


def _finish(stepper, converged, diverged, iterations, histories, means=None) -> SolveReport:
    sol, precs, tree = stepper.report_extras()
    return SolveReport(
        converged=converged,
        diverged=diverged,
        iterations=iterations,
        means=sol if means is None else means,
        precisions=precs,
        max_change_history=histories[0],
        residual_history=histories[1],
        means_history=histories[2],
        precisions_exact=tree,
    )


def gated_extrapolate(x0, x1, x2, guard: float, stability: float) -> np.ndarray:
    """Aitken step restricted to components passing the geometric-fit gate."""
    y = aitken_extrapolate(x0, x1, x2, guard)
    d1 = np.abs(x1 - x0)
    d2 = np.abs(x2 - x1)
    gate = np.abs(x2 - 2.0 * x1 + x0) >= stability * np.maximum(d1, d2)
    return np.where(gate, y, x2)


def steffensen_solve(
    base_solver: str,
    system: SymSystem,
    options=None,
    accel: AccelConfig | None = None,
) -> SolveReport:
    """Steffensen's iterations around a base solver.

    Each accelerated step runs two base sweeps from the current state,
    extrapolates the three target samples componentwise and restarts the
    solver from the (gated) extrapolant.  The run stops when a base sweep
    already meets the base convergence test, when successive extrapolants
    agree to epsilon, on blowup, or at the sweep cap.  ``iterations`` counts
    accelerated steps; histories carry one row per accelerated step.
    """
    accel = accel or AccelConfig(mode="steffensen")
    stepper = _make_stepper(base_solver, system, options)
    kind = accel.target or stepper.target_kind
    eps = stepper.options.epsilon
    max_sweeps = stepper.options.max_iter
    histories: tuple[list, list, list] = ([], [], [])
    sweeps = 0
    cycles = 0
    converged = diverged = False
    y_prev = None

    def base_sweep():
        nonlocal sweeps, converged, diverged, cycle_change
        change = stepper.step()
        sweeps += 1
        cycle_change = max(cycle_change, change)
        if stepper.blown():
            diverged = True
        elif change < eps:
            converged = True

    def record():
        means = stepper.solution()
        finite = bool(np.all(np.isfinite(means)))
        histories[0].append(cycle_change)
        histories[1].append(
            residual_norm_per_eq(system, means) if finite else np.inf
        )
        histories[2].append(means)

    try:
        while sweeps < max_sweeps and not converged and not diverged:
            cycles += 1
            cycle_change = 0.0
            x0 = stepper.target(kind)
            base_sweep()
            if converged or diverged or sweeps >= max_sweeps:
                record()
                break
            x1 = stepper.target(kind)
            base_sweep()
            if converged or diverged or sweeps >= max_sweeps:
                record()
                break
            x2 = stepper.target(kind)
            y = gated_extrapolate(x0, x1, x2, accel.denom_guard, accel.stability)
            stepper.set_target(y, kind)
            record()
            if y_prev is not None and float(np.max(np.abs(y - y_prev), initial=0.0)) < eps:
                converged = True
                break
            y_prev = y
    except SingularSubgraphError:
        diverged = True
        if len(histories[0]) < cycles:
            record()
    if not converged and not diverged:
        diverged = True  # sweep cap exhausted
    return _finish(stepper, converged, diverged, cycles, histories)


def aitken_solve(
    base_solver: str,
    system: SymSystem,
    options=None,
    accel: AccelConfig | None = None,
) -> SolveReport:
    """Non-restarting Aitken acceleration over the tentative solutions.

    The base solver runs untouched; a trailing window of three tentative
    solutions feeds the extrapolated sequence y_t, and the run stops once
    successive y_t agree to epsilon (or the base solver converges first).
    ``iterations`` counts base sweeps.
    """
    accel = accel or AccelConfig(mode="aitken")
    stepper = _make_stepper(base_solver, system, options)
    eps = stepper.options.epsilon
    max_sweeps = stepper.options.max_iter
    histories: tuple[list, list, list] = ([], [], [])
    sweeps = 0
    converged = diverged = False
    y_prev = None
    y_final = None
    try:
        while sweeps < max_sweeps:
            change = stepper.step()
            sweeps += 1
            means = stepper.solution()
            finite = bool(np.all(np.isfinite(means)))
            histories[0].append(change)
            histories[1].append(residual_norm_per_eq(system, means) if finite else np.inf)
            histories[2].append(means)
            if stepper.blown():
                diverged = True
                break
            if change < eps:
                converged = True
                break
            window = histories[2][-3:]
            if len(window) == 3:
                y = aitken_extrapolate(window[0], window[1], window[2], accel.denom_guard)
                if y_prev is not None:
                    if float(np.max(np.abs(y - y_prev), initial=0.0)) < eps:
                        converged = True
                        y_final = y
                        break
                y_prev = y
    except SingularSubgraphError:
        diverged = True
    if not converged and not diverged:
        diverged = True
    return _finish(stepper, converged, diverged, sweeps, histories, means=y_final)


def accelerated_solve(base_solver, system, options=None, accel=None) -> SolveReport:
    """Dispatch on accel.mode; mode 'none' runs the base solver untouched."""
    from . import classical, solver

    mode = accel.mode if accel is not None else "none"
    if mode == "steffensen":
        return steffensen_solve(base_solver, system, options, accel)
    if mode == "aitken":
        return aitken_solve(base_solver, system, options, accel)
    if base_solver == GABP:
        return solver.solve(system, options or SolveOptions())
    if base_solver == "jacobi":
        return classical.jacobi_solve(system, options)
    if base_solver == "gs":
        return classical.gauss_seidel_solve(system, options)
    if base_solver == "sor":
        return classical.sor_solve(system, options)
    raise ValueError(f"unknown base solver {base_solver!r}")
