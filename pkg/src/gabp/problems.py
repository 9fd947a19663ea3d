"""Built-in benchmark instances and random-instance generators.

The named instances are the desk-scale systems used throughout the
benchmark tables: a 3x3 tree, the two Gold-code CDMA decorrelator
correlation matrices (hard-coded; the shift-register construction is out of
scope), a symmetric indefinite 3x3 on which the stationary methods diverge,
and the five-point finite-difference discretization of the 2-D Poisson
equation with zero Dirichlet boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import SymSystem

SUITE_NAMES = ("toy3", "cdma3", "cdma4", "nonpsd3")  # plus poisson:<p>


@dataclass(frozen=True)
class ProblemInstance:
    id: str
    system: SymSystem
    reference_solution: np.ndarray | None = None
    # iteration counts reported by the benchmark tables, keyed by solver label
    reference_iterations: dict[str, int] = field(default_factory=dict)
    classical_diverges: bool = False


def gen_toy3() -> ProblemInstance:
    """3x3 tree system: A = [[1,-2,3],[-2,1,0],[3,0,1]], b = (-6, 0, 2)."""
    system = SymSystem(
        diag=np.array([1.0, 1.0, 1.0]),
        offdiag={(0, 1): -2.0, (0, 2): 3.0},
        rhs=np.array([-6.0, 0.0, 2.0]),
    )
    return ProblemInstance(
        id="toy3",
        system=system,
        reference_solution=np.array([1.0, 2.0, -1.0]),
    )


def gen_cdma(n: int) -> ProblemInstance:
    """Gold-code decorrelator correlation matrix R_3 or R_4, b = all-ones."""
    if n == 3:
        r = np.array([[7, -1, 3], [-1, 7, -5], [3, -5, 7]], dtype=float) / 7.0
        iters = {
            "jacobi": 111,
            "gs": 26,
            "parallel-gabp": 23,
            "optimal-sor": 17,
            "serial-gabp": 16,
            "parallel-gabp+steffensen": 13,
            "serial-gabp+steffensen": 9,
        }
    elif n == 4:
        r = (
            np.array(
                [[7, -1, 3, 3], [-1, 7, 3, -1], [3, 3, 7, -1], [3, -1, -1, 7]],
                dtype=float,
            )
            / 7.0
        )
        iters = {
            "jacobi": 24,
            "gs": 26,
            "parallel-gabp": 24,
            "optimal-sor": 14,
            "serial-gabp": 13,
            "parallel-gabp+steffensen": 13,
            "serial-gabp+steffensen": 7,
        }
    else:
        raise ValueError("only the 3- and 4-user correlation matrices are defined")
    system = SymSystem.from_dense(r, np.ones(n))
    return ProblemInstance(id=f"cdma{n}", system=system, reference_iterations=iters)


def gen_nonpsd3() -> ProblemInstance:
    """Symmetric indefinite 3x3 on which Jacobi/GS/SOR diverge."""
    a = np.array([[1, 2, 3], [2, 2, 1], [3, 1, 1]], dtype=float)
    system = SymSystem.from_dense(a, np.ones(3))
    return ProblemInstance(
        id="nonpsd3",
        system=system,
        reference_iterations={
            "parallel-gabp": 38,
            "serial-gabp": 25,
            "parallel-gabp+steffensen": 21,
            "serial-gabp+steffensen": 14,
        },
        classical_diverges=True,
    )


def gen_poisson(p: int, f: float = -1.0) -> ProblemInstance:
    """Five-point stencil for the 2-D Poisson equation on a p x p grid.

    Natural row ordering (left to right, bottom to top), grid spacing
    h = 1/(p+1), zero Dirichlet boundary; the right-hand side is the scaled
    constant source, b(i, j) = -f * h^2.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    h = 1.0 / (p + 1)
    n = p * p
    diag = np.full(n, 4.0)
    off: dict[tuple[int, int], float] = {}
    for j in range(p):  # grid row (y), bottom to top
        for i in range(p):  # grid column (x), left to right
            idx = j * p + i
            if i + 1 < p:
                off[(idx, idx + 1)] = -1.0
            if j + 1 < p:
                off[(idx, idx + p)] = -1.0
    rhs = np.full(n, -f * h * h)
    system = SymSystem(diag=diag, offdiag=off, rhs=rhs)
    iters = {}
    if p == 3 and f == -1.0:
        iters = {
            "jacobi": 354,
            "gs": 136,
            "optimal-sor": 37,
            "parallel-gabp": 134,
            "serial-gabp": 73,
            "parallel-gabp+aitken": 25,
            "parallel-gabp+steffensen": 56,
            "serial-gabp+steffensen": 32,
        }
    return ProblemInstance(id=f"poisson:{p}", system=system, reference_iterations=iters)


def load_instance(name: str) -> ProblemInstance:
    """Look up a named instance; 'poisson:<p>' carries its grid size."""
    if name == "toy3":
        return gen_toy3()
    if name == "cdma3":
        return gen_cdma(3)
    if name == "cdma4":
        return gen_cdma(4)
    if name == "nonpsd3":
        return gen_nonpsd3()
    if name.startswith("poisson:"):
        return gen_poisson(int(name.split(":", 1)[1]))
    raise ValueError(f"unknown problem {name!r}")


def decorrelator_detect(system: SymSystem, y, solve_fn: Callable) -> np.ndarray:
    """Decorrelator decisions sign(R^-1 y); sign(0) maps to +1."""
    solution = solve_fn(system.with_rhs(y))
    solution = np.asarray(solution, dtype=float)
    return np.where(solution >= 0.0, 1.0, -1.0)


def gen_random(kind: str, n: int, seed: int) -> ProblemInstance:
    """Deterministic random instances for property tests.

    'tree' is a uniform random recursive tree with magnitude-dominant
    (randomly signed) diagonals, 'strict_dominant' guarantees
    dominance_class == 'strict' by setting |A_ii| = row-abs-sum + 1, and
    'spd' is M^T M + I, explicitly symmetrized.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "tree":
        off: dict[tuple[int, int], float] = {}
        for child in range(1, n):
            parent = int(rng.integers(0, child))
            w = float(rng.uniform(0.2, 1.5)) * (1.0 if rng.random() < 0.5 else -1.0)
            off[(parent, child)] = w
        rowsum = np.zeros(n)
        for (i, j), v in off.items():
            rowsum[i] += abs(v)
            rowsum[j] += abs(v)
        signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        diag = signs * (rowsum + rng.uniform(0.5, 1.5, size=n))
        rhs = rng.standard_normal(n)
        system = SymSystem(diag=diag, offdiag=off, rhs=rhs)
    elif kind == "strict_dominant":
        off = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    w = float(rng.uniform(-1.0, 1.0))
                    if w != 0.0:
                        off[(i, j)] = w
        rowsum = np.zeros(n)
        for (i, j), v in off.items():
            rowsum[i] += abs(v)
            rowsum[j] += abs(v)
        diag = rowsum + 1.0
        rhs = rng.standard_normal(n)
        system = SymSystem(diag=diag, offdiag=off, rhs=rhs)
    elif kind == "spd":
        m = rng.standard_normal((n, n))
        a = m.T @ m + np.eye(n)
        a = (a + a.T) / 2.0
        system = SymSystem.from_dense(a, rng.standard_normal(n))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return ProblemInstance(id=f"{kind}-{n}-{seed}", system=system)
