"""Pairwise Gaussian graphical model derived from a symmetric system.

One node per unknown, one undirected edge per off-diagonal nonzero.  Node i
carries the prior N(b_i / A_ii, 1 / A_ii); each directed edge (i -> j) gets a
dense integer id so message buffers are flat arrays.  The graph also
precomputes the index plumbing that lets a whole message sweep run as a few
vectorized scatter-adds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SymSystem, ZeroDiagonalError


class DegenerateProductError(ValueError):
    """Gaussian product with exactly cancelling precisions is improper."""


@dataclass(frozen=True)
class ScalarGaussian:
    """A scalar Gaussian in (mean, precision) form.

    Negative precision is allowed: loopy GaBP intermediates are routinely
    improper even when the final marginals are not.
    """

    mean: float
    prec: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.prec)):
            raise ValueError("mean and precision must be finite")


def gaussian_product(a: ScalarGaussian, b: ScalarGaussian) -> ScalarGaussian:
    """Product of two scalar Gaussians, up to normalization.

    The densities multiply to another Gaussian with precision P_a + P_b and
    precision-weighted mean; exactly cancelling precisions would leave an
    improper flat factor and are rejected.
    """
    prec = a.prec + b.prec
    if prec == 0.0:
        raise DegenerateProductError("precisions cancel exactly")
    mean = (a.prec * a.mean + b.prec * b.mean) / prec
    return ScalarGaussian(mean=mean, prec=prec)


class GaussianGraph:
    """Immutable model: node priors, sorted neighbor lists, edge indexing.

    Directed edges are numbered grouped by source node with neighbors
    ascending, so edge ids are dense in [0, 2 * #offdiag).  ``rev`` maps each
    edge to its reverse, and the ``excl_*`` arrays enumerate, for every edge
    (i -> j), the incoming edges (k -> i) with k != j in ascending k order;
    scatter-adding over them reproduces the scalar exclusion sums bitwise.
    """

    def __init__(self, system: SymSystem):
        zero_rows = np.flatnonzero(system.diag == 0.0)
        if zero_rows.size:
            raise ZeroDiagonalError(
                f"zero diagonal entry at row {int(zero_rows[0])}: "
                "node priors need b_i / A_ii"
            )
        n = system.n
        self.system = system
        self.n = n
        self.prior_prec = system.diag.copy()
        self.prior_mean = system.rhs / system.diag
        self.prior_prec.setflags(write=False)
        self.prior_mean.setflags(write=False)

        nbr: list[list[int]] = [[] for _ in range(n)]
        for (i, j) in system.offdiag:
            nbr[i].append(j)
            nbr[j].append(i)
        self.neighbors = [sorted(v) for v in nbr]

        self.edge_index: dict[tuple[int, int], int] = {}
        src, dst, coeff = [], [], []
        for i in range(n):
            for j in self.neighbors[i]:
                self.edge_index[(i, j)] = len(src)
                src.append(i)
                dst.append(j)
                coeff.append(system.offdiag[(i, j) if i < j else (j, i)])
        self.src = np.array(src, dtype=np.intp)
        self.dst = np.array(dst, dtype=np.intp)
        self.coeff = np.array(coeff)
        self.rev = np.array(
            [self.edge_index[(j, i)] for i, j in zip(src, dst)], dtype=np.intp
        )

        # incoming edge ids per node, source-ascending
        self.in_edges = [
            np.array([self.edge_index[(k, i)] for k in self.neighbors[i]], dtype=np.intp)
            for i in range(n)
        ]
        excl_edge, excl_pos = [], []
        for e, (i, j) in enumerate(zip(src, dst)):
            for k in self.neighbors[i]:
                if k != j:
                    excl_edge.append(self.edge_index[(k, i)])
                    excl_pos.append(e)
        self.excl_edge = np.array(excl_edge, dtype=np.intp)
        self.excl_pos = np.array(excl_pos, dtype=np.intp)

        # plain-python mirrors for the scalar (serial) sweep hot path
        self.coeff_list = self.coeff.tolist()
        self.prior_prec_list = self.prior_prec.tolist()
        self.prior_mean_list = self.prior_mean.tolist()
        self.in_edges_list = [e.tolist() for e in self.in_edges]
        self.out_edges_list = [
            [self.edge_index[(i, j)] for j in self.neighbors[i]] for i in range(n)
        ]

    @property
    def num_edges(self) -> int:
        return self.src.size

    def is_tree(self) -> bool:
        """Connected and acyclic (a single node counts as a tree)."""
        if len(self.system.offdiag) != self.n - 1:
            return False
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in self.neighbors[i]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        return bool(seen.all())

    def diameter(self) -> int:
        """Longest shortest path in edges via double BFS; exact on trees."""

        def far(start: int) -> tuple[int, int]:
            dist = np.full(self.n, -1)
            dist[start] = 0
            queue = [start]
            for i in queue:
                for j in self.neighbors[i]:
                    if dist[j] < 0:
                        dist[j] = dist[i] + 1
                        queue.append(j)
            k = int(np.argmax(dist))
            return k, int(dist[k])

        a, _ = far(0)
        _, d = far(a)
        return d


def build_graph(system: SymSystem) -> GaussianGraph:
    """Build the graphical model; rejects zero diagonal entries by row."""
    return GaussianGraph(system)
