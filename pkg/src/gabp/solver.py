"""Gaussian belief propagation engine.

Messages along directed edge (i -> j) are scalar (precision, mean) pairs,
initialized to exactly zero, updated by

    P_ij  = -A_ij^2 / (P_ii + sum_{k in N(i) \\ j} P_ki)
    mu_ij = (P_ii mu_ii + sum_{k in N(i) \\ j} P_ki mu_ki) / A_ij

under parallel (double-buffered), serial (in-place, fixed node order) or
broadcast (per-node aggregates, recipient recovers the exclusion sums by
subtraction) scheduling.  Convergence is declared when no message moved by
epsilon or more during a sweep; divergence when any message magnitude passes
the blowup bound, a singular subgraph zeroes an exclusion sum, or the sweep
cap is hit.

The degenerate parameterizations are here too: ``jacobi_mode_solve`` (edge
precisions pinned to zero, full-neighborhood sums, which collapses to the
classical Jacobi iteration) and ``min_sum_solve`` (quadratic min-sum updates
on the unit-diagonal rescaling of the system).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GaussianGraph, build_graph
from .linalg import SymSystem, residual_norm_per_eq

SCHEDULES = ("parallel", "serial", "broadcast")


class SingularSubgraphError(ArithmeticError):
    """An exclusion precision hit exactly zero; the update is undefined."""


@dataclass
class SolveOptions:
    epsilon: float = 1e-6
    max_iter: int = 10_000
    blowup: float = 1e10
    schedule: str = "parallel"
    serial_order: list[int] | None = None  # None = ascending node index

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.blowup > 1.0:
            raise ValueError("blowup must exceed 1")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")


@dataclass
class MessageState:
    """Per-directed-edge message buffers plus sweep bookkeeping."""

    prec: np.ndarray
    mean: np.ndarray
    iteration: int = 0
    schedule: str = "parallel"
    messages_sent: int = 0

    def copy(self) -> "MessageState":
        return MessageState(
            prec=self.prec.copy(),
            mean=self.mean.copy(),
            iteration=self.iteration,
            schedule=self.schedule,
            messages_sent=self.messages_sent,
        )


@dataclass
class SolveReport:
    converged: bool
    diverged: bool
    iterations: int
    means: np.ndarray
    precisions: np.ndarray | None
    max_change_history: list[float] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    means_history: list[np.ndarray] = field(default_factory=list)
    messages_sent: int = 0
    # marginal precisions are exact only on trees; loopy ones carry a caveat
    precisions_exact: bool | None = None


def initial_state(graph: GaussianGraph, schedule: str = "parallel") -> MessageState:
    return MessageState(
        prec=np.zeros(graph.num_edges),
        mean=np.zeros(graph.num_edges),
        schedule=schedule,
    )


def _exclusion(graph: GaussianGraph, state: MessageState, i: int, j: int):
    """P_{i\\j} and the matching precision-weighted mean numerator."""
    acc_p = graph.prior_prec_list[i]
    acc_num = graph.prior_prec_list[i] * graph.prior_mean_list[i]
    prec, mean = state.prec, state.mean
    for pos, k in enumerate(graph.neighbors[i]):
        if k == j:
            continue
        e = graph.in_edges_list[i][pos]
        acc_p += prec[e]
        acc_num += prec[e] * mean[e]
    return acc_p, acc_num


def compute_message(graph, state, i: int, j: int) -> tuple[float, float]:
    """Sum-product message (P_ij, mu_ij) from the current buffers."""
    if (i, j) not in graph.edge_index:
        raise KeyError(f"({i}, {j}) is not an edge")
    a = graph.system.offdiag[(i, j) if i < j else (j, i)]
    p_excl, num = _exclusion(graph, state, i, j)
    if p_excl == 0.0:
        raise SingularSubgraphError(f"P_excl({i} -> {j}) = 0")
    return -a * a / p_excl, num / a


def compute_message_max_product(graph, state, i: int, j: int) -> tuple[float, float]:
    """Max-product message, via the closed-form argmax of the integrand.

    The maximizing x_i is (P_excl mu_excl - A_ij x_j) / P_excl; substituting
    it back leaves a quadratic in x_j whose coefficients are read off as the
    message precision and mean.  Identical to the sum-product message in
    exact arithmetic.
    """
    if (i, j) not in graph.edge_index:
        raise KeyError(f"({i}, {j}) is not an edge")
    a = graph.system.offdiag[(i, j) if i < j else (j, i)]
    p_excl, num = _exclusion(graph, state, i, j)
    if p_excl == 0.0:
        raise SingularSubgraphError(f"P_excl({i} -> {j}) = 0")
    mu_excl = num / p_excl
    prec = -a * a / p_excl
    # linear coefficient of the completed square is -a * mu_excl = prec * mu
    mean = -a * mu_excl / prec
    return prec, mean


def _sweep_parallel(graph: GaussianGraph, state: MessageState):
    prior_num = graph.prior_prec * graph.prior_mean
    p_excl = graph.prior_prec[graph.src].copy()
    num = prior_num[graph.src].copy()
    np.add.at(p_excl, graph.excl_pos, state.prec[graph.excl_edge])
    np.add.at(num, graph.excl_pos, (state.prec * state.mean)[graph.excl_edge])
    if np.any(p_excl == 0.0):
        e = int(np.flatnonzero(p_excl == 0.0)[0])
        raise SingularSubgraphError(
            f"P_excl({graph.src[e]} -> {graph.dst[e]}) = 0"
        )
    new_prec = -graph.coeff * graph.coeff / p_excl
    new_mean = num / graph.coeff
    if graph.num_edges:
        max_change = max(
            float(np.max(np.abs(new_prec - state.prec))),
            float(np.max(np.abs(new_mean - state.mean))),
        )
    else:
        max_change = 0.0
    out = MessageState(
        prec=new_prec,
        mean=new_mean,
        iteration=state.iteration + 1,
        schedule="parallel",
        messages_sent=state.messages_sent + graph.num_edges,
    )
    return out, max_change


def _sweep_serial(graph: GaussianGraph, state: MessageState, order):
    prec = state.prec.tolist()
    mean = state.mean.tolist()
    coeff = graph.coeff_list
    max_change = 0.0
    for i in order:
        in_ids = graph.in_edges_list[i]
        out_ids = graph.out_edges_list[i]
        nbr = graph.neighbors[i]
        base_p = graph.prior_prec_list[i]
        base_num = base_p * graph.prior_mean_list[i]
        for pos, j in enumerate(nbr):
            acc_p = base_p
            acc_num = base_num
            for pos2 in range(len(nbr)):
                if pos2 == pos:
                    continue
                e_in = in_ids[pos2]
                acc_p += prec[e_in]
                acc_num += prec[e_in] * mean[e_in]
            if acc_p == 0.0:
                raise SingularSubgraphError(f"P_excl({i} -> {j}) = 0")
            e = out_ids[pos]
            a = coeff[e]
            new_p = -a * a / acc_p
            new_m = acc_num / a
            dp = abs(new_p - prec[e])
            dm = abs(new_m - mean[e])
            if dp > max_change:
                max_change = dp
            if dm > max_change:
                max_change = dm
            prec[e] = new_p
            mean[e] = new_m
    out = MessageState(
        prec=np.array(prec),
        mean=np.array(mean),
        iteration=state.iteration + 1,
        schedule="serial",
        messages_sent=state.messages_sent + graph.num_edges,
    )
    return out, max_change


def sweep(graph: GaussianGraph, state: MessageState, options: SolveOptions):
    """One message-passing round; returns (new state, max message change)."""
    if options.schedule == "parallel":
        return _sweep_parallel(graph, state)
    if options.schedule == "serial":
        order = options.serial_order
        if order is None:
            order = range(graph.n)
        return _sweep_serial(graph, state, order)
    return broadcast_sweep(graph, state, options)


def broadcast_sweep(graph: GaussianGraph, state: MessageState, options=None):
    """One round of the aggregate-and-subtract (broadcast) variant.

    Each node forms its full sums P~_i and mu~_i once and broadcasts them;
    a recipient recovers the exclusion quantities by subtracting its own
    previous message.  Counts n broadcasts per round instead of one message
    per directed edge.
    """
    sum_p = graph.prior_prec.copy()
    sum_num = graph.prior_prec * graph.prior_mean
    np.add.at(sum_p, graph.dst, state.prec)
    np.add.at(sum_num, graph.dst, state.prec * state.mean)
    if np.any(sum_p == 0.0):
        i = int(np.flatnonzero(sum_p == 0.0)[0])
        raise SingularSubgraphError(f"aggregate precision P~({i}) = 0")
    mu_tilde = sum_num / sum_p

    p_excl = sum_p[graph.src] - state.prec[graph.rev]
    if np.any(p_excl == 0.0):
        e = int(np.flatnonzero(p_excl == 0.0)[0])
        raise SingularSubgraphError(
            f"P_excl({graph.src[e]} -> {graph.dst[e]}) = 0 after subtraction"
        )
    num = (sum_p * mu_tilde)[graph.src] - (state.prec * state.mean)[graph.rev]
    new_prec = -graph.coeff * graph.coeff / p_excl
    new_mean = num / graph.coeff
    if graph.num_edges:
        max_change = max(
            float(np.max(np.abs(new_prec - state.prec))),
            float(np.max(np.abs(new_mean - state.mean))),
        )
    else:
        max_change = 0.0
    out = MessageState(
        prec=new_prec,
        mean=new_mean,
        iteration=state.iteration + 1,
        schedule="broadcast",
        messages_sent=state.messages_sent + graph.n,
    )
    return out, max_change


def infer_marginals(graph: GaussianGraph, state: MessageState):
    """Marginal (means, precisions) from priors plus all incoming messages.

    A zero total precision leaves the corresponding mean non-finite; the
    solve loop reports that as divergence rather than raising.
    """
    prec_tot = graph.prior_prec.copy()
    num = graph.prior_prec * graph.prior_mean
    np.add.at(prec_tot, graph.dst, state.prec)
    np.add.at(num, graph.dst, state.prec * state.mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        means = num / prec_tot
    return means, prec_tot


def _finish(graph, state, converged, diverged, histories) -> SolveReport:
    means, precs = infer_marginals(graph, state)
    max_hist, res_hist, means_hist = histories
    return SolveReport(
        converged=converged,
        diverged=diverged,
        iterations=state.iteration,
        means=means,
        precisions=precs,
        max_change_history=max_hist,
        residual_history=res_hist,
        means_history=means_hist,
        messages_sent=state.messages_sent,
        precisions_exact=graph.is_tree(),
    )


def solve(system: SymSystem, options: SolveOptions | None = None) -> SolveReport:
    """Run GaBP to convergence, divergence or the sweep cap.

    The sweep that first leaves every message within epsilon of its previous
    value is counted; per-sweep tentative means, message change and residual
    are recorded in the report histories.
    """
    options = options or SolveOptions()
    graph = build_graph(system)
    state = initial_state(graph, options.schedule)
    max_hist: list[float] = []
    res_hist: list[float] = []
    means_hist: list[np.ndarray] = []
    converged = diverged = False
    for _ in range(options.max_iter):
        try:
            state, max_change = sweep(graph, state, options)
        except SingularSubgraphError:
            diverged = True
            break
        means, _ = infer_marginals(graph, state)
        means_finite = bool(np.all(np.isfinite(means)))
        res = residual_norm_per_eq(system, means) if means_finite else np.inf
        max_hist.append(max_change)
        res_hist.append(float(res))
        means_hist.append(means)
        finite = np.all(np.isfinite(state.prec)) and np.all(np.isfinite(state.mean))
        biggest = max(
            float(np.max(np.abs(state.prec), initial=0.0)),
            float(np.max(np.abs(state.mean), initial=0.0)),
        )
        if not finite or biggest > options.blowup or not means_finite:
            diverged = True
            break
        if max_change < options.epsilon:
            converged = True
            break
    if not converged and not diverged:
        diverged = True  # cap exhausted
    return _finish(graph, state, converged, diverged, (max_hist, res_hist, means_hist))


# ---------------------------------------------------------------------------
# Degenerate parameterizations
# ---------------------------------------------------------------------------

def jacobi_step(a_dense: np.ndarray, diag: np.ndarray, b: np.ndarray, x: np.ndarray):
    """x'_i = (b_i - sum_{k != i} A_ik x_k) / A_ii, evaluated densely.

    Shared by the classical Jacobi solver and the degenerate GaBP mode so
    the two iterate sequences agree to the last bit.
    """
    return (b - (a_dense @ x - diag * x)) / diag


def jacobi_mode_solve(system: SymSystem, options: SolveOptions | None = None) -> SolveReport:
    """GaBP with edge precisions pinned to zero and full-neighborhood sums.

    With P_ij = 0 an outgoing message no longer depends on its recipient,
    so the per-edge means collapse to one value per source node and the
    tentative means reproduce the classical Jacobi iteration started from
    x0 = b_i / A_ii.
    """
    options = options or SolveOptions()
    graph = build_graph(system)
    a_dense, b = system.to_dense()
    diag = system.diag
    # The message along every edge out of node i after sweep t equals the
    # tentative mean of i after sweep t-1, so the whole state collapses to
    # one vector: x_t = jacobi_step(x_{t-1}) with x_0 the prior means.
    x = graph.prior_mean.copy()
    max_hist: list[float] = []
    res_hist: list[float] = []
    means_hist: list[np.ndarray] = []
    converged = diverged = False
    iteration = 0
    messages = 0
    for _ in range(options.max_iter):
        iteration += 1
        messages += graph.num_edges
        x_new = jacobi_step(a_dense, diag, b, x)
        finite = bool(np.all(np.isfinite(x_new)))
        max_change = float(np.max(np.abs(x_new - x), initial=0.0)) if finite else np.inf
        x = x_new
        max_hist.append(max_change)
        res_hist.append(residual_norm_per_eq(system, x) if finite else np.inf)
        means_hist.append(x.copy())
        if not finite or np.max(np.abs(x)) > options.blowup:
            diverged = True
            break
        if max_change < options.epsilon:
            converged = True
            break
    if not converged and not diverged:
        diverged = True
    return SolveReport(
        converged=converged,
        diverged=diverged,
        iterations=iteration,
        means=x,
        precisions=None,
        max_change_history=max_hist,
        residual_history=res_hist,
        means_history=means_hist,
        messages_sent=messages,
        precisions_exact=None,
    )


def min_sum_solve(system: SymSystem, options: SolveOptions | None = None) -> SolveReport:
    """Quadratic min-sum message passing, an alternate GaBP parameterization.

    The system is symmetrically rescaled to unit diagonal, Gamma =
    D^{-1/2} A D^{-1/2}, h = D^{-1/2} b; the quadratic parameters iterate as

        gamma_ij = 1 / (1 - sum_{u in N(i) \\ j} Gamma_ui^2 gamma_ui)
        z_ij     = Gamma_ij gamma_ij (h_i - sum_{u in N(i) \\ j} z_ui)

    and the recovered means are rescaled by D^{-1/2}.  gamma corresponds to
    1 / P_{i\\j} of the plain solver on the rescaled system.
    """
    options = options or SolveOptions()
    if np.any(system.diag <= 0.0):
        row = int(np.flatnonzero(system.diag <= 0.0)[0])
        raise ValueError(f"min-sum normalization needs a positive diagonal; row {row}")
    if options.schedule == "broadcast":
        raise ValueError("min-sum supports parallel or serial scheduling only")
    d_isqrt = 1.0 / np.sqrt(system.diag)
    h = system.rhs * d_isqrt
    graph = build_graph(system)
    gam_edge = graph.coeff * d_isqrt[graph.src] * d_isqrt[graph.dst]

    gamma = np.zeros(graph.num_edges)
    z = np.zeros(graph.num_edges)
    max_hist: list[float] = []
    res_hist: list[float] = []
    means_hist: list[np.ndarray] = []
    converged = diverged = False
    iteration = 0

    def marginals(gamma, z):
        denom = np.ones(graph.n)
        num = h.copy()
        np.add.at(denom, graph.dst, -gam_edge * gam_edge * gamma)
        np.add.at(num, graph.dst, -z)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = num / denom
        return u * d_isqrt

    serial_order = options.serial_order if options.serial_order is not None else range(graph.n)
    for _ in range(options.max_iter):
        iteration += 1
        if options.schedule == "parallel":
            denom = np.ones(graph.num_edges)
            acc = h[graph.src].copy()
            np.add.at(denom, graph.excl_pos, -(gam_edge * gam_edge * gamma)[graph.excl_edge])
            np.add.at(acc, graph.excl_pos, -z[graph.excl_edge])
            if np.any(denom == 0.0):
                diverged = True
                break
            gamma_new = 1.0 / denom
            z_new = gam_edge * gamma_new * acc
        else:
            gamma_new = gamma.copy()
            z_new = z.copy()
            for i in serial_order:
                in_ids = graph.in_edges_list[i]
                out_ids = graph.out_edges_list[i]
                nbr = graph.neighbors[i]
                for pos in range(len(nbr)):
                    denom_s = 1.0
                    acc_s = h[i]
                    for pos2 in range(len(nbr)):
                        if pos2 == pos:
                            continue
                        e_in = in_ids[pos2]
                        denom_s -= gam_edge[e_in] ** 2 * gamma_new[e_in]
                        acc_s -= z_new[e_in]
                    if denom_s == 0.0:
                        diverged = True
                        break
                    e = out_ids[pos]
                    gamma_new[e] = 1.0 / denom_s
                    z_new[e] = gam_edge[e] * gamma_new[e] * acc_s
                if diverged:
                    break
            if diverged:
                break
        if graph.num_edges:
            max_change = max(
                float(np.max(np.abs(gamma_new - gamma))),
                float(np.max(np.abs(z_new - z))),
            )
        else:
            max_change = 0.0
        gamma, z = gamma_new, z_new
        x = marginals(gamma, z)
        max_hist.append(max_change)
        res_hist.append(
            residual_norm_per_eq(system, x) if np.all(np.isfinite(x)) else np.inf
        )
        means_hist.append(x)
        finite = np.all(np.isfinite(gamma)) and np.all(np.isfinite(z)) and np.all(np.isfinite(x))
        biggest = max(
            float(np.max(np.abs(gamma), initial=0.0)),
            float(np.max(np.abs(z), initial=0.0)),
        )
        if not finite or biggest > options.blowup:
            diverged = True
            break
        if max_change < options.epsilon:
            converged = True
            break
    if not converged and not diverged:
        diverged = True
    x = marginals(gamma, z)
    return SolveReport(
        converged=converged,
        diverged=diverged,
        iterations=iteration,
        means=x,
        precisions=None,
        max_change_history=max_hist,
        residual_history=res_hist,
        means_history=means_hist,
        messages_sent=0,
        precisions_exact=None,
    )


def min_sum_gamma_state(system: SymSystem, sweeps: int) -> np.ndarray:
    """gamma after a number of parallel sweeps; test hook for the
    gamma = 1 / P_excl correspondence with the plain solver."""
    options = SolveOptions(max_iter=max(sweeps, 1), epsilon=1e-300)
    graph = build_graph(system)
    d_isqrt = 1.0 / np.sqrt(system.diag)
    gam_edge = graph.coeff * d_isqrt[graph.src] * d_isqrt[graph.dst]
    gamma = np.zeros(graph.num_edges)
    z = np.zeros(graph.num_edges)
    h = system.rhs * d_isqrt
    for _ in range(sweeps):
        denom = np.ones(graph.num_edges)
        acc = h[graph.src].copy()
        np.add.at(denom, graph.excl_pos, -(gam_edge * gam_edge * gamma)[graph.excl_edge])
        np.add.at(acc, graph.excl_pos, -z[graph.excl_edge])
        gamma = 1.0 / denom
        z = gam_edge * gamma * acc
    return gamma
