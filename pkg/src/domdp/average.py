"""Average-reward dominance-constrained LP: build, solve, dual recovery, checks.

The primal optimizes over occupation measures x(s,a): flow balance per state,
total mass one, and one shortfall row per benchmark support point. The dual
of the normalization row is the gain g, balance-row duals give the cost-to-go
h, and the dominance multipliers reconstruct a piecewise linear increasing
concave utility u, so that at the optimum

    g + h(s) = max_a { r(s,a) + u(z(s,a)) + sum_j P(j|s,a) h(j) }

holds at every state the optimal measure visits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dominance import (
    GeneratorFamily,
    benchmark_curve,
    benchmark_plus_curve,
    family_rows,
    reconstruct_utility,
    shortfall_minus,
    shortfall_plus,
)
from .lp import EQ, FEAS_TOL, GE, LE, LpProblem, solve_lp
from .mdp import (
    AVERAGE,
    Benchmark,
    MdpInstance,
    Policy,
    policy_kernel,
    recurrent_classes,
    require_valid,
)
from .results import (
    DualSolution,
    OccupationMeasure,
    SlacknessSummary,
    SolveReport,
)

GAP_TOL = 1e-6
VISIT_TOL = 1e-9
ZERO_MARGINAL = 1e-12
STATIONARY_TOL = 1e-10


def _pair_labels(inst: MdpInstance) -> list[str]:
    return [f"x[{s},{a}]" for s, acts in enumerate(inst.actions) for a in acts]


def _balance_block(inst: MdpInstance) -> np.ndarray:
    """Rows sum_a x(j,a) - sum_{s,a} P(j|s,a) x(s,a), one per state j."""
    B = -inst.kernel.T.copy()
    B[inst.state_of_pair(), np.arange(inst.num_pairs)] += 1.0
    return B


def _dominance_block(
    inst: MdpInstance, bench: Benchmark, family: GeneratorFamily | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(matrix, rhs, grid) for the dominance rows."""
    if family is not None:
        D, rhs = family_rows(family, inst.reward_z)
        grid = np.arange(len(family.params), dtype=float)
        return D, rhs, grid
    if inst.reward_z.ndim != 1:
        raise ValueError("vector z requires a generator family")
    etas = bench.support
    D = np.array([shortfall_minus(inst.reward_z, eta) for eta in etas])
    rhs = benchmark_curve(bench, etas).curve
    return D, rhs, etas


def build_average_primal(
    inst: MdpInstance, bench: Benchmark, family: GeneratorFamily | None = None
) -> LpProblem:
    """Reward-maximizing LP over stable occupation measures."""
    require_valid(inst)
    if inst.mode != AVERAGE:
        raise ValueError(f"average builder got mode {inst.mode!r}")
    S, K = inst.num_states, inst.num_pairs
    D, rhs, grid = _dominance_block(inst, bench, family)
    A = np.vstack([_balance_block(inst), np.ones((1, K)), D])
    b = np.concatenate([np.zeros(S), [1.0], rhs])
    row_labels = [f"balance[{j}]" for j in range(S)] + ["normalize"]
    if family is None:
        row_labels += [f"dominance[eta={float(eta)!r}]" for eta in grid]
    else:
        row_labels += [f"dominance[xi={i}]" for i in range(len(grid))]
    return LpProblem(
        sense="max",
        c=inst.reward_r.copy(),
        A=A,
        row_senses=[EQ] * (S + 1) + [GE] * len(grid),
        b=b,
        lower=np.zeros(K),
        row_labels=row_labels,
        col_labels=_pair_labels(inst),
    )


def build_average_cost_primal(inst: MdpInstance, bench: Benchmark) -> LpProblem:
    """Cost-minimizing variant: increasing convex order on the secondary cost.

    reward_r is read as a cost c and reward_z as a cost; the dominance rows
    cap sum x(s,a) (z(s,a)-eta)_+ at E[(Y-eta)_+] per eta in supp Y.
    """
    require_valid(inst)
    if inst.mode != AVERAGE:
        raise ValueError(f"average builder got mode {inst.mode!r}")
    if inst.reward_z.ndim != 1:
        raise ValueError("cost variant requires scalar z")
    S, K = inst.num_states, inst.num_pairs
    etas = bench.support
    D = np.array([shortfall_plus(inst.reward_z, eta) for eta in etas])
    rhs = benchmark_plus_curve(bench, etas)
    A = np.vstack([_balance_block(inst), np.ones((1, K)), D])
    b = np.concatenate([np.zeros(S), [1.0], rhs])
    row_labels = (
        [f"balance[{j}]" for j in range(S)]
        + ["normalize"]
        + [f"dominance[eta={float(eta)!r}]" for eta in etas]
    )
    return LpProblem(
        sense="min",
        c=inst.reward_r.copy(),
        A=A,
        row_senses=[EQ] * (S + 1) + [LE] * len(etas),
        b=b,
        lower=np.zeros(K),
        row_labels=row_labels,
        col_labels=_pair_labels(inst),
    )


def extract_policy(occ: OccupationMeasure) -> Policy:
    """Disintegrate x into a stationary policy; uniform at zero-marginal states."""
    inst = occ.inst
    w = occ.weights
    if occ.mode != AVERAGE:
        w = w / w.sum()
    rows = []
    for s in range(inst.num_states):
        block = w[inst.pair_offsets[s] : inst.pair_offsets[s + 1]]
        total = float(block.sum())
        if total > ZERO_MARGINAL:
            row = np.maximum(block, 0.0) / total
            row = row / row.sum()
        else:
            row = np.full(block.size, 1.0 / block.size)
        rows.append(row)
    return Policy(tuple(rows))


def stationary_distribution(policy: Policy, inst: MdpInstance) -> np.ndarray:
    """Unique invariant distribution of the induced chain; unichain required."""
    P = policy_kernel(policy, inst)
    classes = recurrent_classes(P)
    if len(classes) != 1:
        raise ValueError(f"multichain policy: recurrent classes {classes}")
    S = inst.num_states
    for replace in range(S - 1, -1, -1):
        M = (np.eye(S) - P).T
        M[replace] = 1.0
        rhs = np.zeros(S)
        rhs[replace] = 1.0
        try:
            mu = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            continue
        mu = np.maximum(mu, 0.0)
        total = mu.sum()
        if total <= 0:
            continue
        mu = mu / total
        if float(np.abs(mu - mu @ P).max()) <= STATIONARY_TOL:
            return mu
    raise ArithmeticError("stationary distribution did not meet residual tolerance")


def check_slackness(report: SolveReport) -> SlacknessSummary:
    """Complementary slackness residuals: multiplier times constraint slack.

    Dominance side: |lam_q (sum_x row_q - rhs_q)| per row. Pair side:
    |x(s,a) (g + h(s) - sum_j P h - r - u(z))| per pair, with the discounted
    analog v(s) - delta sum_j P v when the report is discounted.
    """
    if report.status != "optimal":
        raise ValueError("slackness is only defined for optimal reports")
    occ = report.occupation
    inst = occ.inst
    row_vals = report.dominance_matrix @ occ.weights
    dom = np.abs(report.dual.lam * (row_vals - report.dominance_rhs))
    if report.mode == AVERAGE:
        slack = (
            report.dual.g
            + report.dual.h[inst.state_of_pair()]
            - inst.kernel @ report.dual.h
            - inst.reward_r
            - report.dual.u_of_z
        )
    else:
        delta = float(inst.discount)
        slack = (
            report.dual.v[inst.state_of_pair()]
            - delta * (inst.kernel @ report.dual.v)
            - inst.reward_r
            - report.dual.u_of_z
        )
    pairs = np.abs(occ.weights * slack)
    return SlacknessSummary(dominance=dom, pairs=pairs)


def optimality_residual(report: SolveReport, inst: MdpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per-state residual of the modified average optimality equations.

    Returns (residuals, visited): only states whose occupation marginal
    exceeds 1e-9 are required to satisfy the equation; the rest are reported
    unconstrained.
    """
    if report.status != "optimal":
        raise ValueError("optimality residuals require an optimal report")
    occ = report.occupation
    q = inst.reward_r + report.dual.u_of_z + inst.kernel @ report.dual.h
    residuals = np.zeros(inst.num_states)
    marginal = occ.state_marginal()
    for s in range(inst.num_states):
        best = q[inst.pair_offsets[s] : inst.pair_offsets[s + 1]].max()
        residuals[s] = abs(report.dual.g + report.dual.h[s] - best)
    return residuals, marginal > VISIT_TOL


def relative_value_iteration(
    inst: MdpInstance, tol: float = 1e-9, max_iter: int = 1_000_000
) -> tuple[float, np.ndarray]:
    """Unconstrained average-reward oracle via damped relative value iteration.

    Uses the aperiodicity transform P' = (I + P)/2, which preserves the gain,
    and stops when the span of the Bellman update is below tol; the returned
    gain is then within tol/2 of optimal for unichain instances.
    """
    state_of = inst.state_of_pair()
    kernel = 0.5 * inst.kernel.copy()
    kernel[np.arange(inst.num_pairs), state_of] += 0.5
    h = np.zeros(inst.num_states)
    offsets = inst.pair_offsets
    for _ in range(max_iter):
        q = inst.reward_r + kernel @ h
        Th = np.array([q[offsets[s] : offsets[s + 1]].max() for s in range(inst.num_states)])
        w = Th - h
        span = float(w.max() - w.min())
        if span <= tol:
            g = float(0.5 * (w.max() + w.min()))
            return g, Th - Th[0]
        h = Th - Th[0]
    raise RuntimeError("relative value iteration did not converge")


def _utility_from_lambda(bench, lam, family, D):
    if family is None:
        return reconstruct_utility(bench.support, lam), lam @ D
    return None, lam @ D


def solve_average(
    inst: MdpInstance,
    bench: Benchmark,
    family: GeneratorFamily | None = None,
    feas_tol: float = FEAS_TOL,
) -> SolveReport:
    """Solve the dominance-constrained average-reward problem with full dual recovery."""
    lp = build_average_primal(inst, bench, family)
    S = inst.num_states
    D, rhs, grid = _dominance_block(inst, bench, family)
    sol = solve_lp(lp, feas_tol=feas_tol)
    if sol.status != "optimal":
        report = SolveReport(status=sol.status, mode=AVERAGE, family_mode=family is not None)
        if sol.status == "infeasible":
            cert = sol.certificate
            scale = float(np.abs(cert).max(initial=0.0))
            report.certificate = [
                (lp.row_labels[i], float(cert[i]))
                for i in range(len(cert))
                if abs(cert[i]) > 1e-9 * (1.0 + scale)
            ]
            report.binding_etas = [
                float(grid[i - S - 1])
                for i in range(S + 1, len(cert))
                if abs(cert[i]) > 1e-9 * (1.0 + scale)
            ]
        return report
    occ = OccupationMeasure(inst=inst, weights=np.maximum(sol.x, 0.0), mode=AVERAGE)
    h = sol.y[:S]
    g = float(sol.y[S])
    lam = np.maximum(sol.y[S + 1 :], 0.0)
    utility, u_of_z = _utility_from_lambda(bench, lam, family, D)
    dual = DualSolution(g=g, h=h, lam=lam, utility=utility, u_of_z=u_of_z)
    policy = extract_policy(occ)
    report = SolveReport(
        status="optimal",
        mode=AVERAGE,
        objective=sol.objective,
        dual_objective=sol.dual_objective,
        gap=abs(sol.objective - sol.dual_objective),
        occupation=occ,
        dual=dual,
        policy=policy,
        dominance_grid=grid,
        dominance_matrix=D,
        dominance_rhs=rhs,
        dominance_margins=D @ occ.weights - rhs,
        multichain=len(recurrent_classes(policy_kernel(policy, inst))) > 1,
        family_mode=family is not None,
        lp_iterations=sol.iterations,
    )
    report.slackness = check_slackness(report)
    report.optimality_residuals, report.visited_states = optimality_residual(report, inst)
    return report
