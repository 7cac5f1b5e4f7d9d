"""Discounted-reward dominance-constrained LP and its value-iteration oracle.

Benchmark units: the dominance rows compare the discounted SUM of per-period
shortfalls against E[(Y-eta)_-] directly, so the benchmark must live in
discounted-total units (roughly 1/(1-delta) times a per-period quantity).
Rescaling a per-period benchmark is an explicit caller decision, never
silent; see the CLI's --rescale-benchmark flag.
"""

from __future__ import annotations

import numpy as np

from .average import check_slackness, extract_policy
from .dominance import benchmark_curve, reconstruct_utility, shortfall_minus
from .lp import EQ, FEAS_TOL, GE, LpProblem, solve_lp
from .mdp import (
    DISCOUNTED,
    Benchmark,
    MdpInstance,
    Policy,
    policy_kernel,
    recurrent_classes,
    require_valid,
)
from .results import DiscountedDual, OccupationMeasure, SolveReport

VISIT_TOL = 1e-9


def build_discounted_primal(inst: MdpInstance, bench: Benchmark) -> LpProblem:
    """LP over discounted occupation measures, anchored at the initial distribution."""
    require_valid(inst)
    if inst.mode != DISCOUNTED:
        raise ValueError(f"discounted builder got mode {inst.mode!r}")
    if inst.discount is None or inst.initial is None:
        raise ValueError("discounted mode requires discount and initial")
    if inst.reward_z.ndim != 1:
        raise ValueError("discounted solver requires scalar z")
    S, K = inst.num_states, inst.num_pairs
    delta = float(inst.discount)
    B = -delta * inst.kernel.T.copy()
    B[inst.state_of_pair(), np.arange(K)] += 1.0
    etas = bench.support
    D = np.array([shortfall_minus(inst.reward_z, eta) for eta in etas])
    rhs = benchmark_curve(bench, etas).curve
    A = np.vstack([B, D])
    b = np.concatenate([inst.initial, rhs])
    row_labels = [f"balance[{j}]" for j in range(S)] + [
        f"dominance[eta={float(eta)!r}]" for eta in etas
    ]
    col_labels = [f"x[{s},{a}]" for s, acts in enumerate(inst.actions) for a in acts]
    return LpProblem(
        sense="max",
        c=inst.reward_r.copy(),
        A=A,
        row_senses=[EQ] * S + [GE] * len(etas),
        b=b,
        lower=np.zeros(K),
        row_labels=row_labels,
        col_labels=col_labels,
    )


def bellman_residual(report: SolveReport, inst: MdpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Residual of the modified discounted optimality equations per state.

    v(s) = max_a { r(s,a) + u(z(s,a)) + delta sum_j P(j|s,a) v(j) } is required
    only where the occupation marginal is positive; (residuals, visited).
    """
    if report.status != "optimal":
        raise ValueError("bellman residuals require an optimal report")
    delta = float(inst.discount)
    q = inst.reward_r + report.dual.u_of_z + delta * (inst.kernel @ report.dual.v)
    residuals = np.zeros(inst.num_states)
    for s in range(inst.num_states):
        best = q[inst.pair_offsets[s] : inst.pair_offsets[s + 1]].max()
        residuals[s] = abs(report.dual.v[s] - best)
    marginal = report.occupation.state_marginal()
    return residuals, marginal > VISIT_TOL


def value_iteration_unconstrained(
    inst: MdpInstance, tol: float = 1e-8, max_iter: int = 1_000_000
) -> tuple[np.ndarray, Policy]:
    """Classic discounted value iteration, the vacuous-benchmark oracle.

    Iterates to sup-norm difference tol*(1-delta)/(2*delta), which leaves the
    returned v within tol/2 of the optimal value function.
    """
    require_valid(inst)
    delta = float(inst.discount)
    threshold = tol * (1.0 - delta) / (2.0 * delta)
    offsets = inst.pair_offsets
    v = np.zeros(inst.num_states)
    for _ in range(max_iter):
        q = inst.reward_r + delta * (inst.kernel @ v)
        v_new = np.array([q[offsets[s] : offsets[s + 1]].max() for s in range(inst.num_states)])
        if float(np.abs(v_new - v).max()) <= threshold:
            v = v_new
            break
        v = v_new
    else:
        raise RuntimeError("value iteration did not converge")
    q = inst.reward_r + delta * (inst.kernel @ v)
    choices = [int(np.argmax(q[offsets[s] : offsets[s + 1]])) for s in range(inst.num_states)]
    rows = []
    for s, a in enumerate(choices):
        row = np.zeros(len(inst.actions[s]))
        row[a] = 1.0
        rows.append(row)
    return v, Policy(tuple(rows))


def solve_discounted(
    inst: MdpInstance,
    bench: Benchmark,
    benchmark_rescaled: bool = False,
    feas_tol: float = FEAS_TOL,
) -> SolveReport:
    """Solve the discounted problem; v from balance-row duals, lambda from dominance rows."""
    lp = build_discounted_primal(inst, bench)
    S = inst.num_states
    etas = bench.support
    D = np.array([shortfall_minus(inst.reward_z, eta) for eta in etas])
    rhs = benchmark_curve(bench, etas).curve
    sol = solve_lp(lp, feas_tol=feas_tol)
    if sol.status != "optimal":
        report = SolveReport(
            status=sol.status, mode=DISCOUNTED, benchmark_rescaled=benchmark_rescaled
        )
        if sol.status == "infeasible":
            cert = sol.certificate
            scale = float(np.abs(cert).max(initial=0.0))
            report.certificate = [
                (lp.row_labels[i], float(cert[i]))
                for i in range(len(cert))
                if abs(cert[i]) > 1e-9 * (1.0 + scale)
            ]
            report.binding_etas = [
                float(etas[i - S])
                for i in range(S, len(cert))
                if abs(cert[i]) > 1e-9 * (1.0 + scale)
            ]
        return report
    occ = OccupationMeasure(inst=inst, weights=np.maximum(sol.x, 0.0), mode=DISCOUNTED)
    v = sol.y[:S]
    lam = np.maximum(sol.y[S:], 0.0)
    utility = reconstruct_utility(etas, lam)
    dual = DiscountedDual(v=v, lam=lam, utility=utility, u_of_z=lam @ D)
    policy = extract_policy(occ)
    report = SolveReport(
        status="optimal",
        mode=DISCOUNTED,
        objective=sol.objective,
        dual_objective=sol.dual_objective,
        gap=abs(sol.objective - sol.dual_objective),
        occupation=occ,
        dual=dual,
        policy=policy,
        dominance_grid=etas,
        dominance_matrix=D,
        dominance_rhs=rhs,
        dominance_margins=D @ occ.weights - rhs,
        multichain=len(recurrent_classes(policy_kernel(policy, inst))) > 1,
        benchmark_rescaled=benchmark_rescaled,
        lp_iterations=sol.iterations,
    )
    report.slackness = check_slackness(report)
    report.optimality_residuals, report.visited_states = bellman_residual(report, inst)
    return report
