"""Shared instance builders and seeded random generators for the test suite."""

from __future__ import annotations

import numpy as np

from domdp.average import solve_average
from domdp.discounted import solve_discounted
from domdp.mdp import Benchmark, MdpInstance


def ti1(mode="average", discount=None):
    """Golden 1-state instance: actions a/b, r=(2,5), z=(10,0), self-loop kernel."""
    discounted = mode == "discounted"
    return MdpInstance(
        num_states=1,
        actions=(("a", "b"),),
        kernel=np.array([[1.0], [1.0]]),
        reward_r=np.array([2.0, 5.0]),
        reward_z=np.array([10.0, 0.0]),
        mode=mode,
        discount=discount if discounted else None,
        initial=np.array([1.0]) if discounted else None,
    )


TI1_BENCH = Benchmark(support=[4.0], probs=[1.0])
VACUOUS_BENCH = Benchmark(support=[-1e6], probs=[1.0])


def ti2(z=(0.0, 10.0)):
    """Deterministic 2-state swap chain with one action per state."""
    return MdpInstance(
        num_states=2,
        actions=(("go",), ("go",)),
        kernel=np.array([[0.0, 1.0], [1.0, 0.0]]),
        reward_r=np.array([1.0, 1.0]),
        reward_z=np.array(z, dtype=float),
        mode="average",
    )


def random_instance(rng, max_states=20, max_actions=5, mode="average"):
    """Random instance with strictly positive kernel rows, hence unichain policies."""
    S = int(rng.integers(2, max_states + 1))
    counts = rng.integers(1, max_actions + 1, size=S)
    actions = tuple(tuple(f"a{i}" for i in range(c)) for c in counts)
    K = int(counts.sum())
    raw = rng.dirichlet(np.full(S, 0.4), size=K)
    kernel = 0.999 * raw + 0.001 / S
    r = rng.normal(size=K)
    z = rng.uniform(-2.0, 2.0, size=K)
    discounted = mode == "discounted"
    initial = None
    discount = None
    if discounted:
        initial = rng.dirichlet(np.ones(S))
        discount = float(rng.uniform(0.5, 0.95))
    return MdpInstance(
        num_states=S,
        actions=actions,
        kernel=kernel,
        reward_r=r,
        reward_z=z,
        mode=mode,
        discount=discount,
        initial=initial,
    )


def random_benchmark(rng, inst, max_support=5):
    """Random benchmark whose support lands inside the instance's z range.

    In discounted mode shortfall rows live in discounted-total units, so the
    support is scaled by 1/(1-delta).
    """
    q = int(rng.integers(1, max_support + 1))
    zmin, zmax = float(inst.reward_z.min()), float(inst.reward_z.max())
    span = max(zmax - zmin, 0.5)
    pts = np.sort(rng.uniform(zmin - 0.25 * span, zmax, size=q))
    pts = np.unique(np.round(pts, 6))
    scale = 1.0 / (1.0 - inst.discount) if inst.mode == "discounted" else 1.0
    probs = rng.dirichlet(np.ones(pts.size))
    return Benchmark(support=pts * scale, probs=probs)


def all_rows_slack(report, margin_tol=1e-6, zero_tol=1e-12):
    """True when every dominance row is slack by margin_tol or vacuous (0 >= 0).

    The row at the benchmark's bottom support point always has rhs exactly 0
    and value <= 0, so a literal margin test alone can never pass; rows whose
    value and rhs are both zero constrain nothing and are exempt.
    """
    row_vals = report.dominance_matrix @ report.occupation.weights
    vacuous = (np.abs(row_vals) <= zero_tol) & (np.abs(report.dominance_rhs) <= zero_tol)
    return bool(np.all((report.dominance_margins >= margin_tol) | vacuous))


def feasible_pair(rng, max_states=20, max_actions=5, mode="average", max_support=5):
    """(instance, benchmark, report) with the benchmark shifted down if needed.

    A benchmark supported strictly below min z makes every shortfall row
    lhs 0 >= rhs, so one shift always restores feasibility.
    """
    inst = random_instance(rng, max_states, max_actions, mode)
    bench = random_benchmark(rng, inst, max_support)
    solver = solve_average if mode == "average" else solve_discounted
    report = solver(inst, bench)
    if report.status != "optimal":
        scale = 1.0 / (1.0 - inst.discount) if mode == "discounted" else 1.0
        span = float(inst.reward_z.max() - inst.reward_z.min()) + 1.0
        bench = Benchmark(support=bench.support - span * scale, probs=bench.probs)
        report = solver(inst, bench)
        assert report.status == "optimal", "shifted benchmark must be feasible"
    return inst, bench, report
