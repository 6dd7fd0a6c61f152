from __future__ import annotations

import os
from fractions import Fraction

import pytest

from wfusion.fusion import fuse2_analytic
from wfusion.planner import (
    BLOCK_SIZE,
    UnreachableTargetError,
    expected_cost,
    monte_carlo,
    plan,
    sample_outcomes,
)

JOBS = min(4, os.cpu_count() or 1)


def enumerate_paths(target, primitive, depth=3000):
    """Brute-force expectation: push probability mass through the greedy rules."""
    frontier = {(): (1.0, 0.0, 0.0)}  # inv -> (mass, E[prims; inv], E[rounds; inv])
    exp_p = exp_r = 0.0
    for _ in range(depth):
        nxt = {}

        def add(inv, mass, wp, wr):
            inv = tuple(sorted((x for x in inv if x), reverse=True))
            m0, p0, r0 = nxt.get(inv, (0.0, 0.0, 0.0))
            nxt[inv] = (m0 + mass, p0 + wp, r0 + wr)

        for inv, (mass, wp, wr) in frontier.items():
            if target in inv:
                exp_p += wp
                exp_r += wr
                continue
            if len(inv) < 2:
                add(inv + (primitive,), mass, wp + mass, wr)
            elif inv[0] + inv[1] - 1 > target:
                add(inv[1:], mass, wp, wr)
            else:
                for e in fuse2_analytic(inv[0], inv[1]).entries:
                    q = float(e.probability)
                    if q:
                        add(tuple(e.residual.sizes()) + inv[2:], mass * q, wp * q, (wr + mass) * q)
        frontier = nxt
        if sum(m for m, _, _ in frontier.values()) < 1e-15:
            break
    return exp_p, exp_r


def test_target_three_from_pairs():
    r = expected_cost(3, 2)
    assert r.expected_primitives == Fraction(8, 3)
    assert r.expected_rounds == 2
    p, rounds = enumerate_paths(3, 2)
    assert abs(p - 8 / 3) < 1e-9
    assert abs(rounds - 2) < 1e-9


@pytest.mark.parametrize("target,primitive", [(5, 3), (7, 3), (7, 4), (4, 2)])
def test_linear_solve_matches_path_enumeration(target, primitive):
    r = expected_cost(target, primitive)
    p, rounds = enumerate_paths(target, primitive)
    assert abs(float(r.expected_primitives) - float(p)) < 1e-9
    assert abs(float(r.expected_rounds) - float(rounds)) < 1e-9


@pytest.mark.parametrize("m", range(2, 7))
def test_one_shot_rounds_are_geometric(m):
    r = expected_cost(2 * m - 1, m, "one-shot")
    assert r.expected_rounds == Fraction(m * m, 2 * m - 1)
    assert r.expected_primitives == 2 * r.expected_rounds


def test_target_equal_to_primitive():
    r = expected_cost(4, 4)
    assert (r.expected_primitives, r.expected_rounds) == (1, 0)


def test_unreachable_target_names_state():
    with pytest.raises(UnreachableTargetError, match=r"\[3, 3\]") as info:
        expected_cost(4, 3)
    assert info.value.state == (3, 3)
    with pytest.raises(ValueError):
        expected_cost(2, 3)


def test_float_solver_agrees():
    exact = expected_cost(9, 3, accounting="physical")
    approx = expected_cost(9, 3, accounting="physical", exact=False)
    assert abs(float(exact.expected_primitives) - approx.expected_primitives) < 1e-6 * approx.expected_primitives


@pytest.mark.parametrize("target,primitive,accounting", [
    (3, 2, "ideal"), (5, 3, "ideal"), (7, 4, "ideal"), (5, 3, "physical"), (4, 2, "physical"),
])
def test_monte_carlo_agrees_with_exact(target, primitive, accounting):
    exact = expected_cost(target, primitive, accounting=accounting)
    emp = monte_carlo(target, primitive, trials=20000, seed=11, accounting=accounting)
    for key, val in (("primitives", exact.expected_primitives), ("rounds", exact.expected_rounds)):
        assert abs(emp.mean[key] - float(val)) < 3 * emp.stderr[key] + 1e-12, key


def test_monte_carlo_is_reproducible_and_parallel_safe():
    trials = 2 * BLOCK_SIZE + 17
    a = monte_carlo(5, 3, trials=trials, seed=3)
    b = monte_carlo(5, 3, trials=trials, seed=3)
    c = monte_carlo(5, 3, trials=trials, seed=3, n_jobs=2)
    assert a == b == c
    assert monte_carlo(5, 3, trials=trials, seed=4) != a


def test_single_trial_replays():
    assert monte_carlo(7, 3, trials=1, seed=99) == monte_carlo(7, 3, trials=1, seed=99)


def test_first_round_success_rate():
    emp = monte_carlo(5, 3, trials=10**6, seed=2024, n_jobs=JOBS)
    st = emp.pair_stats[(3, 3)]
    p = 5 / 9
    se = (p * (1 - p) / st["attempts"]) ** 0.5
    assert abs(st["success"] / st["attempts"] - p) < 3 * se


def test_physical_herald_rate():
    emp = monte_carlo(5, 3, trials=20000, seed=8, accounting="physical")
    attempts = sum(s["attempts"] for s in emp.pair_stats.values())
    se = (0.25 * 0.75 / attempts) ** 0.5
    assert abs(emp.herald_rate - 0.25) < 3 * se
    st = emp.pair_stats[(3, 3)]
    p = 0.25 * 5 / 9
    assert abs(st["success"] / st["attempts"] - p) < 3 * (p * (1 - p) / st["attempts"]) ** 0.5


def test_sampled_classes_are_reproducible():
    a = sample_outcomes((2, 3, 4), 5000, seed=1)
    b = sample_outcomes((2, 3, 4), 5000, seed=1)
    assert {k: v.count for k, v in a.items()} == {k: v.count for k, v in b.items()}
    assert sum(v.count for v in a.values()) == 5000


def test_report_schema(schema_validator):
    v = schema_validator("plan-report.json")
    v.validate(plan(5, 3).to_dict())
    v.validate(plan(5, 3, accounting="physical", trials=200, seed=1).to_dict())
