"""Shared test fixtures data and independent oracles.

The oracles here deliberately avoid the library's own code paths: the
two-state oracle solves the 2x2 fixed point by Cramer's rule, and the
brute-force oracle rebuilds the policy linear system from raw arrays.
"""

from __future__ import annotations

import itertools

import numpy as np

from cyins.model import (
    LinearCoverage,
    MdpModel,
    ThresholdCoverage,
    ZeroCoverage,
    validate_model,
)

TWO_STATE_RAW = {
    "discount": 0.9,
    "states": [
        {"name": "S_G", "loss": 0.0},
        {"name": "S_B", "loss": 10.0},
    ],
    "actions": [
        {"name": "A_L", "cost": 0.0},
        {"name": "A_H", "cost": 1.0},
    ],
    "transitions": [
        [[0.5, 0.5], [0.5, 0.5]],
        [[0.8, 0.2], [0.6, 0.4]],
    ],
    "initial_state": "S_G",
}

FOUR_STATE_RAW = {
    "discount": 0.9,
    "states": [
        {"name": "S_G", "loss": 0.0},
        {"name": "S_B1", "loss": 4.0},
        {"name": "S_B2", "loss": 8.0},
        {"name": "S_B3", "loss": 16.0},
    ],
    "actions": [
        {"name": "A_0", "cost": 0.0},
        {"name": "A_L", "cost": 0.3},
        {"name": "A_H", "cost": 0.6},
    ],
    "transitions": [
        [[0.25, 0.25, 0.25, 0.25]] * 4,
        [[0.4, 0.3, 0.2, 0.1]] * 4,
        [
            [0.8, 0.2, 0.0, 0.0],
            [0.7, 0.2, 0.1, 0.0],
            [0.6, 0.2, 0.1, 0.1],
            [0.5, 0.2, 0.2, 0.1],
        ],
    ],
    "initial_state": "S_G",
}

# Action indices in the two-state fixture: weak protection first.
WEAK, STRONG = 0, 1


def cramer_pair_value(delta, p_good_row, p_bad_row, stage_good, stage_bad):
    """2x2 fixed-point solve by Cramer's rule (independent of the library)."""
    a11 = 1.0 - delta * p_good_row[0]
    a12 = -delta * p_good_row[1]
    a21 = -delta * p_bad_row[0]
    a22 = 1.0 - delta * p_bad_row[1]
    det = a11 * a22 - a12 * a21
    v_good = (stage_good * a22 - a12 * stage_bad) / det
    v_bad = (a11 * stage_bad - stage_good * a21) / det
    return v_good, v_bad


def two_state_policy_value(raw, action_good, action_bad, level=0.0):
    """Oracle value of a two-state policy under linear coverage ``level``."""
    delta = raw["discount"]
    losses = [s["loss"] for s in raw["states"]]
    costs = [a["cost"] for a in raw["actions"]]
    trans = raw["transitions"]
    stage_g = (1.0 - level) * losses[0] + costs[action_good]
    stage_b = (1.0 - level) * losses[1] + costs[action_bad]
    return cramer_pair_value(delta, trans[action_good][0], trans[action_bad][1], stage_g, stage_b)


def brute_force_optimal(model: MdpModel, coverage) -> tuple[tuple[int, ...], np.ndarray]:
    """Enumerate all policies with raw-array solves; minimize the initial-state value."""
    n, m = model.n_states, model.n_actions
    retained = np.array([s.loss - _paid(coverage, s.loss) for s in model.states])
    costs = model.costs
    best = None
    for assignment in itertools.product(range(m), repeat=n):
        p_pi = np.array([model.transitions[assignment[s], s] for s in range(n)])
        stage = retained + costs[list(assignment)]
        values = np.linalg.solve(np.eye(n) - model.discount * p_pi, stage)
        if best is None or values[model.initial_state] < best[1][model.initial_state]:
            best = (assignment, values)
    return best


def _paid(coverage, loss):
    if isinstance(coverage, ZeroCoverage):
        return 0.0
    if isinstance(coverage, LinearCoverage):
        return coverage.level * loss
    if isinstance(coverage, ThresholdCoverage):
        level = coverage.high_level if loss > coverage.cutoff else coverage.low_level
        return level * loss
    raise TypeError(coverage)


def random_model(rng, max_states=4, max_actions=3, d_lo=0.5, d_hi=0.99) -> MdpModel:
    """A random valid model in the sizes used by the cross-validation suite."""
    n = int(rng.integers(1, max_states + 1))
    m = int(rng.integers(1, max_actions + 1))
    raw = {
        "discount": float(rng.uniform(d_lo, d_hi)),
        "states": [
            {"name": f"s{i}", "loss": float(rng.uniform(0.0, 20.0))} for i in range(n)
        ],
        "actions": [
            {"name": f"a{j}", "cost": float(rng.uniform(0.0, 3.0))} for j in range(m)
        ],
        "transitions": _random_rows(rng, m, n),
        "initial_state": int(rng.integers(0, n)),
    }
    return validate_model(raw)


def _random_rows(rng, m, n):
    raw = rng.random((m, n, n)) + 0.05
    rows = raw / raw.sum(axis=2, keepdims=True)
    return rows.tolist()


def random_coverage(rng, model: MdpModel):
    kind = rng.integers(0, 3)
    if kind == 0:
        return ZeroCoverage()
    if kind == 1:
        return LinearCoverage(float(rng.uniform(0.0, 1.0)))
    max_loss = float(model.losses.max())
    low, high = sorted(rng.uniform(0.0, 1.0, size=2))
    return ThresholdCoverage(
        cutoff=float(rng.uniform(0.0, max(1.0, 1.2 * max_loss))),
        low_level=float(low),
        high_level=float(high),
    )


def random_two_state_raw(rng) -> dict:
    """A random valid two-state / two-action description (weak action first).

    Scales are kept moderate so closed-form vs numeric comparisons are
    meaningful at 1e-10 absolute tolerance.
    """
    delta = float(rng.uniform(0.5, 0.95))
    loss_good = float(rng.uniform(0.0, 3.0))
    loss_bad = loss_good + float(rng.uniform(0.5, 20.0))
    cost_weak = float(rng.uniform(0.0, 1.0))
    cost_strong = cost_weak + float(rng.uniform(0.05, 3.0))

    def stay_pair():
        lo = float(rng.uniform(0.02, 0.9))
        hi = lo + float(rng.uniform(0.02, 0.96 - lo)) if lo < 0.94 else lo + 0.02
        return lo, min(hi, 0.98)

    # Strong protection ends in the good state more often, from either state.
    weak_gg, strong_gg = stay_pair()
    weak_bg, strong_bg = stay_pair()
    return {
        "discount": delta,
        "states": [
            {"name": "good", "loss": loss_good},
            {"name": "bad", "loss": loss_bad},
        ],
        "actions": [
            {"name": "weak", "cost": cost_weak},
            {"name": "strong", "cost": cost_strong},
        ],
        "transitions": [
            [[weak_gg, 1.0 - weak_gg], [weak_bg, 1.0 - weak_bg]],
            [[strong_gg, 1.0 - strong_gg], [strong_bg, 1.0 - strong_bg]],
        ],
        "initial_state": "good",
    }
