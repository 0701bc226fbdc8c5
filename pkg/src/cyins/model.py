"""Core data model: Markov risk process, coverage functions, policy evaluation.

A user's cyber-risk position evolves as a finite discounted Markov decision
process.  Each state carries a fixed direct monetary loss, each protection
action a fixed cost, and the chosen action shapes the transition
probabilities.  An insurance coverage function reimburses part of the direct
loss, so the per-stage "effective loss" is

    loss(state) - coverage(loss(state)) + cost(action).

Everything in this module is immutable after construction and safe to share
across threads.  Policy evaluation is an exact dense linear solve, which lets
it double as an oracle for the iterative solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Action",
    "LinearCoverage",
    "MdpModel",
    "ModelValidationError",
    "ProtectionPolicy",
    "State",
    "ThresholdCoverage",
    "ZeroCoverage",
    "apply_coverage",
    "decompose_value",
    "effective_loss",
    "evaluate_policy",
    "stage_loss_matrix",
    "validate_model",
]

ROW_SUM_TOL = 1e-9


class ModelValidationError(ValueError):
    """Raised when a raw model description violates the model invariants.

    Carries the full itemized list of problems in ``errors`` so callers can
    report everything wrong with a file at once.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class State:
    name: str
    loss: float


@dataclass(frozen=True)
class Action:
    name: str
    cost: float


@dataclass(frozen=True)
class ZeroCoverage:
    """No insurance: every loss is borne in full."""


@dataclass(frozen=True)
class LinearCoverage:
    """Proportional coverage: a loss x is reimbursed level * x."""

    level: float

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"coverage level must be in [0, 1], got {self.level}")


@dataclass(frozen=True)
class ThresholdCoverage:
    """Two-tier coverage keyed on the loss size.

    Losses at or below ``cutoff`` are reimbursed at ``low_level``; losses
    strictly above it at ``high_level``.  Ties pay the low tier.
    """

    cutoff: float
    low_level: float
    high_level: float

    def __post_init__(self):
        if self.cutoff < 0.0:
            raise ValueError(f"cutoff must be non-negative, got {self.cutoff}")
        for label, level in (("low_level", self.low_level), ("high_level", self.high_level)):
            if not 0.0 <= level <= 1.0:
                raise ValueError(f"{label} must be in [0, 1], got {level}")


Coverage = Union[ZeroCoverage, LinearCoverage, ThresholdCoverage]


@dataclass(frozen=True)
class ProtectionPolicy:
    """Stationary policy: one action index per state, in state order."""

    actions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))


@dataclass(frozen=True, eq=False)
class MdpModel:
    """Validated discounted Markov decision process with monetary losses.

    ``transitions`` is indexed ``[action][from_state][to_state]`` and is
    frozen (read-only numpy array).  Use :func:`validate_model` to build one
    from a raw description; direct construction skips validation.
    """

    states: tuple[State, ...]
    actions: tuple[Action, ...]
    transitions: np.ndarray
    discount: float
    initial_state: int = 0

    def __post_init__(self):
        trans = np.asarray(self.transitions, dtype=float)
        trans.setflags(write=False)
        object.__setattr__(self, "transitions", trans)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def losses(self) -> np.ndarray:
        return np.array([s.loss for s in self.states])

    @property
    def costs(self) -> np.ndarray:
        return np.array([a.cost for a in self.actions])

    def state_index(self, name: str) -> int:
        for i, s in enumerate(self.states):
            if s.name == name:
                return i
        raise KeyError(f"unknown state {name!r}")

    def action_index(self, name: str) -> int:
        for i, a in enumerate(self.actions):
            if a.name == name:
                return i
        raise KeyError(f"unknown action {name!r}")

    def check_policy(self, policy: ProtectionPolicy) -> None:
        if len(policy.actions) != self.n_states:
            raise ValueError(
                f"policy has {len(policy.actions)} entries for {self.n_states} states"
            )
        for s, a in enumerate(policy.actions):
            if not 0 <= a < self.n_actions:
                raise ValueError(f"policy assigns invalid action {a} at state {s}")


def validate_model(raw: Mapping) -> MdpModel:
    """Build an :class:`MdpModel` from a raw description, checking every invariant.

    ``raw`` uses the model-file schema: ``discount`` (float), ``states``
    (list of ``{name, loss}``), ``actions`` (list of ``{name, cost}``),
    ``transitions`` (nested ``[action][from][to]``) and optionally
    ``initial_state`` (a state name or index, default first state).

    Raises :class:`ModelValidationError` carrying the full list of
    violations; nothing is silently repaired.
    """
    errors: list[str] = []

    def fail() -> "ModelValidationError":
        return ModelValidationError(errors)

    if not isinstance(raw, Mapping):
        errors.append("model description must be a mapping")
        raise fail()

    for key in ("discount", "states", "actions", "transitions"):
        if key not in raw:
            errors.append(f"missing required key {key!r}")
    if errors:
        raise fail()

    states: list[State] = []
    for i, entry in enumerate(raw["states"]):
        try:
            name = str(entry["name"])
            loss = float(entry["loss"])
        except (TypeError, KeyError, ValueError):
            errors.append(f"states[{i}]: expected {{name, loss}}")
            continue
        if not np.isfinite(loss) or loss < 0.0:
            errors.append(f"state {name!r}: direct loss must be finite and >= 0, got {loss}")
        states.append(State(name, loss))

    actions: list[Action] = []
    for i, entry in enumerate(raw["actions"]):
        try:
            name = str(entry["name"])
            cost = float(entry["cost"])
        except (TypeError, KeyError, ValueError):
            errors.append(f"actions[{i}]: expected {{name, cost}}")
            continue
        if not np.isfinite(cost) or cost < 0.0:
            errors.append(f"action {name!r}: cost must be finite and >= 0, got {cost}")
        actions.append(Action(name, cost))

    if len(states) == 0:
        errors.append("model needs at least one state")
    if len(actions) == 0:
        errors.append("model needs at least one action")
    if len({s.name for s in states}) != len(states):
        errors.append("state names must be unique")
    if len({a.name for a in actions}) != len(actions):
        errors.append("action names must be unique")

    try:
        discount = float(raw["discount"])
    except (TypeError, ValueError):
        discount = float("nan")
    if not np.isfinite(discount) or not 0.0 <= discount < 1.0:
        errors.append(f"discount must lie in [0, 1), got {raw['discount']!r}")

    n, m = len(states), len(actions)
    trans = _validate_transitions(raw["transitions"], states, actions, errors)
    if trans is not None and n and m:
        for a in range(m):
            for s in range(n):
                row = trans[a, s]
                if np.any(row < -ROW_SUM_TOL) or np.any(row > 1.0 + ROW_SUM_TOL):
                    errors.append(
                        f"transition row for action {actions[a].name!r} from state "
                        f"{states[s].name!r} has entries outside [0, 1]"
                    )
                total = float(row.sum())
                if abs(total - 1.0) > ROW_SUM_TOL:
                    errors.append(
                        f"transition row for action {actions[a].name!r} from state "
                        f"{states[s].name!r} sums to {total!r}, expected 1"
                    )

    initial = raw.get("initial_state", 0)
    initial_index = 0
    if isinstance(initial, str):
        matches = [i for i, s in enumerate(states) if s.name == initial]
        if matches:
            initial_index = matches[0]
        else:
            errors.append(f"initial_state {initial!r} is not a declared state name")
    else:
        try:
            initial_index = int(initial)
        except (TypeError, ValueError):
            errors.append(f"initial_state must be a state name or index, got {initial!r}")
            initial_index = 0
        else:
            if not 0 <= initial_index < max(n, 1):
                errors.append(f"initial_state index {initial_index} out of range")
                initial_index = 0

    if errors:
        raise fail()

    return MdpModel(
        states=tuple(states),
        actions=tuple(actions),
        transitions=trans,
        discount=discount,
        initial_state=initial_index,
    )


def _validate_transitions(raw_trans, states, actions, errors) -> np.ndarray | None:
    """Shape-check the nested [action][from][to] array, naming offending blocks."""
    n, m = len(states), len(actions)
    try:
        blocks = list(raw_trans)
    except TypeError:
        errors.append("transitions: expected a nested array [action][from][to]")
        return None
    if len(blocks) != m:
        errors.append(f"transitions: expected {m} action blocks, got {len(blocks)}")
        return None
    ok = True
    for a, block in enumerate(blocks):
        label = actions[a].name if a < len(actions) else str(a)
        try:
            rows = list(block)
        except TypeError:
            rows = None
        if rows is None or len(rows) != n:
            got = "not a sequence" if rows is None else f"{len(rows)} rows"
            errors.append(f"transitions for action {label!r}: expected {n} rows, got {got}")
            ok = False
            continue
        for s, row in enumerate(rows):
            try:
                entries = [float(x) for x in row]
            except (TypeError, ValueError):
                entries = None
            if entries is None or len(entries) != n:
                errors.append(
                    f"transitions for action {label!r} from state {states[s].name!r}: "
                    f"expected {n} numeric entries"
                )
                ok = False
    if not ok:
        return None
    return np.asarray(raw_trans, dtype=float)


def apply_coverage(coverage: Coverage, loss: float) -> float:
    """Reimbursement paid for a direct loss; always within [0, loss]."""
    if loss < 0.0:
        raise ValueError(f"loss must be non-negative, got {loss}")
    if isinstance(coverage, ZeroCoverage):
        return 0.0
    if isinstance(coverage, LinearCoverage):
        return coverage.level * loss
    if isinstance(coverage, ThresholdCoverage):
        level = coverage.high_level if loss > coverage.cutoff else coverage.low_level
        return level * loss
    raise TypeError(f"not a coverage policy: {coverage!r}")


def effective_loss(model: MdpModel, state: int, action: int, coverage: Coverage) -> float:
    """Per-stage effective loss: direct loss net of coverage, plus protection cost."""
    x = model.states[state].loss
    return x - apply_coverage(coverage, x) + model.actions[action].cost


def stage_loss_matrix(model: MdpModel, coverage: Coverage) -> np.ndarray:
    """Effective losses for every (state, action) pair, shape (n_states, n_actions)."""
    retained = np.array(
        [s.loss - apply_coverage(coverage, s.loss) for s in model.states]
    )
    return retained[:, None] + model.costs[None, :]


def _policy_system(model: MdpModel, policy: ProtectionPolicy, stage: np.ndarray):
    """Transition matrix and stage vector induced by a stationary policy."""
    idx = np.asarray(policy.actions)
    p_pi = model.transitions[idx, np.arange(model.n_states)]
    return p_pi, stage[np.arange(model.n_states), idx]


def evaluate_policy(
    model: MdpModel, policy: ProtectionPolicy, coverage: Coverage
) -> np.ndarray:
    """Exact expected cumulative discounted effective loss per starting state.

    Solves the policy's fixed-point equation
    ``V = stage + discount * P_policy @ V`` as a dense linear system, which is
    nonsingular for any discount < 1.
    """
    model.check_policy(policy)
    stage = stage_loss_matrix(model, coverage)
    p_pi, stage_pi = _policy_system(model, policy, stage)
    n = model.n_states
    return np.linalg.solve(np.eye(n) - model.discount * p_pi, stage_pi)


def decompose_value(
    model: MdpModel, policy: ProtectionPolicy
) -> tuple[np.ndarray, np.ndarray]:
    """Split the uninsured value into direct-loss and protection-cost streams.

    Returns ``(direct, cost)`` where each is the policy value computed with
    only that stage term; their sum equals ``evaluate_policy`` under zero
    coverage.  The direct part is the user's cyber-risk exposure, which is
    what rises when insurance induces weaker protection.
    """
    model.check_policy(policy)
    idx = np.asarray(policy.actions)
    p_pi = model.transitions[idx, np.arange(model.n_states)]
    system = np.eye(model.n_states) - model.discount * p_pi
    direct = np.linalg.solve(system, model.losses)
    cost = np.linalg.solve(system, model.costs[idx])
    return direct, cost
