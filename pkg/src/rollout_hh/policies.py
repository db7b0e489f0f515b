"""Selection policies: which rule to apply at each decision point."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._rng import make_rng
from .core import Instance, ScheduleState
from .features import state_features
from .knn import SelectorModel
from .rules import ALL_RULES, NUM_RULES, Rule, parse_rule, select_job

# The gate compares the predicted gain with lam * max(sigma, SPREAD_FLOOR).
# Without a floor, a neighbourhood whose k targets agree (sigma = 0) switches
# for any lam, and large lam would never reduce to the default rule.
SPREAD_FLOOR = 1e-6


class PolicyKind(str, Enum):
    FIXED = "fixed"
    RANDOM_HH = "random-hh"
    ARGMIN = "argmin"
    LCB = "lcb"
    GATED = "gated"


@dataclass(frozen=True, eq=False)
class Policy:
    kind: PolicyKind
    rule: Rule | None = None
    model: SelectorModel | None = None
    lam: float = 0.0

    def __post_init__(self):
        if self.kind in (PolicyKind.ARGMIN, PolicyKind.LCB, PolicyKind.GATED) and self.model is None:
            raise ValueError(f"{self.kind.value} policy needs a fitted model")
        if self.kind is PolicyKind.FIXED and self.rule is None:
            raise ValueError("fixed policy needs a rule")
        if self.lam < 0 or math.isnan(self.lam):
            raise ValueError("lambda must be >= 0")

    @property
    def default_rule(self) -> Rule | None:
        return self.model.default_rule if self.model is not None else self.rule

    def spec(self) -> str:
        if self.kind is PolicyKind.FIXED:
            return f"fixed:{self.rule.name}"
        if self.kind in (PolicyKind.LCB, PolicyKind.GATED):
            return f"{self.kind.value}:{self.lam}"
        return self.kind.value


def fixed(rule) -> Policy:
    return Policy(PolicyKind.FIXED, rule=parse_rule(rule))


def random_hh() -> Policy:
    return Policy(PolicyKind.RANDOM_HH)


def argmin(model: SelectorModel) -> Policy:
    return Policy(PolicyKind.ARGMIN, model=model)


def lcb(model: SelectorModel, lam: float) -> Policy:
    return Policy(PolicyKind.LCB, model=model, lam=float(lam))


def gated(model: SelectorModel, lam: float) -> Policy:
    return Policy(PolicyKind.GATED, model=model, lam=float(lam))


def parse_policy(spec: str, model: SelectorModel | None = None) -> Policy:
    """Parse "fixed:FIFO", "random-hh", "argmin", "lcb:1.0" or "gated:1.0"."""
    head, _, arg = spec.strip().partition(":")
    head = head.lower()
    if head == "fixed":
        return fixed(arg)
    if head in ("random-hh", "random_hh", "randomhh"):
        return random_hh()
    if head in ("argmin", "lcb", "gated") and model is None:
        raise ValueError(f"policy {spec!r} needs a model")
    if head == "argmin":
        return argmin(model)
    if head == "lcb":
        return lcb(model, float(arg or 1.0))
    if head == "gated":
        return gated(model, float(arg or 1.0))
    raise ValueError(f"unknown policy spec {spec!r}")


def _lowest(scores: np.ndarray) -> Rule:
    # np.argmin returns the first minimum, i.e. the lowest rule code
    return ALL_RULES[int(np.argmin(scores))]


def decide(kind: PolicyKind, r_hat: np.ndarray, sigma: np.ndarray, lam: float, default: Rule) -> Rule:
    """Apply a model-based selection rule to per-rule predictions."""
    if kind is PolicyKind.ARGMIN:
        return _lowest(r_hat)
    if kind is PolicyKind.LCB:
        return _lowest(r_hat - lam * sigma)
    if kind is PolicyKind.GATED:
        best = _lowest(r_hat)
        if r_hat[default] - r_hat[best] > lam * max(sigma[best], SPREAD_FLOOR):
            return best
        return default
    raise ValueError(f"{kind} is not model based")


def choose_rule(policy: Policy, state: ScheduleState, rng: np.random.Generator | None = None) -> Rule:
    if policy.kind is PolicyKind.FIXED:
        return policy.rule
    if policy.kind is PolicyKind.RANDOM_HH:
        return ALL_RULES[int(rng.integers(NUM_RULES))]
    r_hat, sigma = policy.model.predict_state_vector(state_features(state))
    return decide(policy.kind, r_hat, sigma, policy.lam, policy.model.default_rule)


def run_policy(
    policy: Policy,
    instance: Instance,
    seed: int = 0,
    trace: list[Rule] | None = None,
) -> tuple[int, ScheduleState]:
    """Build a full schedule; chosen rules are appended to ``trace`` if given."""
    rng = make_rng(seed)
    state = ScheduleState(instance)
    while not state.is_terminal:
        rule = choose_rule(policy, state, rng)
        if trace is not None:
            trace.append(rule)
        state.dispatch(select_job(rule, state, rng))
    return state.makespan(), state


def switch_rate(trace: list[Rule], default: Rule) -> float:
    return sum(r != default for r in trace) / len(trace) if trace else 0.0
