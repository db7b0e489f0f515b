"""The seven low-level dispatching rules.

Each rule picks one job from the ready set (all unfinished jobs).  Ties go
to the lowest job index, except for RANDOM which draws uniformly.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .core import ContractError, Instance, ScheduleState, complete_with_rule


class Rule(IntEnum):
    SPT = 0
    LPT = 1
    MWKR = 2
    LWKR = 3
    MOPNR = 4
    FIFO = 5
    RANDOM = 6


ALL_RULES: tuple[Rule, ...] = tuple(Rule)
DETERMINISTIC_RULES: tuple[Rule, ...] = tuple(r for r in Rule if r is not Rule.RANDOM)
NUM_RULES = len(ALL_RULES)


def parse_rule(name: str | int | Rule) -> Rule:
    """Accept a Rule, its integer code, or its name in any case."""
    if isinstance(name, Rule):
        return name
    if isinstance(name, (int, np.integer)):
        return Rule(int(name))
    try:
        return Rule[name.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; expected one of {[r.name for r in Rule]}") from None


def _argbest(state: ScheduleState, key, maximize: bool) -> int:
    M = state.instance.num_machines
    best_j, best_v = -1, None
    for j, k in enumerate(state.next_op):
        if k >= M:
            continue
        v = key(j, k)
        if best_v is None or (v > best_v if maximize else v < best_v):
            best_j, best_v = j, v
    if best_j < 0:
        raise ContractError("no unfinished job to select")
    return best_j


def select_job(rule: Rule | int, state: ScheduleState, rng: np.random.Generator | None = None) -> int:
    p = state.instance.proc_time
    suffix = state.instance.suffix
    M = state.instance.num_machines
    r = int(rule)
    if r == Rule.SPT:
        return _argbest(state, lambda j, k: p[j][k], False)
    if r == Rule.LPT:
        return _argbest(state, lambda j, k: p[j][k], True)
    if r == Rule.MWKR:
        return _argbest(state, lambda j, k: suffix[j][k], True)
    if r == Rule.LWKR:
        return _argbest(state, lambda j, k: suffix[j][k], False)
    if r == Rule.MOPNR:
        return _argbest(state, lambda j, k: M - k, True)
    if r == Rule.FIFO:
        jr, ao = state.job_ready, state.arrival_order
        return _argbest(state, lambda j, k: (jr[j], ao[j]), False)
    if r == Rule.RANDOM:
        if rng is None:
            raise ContractError("RANDOM rule needs a random stream")
        ready = state.ready_jobs()
        if not ready:
            raise ContractError("no unfinished job to select")
        return ready[int(rng.integers(len(ready)))]
    raise ValueError(f"unknown rule code {rule!r}")


def rule_makespan(instance: Instance, rule: Rule | int, rng: np.random.Generator | None = None) -> int:
    state = ScheduleState(instance)
    makespan, _ = complete_with_rule(state, rule, rng)
    return makespan


def best_fixed_rule(
    instances: Sequence[Instance],
    rules: Iterable[Rule] = DETERMINISTIC_RULES,
    seed: int = 0,
) -> Rule:
    """The rule with the lowest mean makespan over ``instances`` (RANDOM skipped).

    ``seed`` is accepted for interface symmetry; the rules evaluated here are
    deterministic.
    """
    if not instances:
        raise ContractError("best_fixed_rule needs at least one instance")
    candidates = sorted(parse_rule(r) for r in rules if parse_rule(r) is not Rule.RANDOM)
    if not candidates:
        raise ContractError("no deterministic rule to compare")
    # integer totals share a denominator, so comparing them is exact
    best, best_total = None, None
    for rule in candidates:
        total = sum(rule_makespan(inst, rule) for inst in instances)
        if best_total is None or total < best_total:
            best, best_total = rule, total
    return best
