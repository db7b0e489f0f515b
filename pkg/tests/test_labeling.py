from fractions import Fraction

import numpy as np
import pytest

from rollout_hh._rng import make_rng
from rollout_hh.core import ContractError, ScheduleState, complete_with_rule, generate_instance, replay
from rollout_hh.labeling import (CostLedger, LabelConfig, LabelKind, LabeledSample, build_dataset,
                                 candidate_rules, label_instance, label_state, load_dataset, regret_targets, relabel,
                                 rollout, sample_states, save_dataset, trajectory_loads)
from rollout_hh.rules import ALL_RULES, Rule

from conftest import simulate


def test_trajectory_loads():
    assert trajectory_loads(25, 3) == [9, 8, 8]
    assert sum(trajectory_loads(7, 7)) == 7


def test_sample_states_counts():
    inst = generate_instance(6, 6, seed=5)
    cfg = LabelConfig(states_per_instance=25, trajectories_per_instance=3)
    states = sample_states(inst, cfg, make_rng(11))
    assert len(states) == 25
    assert all(0 <= s.decisions_made <= 35 for s in states)
    # loads {9, 8, 8}: decision indices are strictly increasing inside each trajectory
    idx = [s.decisions_made for s in states]
    for lo, hi in ((0, 9), (9, 17), (17, 25)):
        assert idx[lo:hi] == sorted(set(idx[lo:hi]))
    again = sample_states(inst, cfg, make_rng(11))
    assert [s.dispatch_log for s in again] == [s.dispatch_log for s in states]


def test_single_state_sample():
    inst = generate_instance(4, 3, seed=1)
    cfg = LabelConfig(states_per_instance=1, trajectories_per_instance=1)
    seen = {sample_states(inst, cfg, make_rng(s))[0].decisions_made for s in range(300)}
    assert seen == set(range(12))


def test_sampled_states_are_reachable():
    inst = generate_instance(5, 4, seed=2)
    for s in sample_states(inst, LabelConfig(states_per_instance=10), make_rng(3)):
        trace = simulate(inst, [e.job for e in s.dispatch_log])
        assert [(e.job, e.machine, e.start, e.end) for e in s.dispatch_log] == trace


def test_rollout_full_equals_completion(tiny):
    for rule in ALL_RULES:
        state = ScheduleState(tiny)
        m, steps = rollout(state, rule, None, Rule.FIFO, make_rng(0))
        assert state.decisions_made == 0
        ref = ScheduleState(tiny)
        assert (m, steps) == complete_with_rule(ref, rule, make_rng(0))


def test_rollout_depth_clamp():
    inst = generate_instance(5, 5, seed=9)
    state = replay(inst, [0, 1, 2])
    full = rollout(state, Rule.SPT, None, Rule.FIFO)
    assert rollout(state, Rule.SPT, 22, Rule.FIFO) == full
    assert rollout(state, Rule.SPT, 1000, Rule.FIFO) == full


def test_rollout_depth_one_tiny(tiny):
    # SPT dispatches J1 on M1 [0,2]; FIFO then picks J0 on M0 [0,3] (ready at 0),
    # J1 on M0 [3,7] (ready at 2), J0 on M1 [3,5]
    m, steps = rollout(ScheduleState(tiny), Rule.SPT, 1, Rule.FIFO)
    assert simulate(tiny, [1, 0, 1, 0])[-2:] == [(1, 0, 3, 7), (0, 1, 3, 5)]
    assert (m, steps) == (7, 4)


def test_rollout_terminal_rejected(tiny):
    state = ScheduleState(tiny)
    complete_with_rule(state, Rule.SPT)
    with pytest.raises(ContractError):
        rollout(state, Rule.SPT, None, Rule.FIFO)


def test_regret_targets():
    assert regret_targets([100, 110, 120]) == pytest.approx([0, 0.1, 0.2], abs=1e-15)
    assert regret_targets([7, 7, 7]) == [0, 0, 0]


def test_normalized_target():
    inst = generate_instance(4, 4, seed=4)
    state = ScheduleState(inst)
    cfg = LabelConfig(label_kind="normalized")
    samples, _ = label_state(state, cfg)
    for s in samples:
        assert s.target == s.makespan / s.lower_bound
        # within half an ulp of the exact ratio
        exact = Fraction(s.makespan, s.lower_bound)
        assert abs(Fraction(s.target) - exact) <= Fraction(np.spacing(s.target)) / 2


def test_normalized_relabel_example():
    sample = LabeledSample(np.zeros(42), 0.0, "x", 0, Rule.SPT, 120, 100, 4)
    assert relabel([sample], "normalized")[0].target == pytest.approx(1.2, abs=1e-15)


def test_candidate_rules_breadth():
    cfg = LabelConfig(breadth=3)
    rng = make_rng(0)
    for _ in range(50):
        rules = candidate_rules(cfg, rng)
        assert len(rules) == 3 and Rule.FIFO in rules and rules == sorted(set(rules))
    assert candidate_rules(LabelConfig(), rng) == list(ALL_RULES)
    with pytest.raises(ContractError):
        LabelConfig(breadth=8)


def test_label_state_regret_oracle():
    inst = generate_instance(4, 3, seed=6)
    state = replay(inst, [0, 1])
    cfg = LabelConfig(depth=2, seed=3)
    samples, cost = label_state(state, cfg, state_index=0)
    assert [s.rule for s in samples] == list(ALL_RULES)
    # independent oracle for the deterministic candidates: follow the rule twice, then FIFO
    for s in samples:
        if s.rule is Rule.RANDOM:
            continue
        sim = state.copy()
        m, _ = rollout(sim, s.rule, 2, Rule.FIFO)
        assert s.makespan == m
    best = min(s.makespan for s in samples)
    for s in samples:
        assert s.target == (s.makespan - best) / best
    assert cost.rollouts == 7
    assert cost.steps == 7 * state.remaining_decisions
    assert cost.guided_steps == 7 * 2


def test_ledger_counts_full_full():
    inst = generate_instance(3, 3, seed=0)
    cfg = LabelConfig(states_per_instance=1, trajectories_per_instance=1)
    samples, cost = label_instance(inst, cfg)
    remaining = inst.num_ops - samples[0].decision
    assert cost.rollouts == 7
    assert cost.steps == cost.guided_steps == 7 * remaining


def test_build_dataset_counts():
    insts = [generate_instance(4, 4, seed=s, id=f"i{s}") for s in range(3)]
    cfg = LabelConfig(states_per_instance=5, breadth=3)
    data, cost = build_dataset(insts, cfg)
    assert len(data) == cost.rollouts == 3 * 5 * 3
    with pytest.raises(ContractError):
        build_dataset([], cfg)


def test_build_dataset_deterministic_across_workers():
    insts = [generate_instance(4, 4, seed=s, id=f"i{s}") for s in range(4)]
    cfg = LabelConfig(states_per_instance=6, depth=3)
    a, ca = build_dataset(insts, cfg, threads=1)
    b, cb = build_dataset(insts, cfg, threads=3)
    assert [(s.instance_id, s.decision, s.rule, s.makespan, s.target) for s in a] == \
           [(s.instance_id, s.decision, s.rule, s.makespan, s.target) for s in b]
    assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))
    assert (ca.rollouts, ca.steps, ca.guided_steps) == (cb.rollouts, cb.steps, cb.guided_steps)


def test_relabel_round_trip():
    insts = [generate_instance(4, 4, seed=s, id=f"i{s}") for s in range(2)]
    cfg = LabelConfig(states_per_instance=8, trajectories_per_instance=3, breadth=4)
    regret, _ = build_dataset(insts, cfg)
    norm, _ = build_dataset(insts, LabelConfig(states_per_instance=8, trajectories_per_instance=3,
                                               breadth=4, label_kind=LabelKind.NORMALIZED))
    assert [s.target for s in relabel(regret, "normalized")] == [s.target for s in norm]
    assert [s.target for s in relabel(norm, "regret")] == [s.target for s in regret]


def test_relabel_separates_states_with_same_decision():
    inst = generate_instance(3, 3, seed=1)
    cfg = LabelConfig()
    a, _ = label_state(replay(inst, [0]), cfg)
    b, _ = label_state(replay(inst, [2]), cfg)
    both = a + b
    expected = [s.target for s in a] + [s.target for s in b]
    assert [s.target for s in relabel(both, "regret")] == expected


def test_dataset_file_round_trip(tmp_path):
    inst = generate_instance(4, 4, seed=8, id="odd,id")
    cfg = LabelConfig(states_per_instance=4)
    data, _ = build_dataset([inst], cfg)
    save_dataset(tmp_path / "d.csv", data, cfg)
    back, header = load_dataset(tmp_path / "d.csv")
    assert header["label_config"]["depth"] == "full"
    assert len(back) == len(data)
    for x, y in zip(data, back):
        assert np.array_equal(x.features, y.features)
        assert (x.target, x.instance_id, x.decision, x.rule, x.makespan) == \
               (y.target, y.instance_id, y.decision, y.rule, y.makespan)
    first = (tmp_path / "d.csv").read_bytes()
    save_dataset(tmp_path / "d.csv", back, cfg)
    assert (tmp_path / "d.csv").read_bytes() == first


def test_cost_ledger_add():
    total = CostLedger(1, 2, 0.5, 1) + CostLedger(3, 4, 0.25, 2)
    assert (total.rollouts, total.steps, total.guided_steps) == (4, 6, 3)


def test_exhaustive_regret_min_is_zero():
    inst = generate_instance(3, 2, seed=3)
    for cfg in (LabelConfig(states_per_instance=6), LabelConfig(states_per_instance=6, depth=1),
                LabelConfig(states_per_instance=6, breadth=2)):
        data, _ = build_dataset([inst], cfg)
        assert min(s.target for s in data) == 0.0
        assert all(s.target >= 0 for s in data)
