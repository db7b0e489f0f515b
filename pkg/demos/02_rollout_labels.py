"""
Rollout labels for one partial schedule
=======================================

Sample decision points from random-rule trajectories, then label one of
them: every candidate rule is followed for a few steps and the default rule
finishes the schedule.  The regret target is the gap to the best candidate.
"""

from dataclasses import replace

from rollout_hh import LabelConfig, build_dataset, generate_instance, label_state, sample_states
from rollout_hh._rng import child_rng

inst = generate_instance(8, 6, seed=3, id="demo")
cfg = LabelConfig(states_per_instance=6, trajectories_per_instance=2, depth=5)

states = sample_states(inst, cfg, child_rng(cfg.seed, inst.id, "states"))
print("sampled decision indices", [s.decisions_made for s in states])

# label the third state; depth 5 means five candidate-guided picks, then FIFO
state = states[2]
samples, cost = label_state(state, cfg, state_index=2)
print(f"state at decision {state.decisions_made}, {state.remaining_decisions} decisions left")
for s in samples:
    print(f"  {s.rule.name:6s} rollout makespan {s.makespan:5d}  regret {s.target:.4f}")
print("cost:", cost.to_dict())

# the same state labeled with makespan / lower bound instead
norm, _ = label_state(state, replace(cfg, label_kind="normalized"), state_index=2)
print("normalized targets", [round(s.target, 4) for s in norm])

# a whole dataset; breadth 3 evaluates FIFO plus two random other rules per state
data, ledger = build_dataset([inst], LabelConfig(states_per_instance=6, breadth=3))
print(len(data), "samples,", ledger.rollouts, "rollouts,", ledger.steps, "simulated steps")
