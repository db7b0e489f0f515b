"""
Dispatching rules on a random job shop
======================================

Build one 10x10 instance, schedule it with each fixed rule and look at the
makespans next to the lower bound.  The FIFO schedule is written out as an
SVG Gantt chart.
"""

from pathlib import Path

from rollout_hh import (ALL_RULES, ScheduleState, complete_with_rule, generate_instance, lower_bound,
                        Rule, make_rng, verify_feasible)
from rollout_hh.svg import gantt_svg

inst = generate_instance(10, 10, seed=42)
print(inst.id, "jobs", inst.num_jobs, "machines", inst.num_machines)
print("lower bound", lower_bound(inst))

# every rule builds a full schedule, one operation per decision
for rule in ALL_RULES:
    state = ScheduleState(inst)
    makespan, steps = complete_with_rule(state, rule, make_rng(0))
    gap = 100 * (makespan - lower_bound(inst)) / lower_bound(inst)
    print(f"{rule.name:6s} makespan {makespan:5d}  ({gap:5.1f}% over LB)  feasible={bool(verify_feasible(state))}")

# the dispatch log is the schedule
state = ScheduleState(inst)
complete_with_rule(state, Rule.FIFO)
for entry in state.dispatch_log[:5]:
    print(entry)

out = Path("fifo-gantt.svg")
out.write_text(gantt_svg(state, f"{inst.id} / FIFO"))
print("wrote", out)
