"""
How much rollout is enough?
===========================

Relabel the same training states with shorter rollouts (depth) and fewer
candidate rules (breadth), refit, and see what that does to test RPD and to
labeling cost.  The scatter plot puts candidate-guided steps on the x axis.
"""

from pathlib import Path

from rollout_hh import LabelConfig, best_fixed_rule, make_split, pareto_sweep
from rollout_hh.svg import scatter_svg

train = make_split("8x6", 20, "train", seed=4)
test = make_split("8x6", 8, "test", seed=4)
h0 = best_fixed_rule(train)

result = pareto_sweep(train, test, depths=(None, 1, 5), breadths=(None, 3),
                      base=LabelConfig(states_per_instance=10, default_rule=h0))
print(result.table())

rows = result.rows
svg = scatter_svg([r.guided_steps for r in rows], [r.mean_rpd for r in rows],
                  [f"d={r.depth or 'full'},b={r.breadth or 'full'}" for r in rows],
                  "candidate-guided rollout steps", "test mean RPD (%)", "budget sweep")
Path("sweep.svg").write_text(svg)
print("wrote sweep.svg")
