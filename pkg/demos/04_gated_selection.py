"""
Gated selection against fixed rules
===================================

Compare the learned selectors with the fixed rules on a held-out set.  RPD is
measured against the best fixed rule of each instance in hindsight, so the
oracle row is zero by construction.  A larger lambda makes the gate more
reluctant to leave the default rule.
"""

from rollout_hh import (LabelConfig, baseline_methods, best_fixed_rule, build_dataset, evaluate, fit,
                        gated, main_methods, make_split, relabel)

train = make_split("8x6", 40, "train", seed=2)
test = make_split("8x6", 10, "test", seed=2)
h0 = best_fixed_rule(train)

data, _ = build_dataset(train, LabelConfig(states_per_instance=12, default_rule=h0))
regret = fit(data, default_rule=h0)
norm = fit(relabel(data, "normalized"), default_rule=h0, label_kind="normalized")

report = evaluate(main_methods(regret, norm, lam=1.0), test, seed=0)
print(report.table())

# lambda controls how often the gate fires
methods = [(f"gated lam={lam}", gated(regret, lam)) for lam in (0.0, 0.5, 1.0, 2.0, 1e6)]
sweep = evaluate(methods + baseline_methods()[:1], test, seed=0)
for row in sweep.rows[1:]:
    rate = "" if row.switch_rate is None else f"  switches {row.switch_rate:.3f}"
    print(f"{row.name:16s} mean RPD {row.mean_rpd:6.2f}{rate}")
