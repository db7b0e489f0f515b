"""
Nearest-neighbour regret model
==============================

Fit the distance-weighted KNN on rollout labels and ask it, for an unseen
partial schedule, how much regret each rule is expected to have and how much
its neighbours disagree.
"""

import numpy as np

from rollout_hh import (LabelConfig, ScheduleState, best_fixed_rule, build_dataset, fit, make_split,
                        predict_all, select_job)

train = make_split("8x6", 30, "train", seed=1)
h0 = best_fixed_rule(train)
print("default rule on the training set:", h0.name)

data, ledger = build_dataset(train, LabelConfig(states_per_instance=10, default_rule=h0))
model = fit(data, k=7, default_rule=h0)
print(len(model), "stored points, constant feature dims:", int(model.normalizer.constant.sum()))

# walk a test instance a few steps with the default rule, then query
test = make_split("8x6", 1, "test", seed=1)[0]
state = ScheduleState(test)
for _ in range(12):
    state.dispatch(select_job(h0, state))

preds = predict_all(model, state)
for rule, (r_hat, sigma) in preds.items():
    print(f"{rule.name:6s} predicted regret {r_hat:.4f}  spread {sigma:.4f}")

best = min(preds, key=lambda r: (preds[r][0], r))
print("argmin picks", best.name)
print("mean target in the data", np.mean([s.target for s in data]).round(4))
