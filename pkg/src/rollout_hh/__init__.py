"""Rollout-labeled, uncertainty-gated dispatching-rule selection for the JSSP."""

from ._rng import make_rng
from .benchmark import make_split
from .core import (ContractError, Instance, ScheduleState, complete_with_rule, dispatch_step,
                   generate_instance, load_instance, lower_bound, parse_benchmark, save_instance,
                   verify_feasible)
from .evaluation import (EvalReport, SweepResult, ablation_grid, baseline_methods, evaluate,
                         generalization_probe, main_methods, oracle_fixed, pareto_sweep, rpd)
from .features import Normalizer, extract_features, fit_normalizer, normalize
from .knn import SelectorModel, fit, load_model, predict, predict_all, save_model
from .labeling import (FULL, CostLedger, LabelConfig, LabeledSample, LabelKind, build_dataset,
                       label_state, relabel, rollout, sample_states)
from .policies import (Policy, PolicyKind, argmin, choose_rule, fixed, gated, lcb, parse_policy,
                       random_hh, run_policy)
from .rules import ALL_RULES, DETERMINISTIC_RULES, Rule, best_fixed_rule, select_job

__version__ = "0.1.0"

__all__ = [
    "make_rng", "make_split", "ContractError", "Instance", "ScheduleState",
    "complete_with_rule", "dispatch_step", "generate_instance", "load_instance", "lower_bound",
    "parse_benchmark", "save_instance", "verify_feasible", "EvalReport", "SweepResult",
    "ablation_grid", "baseline_methods", "evaluate", "generalization_probe", "main_methods",
    "oracle_fixed", "pareto_sweep", "rpd", "Normalizer", "extract_features", "fit_normalizer",
    "normalize", "SelectorModel", "fit", "load_model", "predict", "predict_all", "save_model",
    "FULL", "CostLedger", "LabelConfig", "LabeledSample", "LabelKind", "build_dataset",
    "label_state", "relabel", "rollout", "sample_states", "Policy", "PolicyKind", "argmin",
    "choose_rule", "fixed", "gated", "lcb", "parse_policy", "random_hh", "run_policy",
    "ALL_RULES", "DETERMINISTIC_RULES", "Rule", "best_fixed_rule", "select_job",
]
