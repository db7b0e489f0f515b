"""Evaluation protocol: RPD against the per-instance best fixed rule.

RPD = 100 * (makespan - oracle) / oracle, where ``oracle`` is the lowest
makespan over the six deterministic rules on that instance.  A method wins an
instance when its makespan equals the minimum over all compared methods;
tied methods all win.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ContractError, Instance
from .io import FORMAT_VERSION, atomic_write_text
from .knn import SelectorModel, fit
from .labeling import LabelConfig, LabelKind, budget_str, build_dataset
from .policies import Policy, PolicyKind, argmin, fixed, gated, lcb, random_hh, run_policy
from .rules import DETERMINISTIC_RULES, Rule, best_fixed_rule, rule_makespan

RANDOM_HH_SEEDS = 5
ORACLE_NAME = "Oracle-Fixed"


def rpd(makespan: float, oracle: float) -> float:
    if oracle <= 0:
        raise ContractError("oracle makespan must be positive")
    return 100.0 * (makespan - oracle) / oracle


def oracle_fixed(instance: Instance, rules: Sequence[Rule] = DETERMINISTIC_RULES,
                 seed: int = 0, include_random: bool = False) -> float:
    """Best fixed-rule makespan in hindsight.

    With ``include_random`` the RANDOM rule joins the pool through its mean
    makespan over five seeded runs.
    """
    values: list[float] = [rule_makespan(instance, r) for r in rules if r is not Rule.RANDOM]
    if include_random:
        values.append(float(np.mean([run_policy(fixed(Rule.RANDOM), instance, seed + s)[0]
                                     for s in range(RANDOM_HH_SEEDS)])))
    return min(values)


@dataclass
class MethodRow:
    name: str
    makespans: list[float]
    rpds: list[float]
    wins: int = 0
    switch_rate: float | None = None

    @property
    def mean_rpd(self) -> float:
        return float(np.mean(self.rpds))

    @property
    def median_rpd(self) -> float:
        return float(statistics.median(self.rpds))

    def summary(self) -> dict:
        d = {"method": self.name, "mean_rpd": round(self.mean_rpd, 6),
             "median_rpd": round(self.median_rpd, 6), "wins": self.wins}
        if self.switch_rate is not None:
            d["switch_rate"] = round(self.switch_rate, 6)
        return d


@dataclass
class EvalReport:
    rows: list[MethodRow]
    instance_ids: list[str]
    oracle: list[float]
    metadata: dict = field(default_factory=dict)

    def row(self, name: str) -> MethodRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def mean_rpd(self, name: str) -> float:
        return self.row(name).mean_rpd

    def table(self) -> str:
        lines = [f"{'method':<24} {'mean RPD':>9} {'median':>8} {'wins':>5}"]
        for r in self.rows:
            lines.append(f"{r.name:<24} {r.mean_rpd:>9.2f} {r.median_rpd:>8.2f} {r.wins:>5d}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "format": "rollout_hh.report", "version": FORMAT_VERSION,
            "metadata": self.metadata,
            "instance_ids": self.instance_ids,
            "oracle": self.oracle,
            "rows": [{**r.summary(), "makespans": r.makespans, "rpds": [round(x, 9) for x in r.rpds]}
                     for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps({"format": "rollout_hh.report", "version": FORMAT_VERSION,
                                     "metadata": self.metadata}, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "mean_rpd", "median_rpd", "wins", "switch_rate"])
        for r in self.rows:
            s = r.summary()
            w.writerow([s["method"], f"{s['mean_rpd']:.6f}", f"{s['median_rpd']:.6f}", s["wins"],
                        "" if r.switch_rate is None else f"{r.switch_rate:.6f}"])
        return buf.getvalue()

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        atomic_write_text(csv_path, self.to_csv())
        atomic_write_text(json_path, json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")
        return csv_path, json_path


# -- per-instance work, shared with worker processes ----------------------------

_METHODS: list[tuple[str, Policy]] = []


def _init_worker(methods):
    global _METHODS
    _METHODS = methods


def _run_instance(args) -> tuple[float, list[float], list[tuple[int, int]]]:
    instance, seed, include_random, per_seed = args
    oracle = oracle_fixed(instance, seed=seed, include_random=include_random)
    values, switches = [], []
    for _, policy in _METHODS:
        if policy.kind is PolicyKind.RANDOM_HH:
            runs = [run_policy(policy, instance, seed + s)[0] for s in range(RANDOM_HH_SEEDS)]
            if per_seed:
                # encoded as the makespan that reproduces the mean per-seed RPD
                values.append(oracle * (1 + np.mean([rpd(m, oracle) for m in runs]) / 100.0))
            else:
                values.append(float(np.mean(runs)))
            switches.append((0, 0))
            continue
        trace: list[Rule] = []
        m, _ = run_policy(policy, instance, seed, trace)
        values.append(float(m))
        d = policy.default_rule
        switches.append((sum(r != d for r in trace), len(trace)))
    return float(oracle), values, switches


def evaluate(
    methods: Sequence[tuple[str, Policy]],
    test: Sequence[Instance],
    seed: int = 0,
    threads: int = 1,
    include_random_in_oracle: bool = False,
    random_hh_per_seed_rpd: bool = False,
    metadata: dict | None = None,
) -> EvalReport:
    """Run every method on every test instance and aggregate RPD and wins.

    Random-HH is run with seeds ``seed .. seed+4`` and its per-instance value
    is the mean makespan (or, with ``random_hh_per_seed_rpd``, the mean of the
    per-seed RPDs).  Other methods use ``seed`` for any RANDOM rule draws.
    """
    if not methods or not test:
        raise ContractError("evaluate needs at least one method and one test instance")
    methods = list(methods)
    jobs = [(inst, seed, include_random_in_oracle, random_hh_per_seed_rpd) for inst in test]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(methods,)) as pool:
            results = list(pool.map(_run_instance, jobs))
    else:
        _init_worker(methods)
        results = [_run_instance(j) for j in jobs]

    oracle = [r[0] for r in results]
    rows = []
    for mi, (name, policy) in enumerate(methods):
        ms = [r[1][mi] for r in results]
        row = MethodRow(name, ms, [rpd(m, o) for m, o in zip(ms, oracle)])
        if policy.kind in (PolicyKind.GATED, PolicyKind.LCB, PolicyKind.ARGMIN):
            sw = sum(r[2][mi][0] for r in results)
            tot = sum(r[2][mi][1] for r in results)
            row.switch_rate = sw / tot if tot else 0.0
        rows.append(row)
    best = [min(r[1]) for r in results]
    for row in rows:
        row.wins = sum(m == b for m, b in zip(row.makespans, best))
    oracle_row = MethodRow(ORACLE_NAME, list(oracle), [0.0] * len(oracle),
                           wins=sum(o <= b for o, b in zip(oracle, best)))
    meta = {"seed": seed, "random_hh_seeds": RANDOM_HH_SEEDS,
            "oracle_includes_random": include_random_in_oracle,
            "random_hh_per_seed_rpd": random_hh_per_seed_rpd,
            "methods": {name: p.spec() for name, p in methods}}
    meta.update(metadata or {})
    return EvalReport([oracle_row] + rows, [i.id for i in test], oracle, meta)


# -- method sets ------------------------------------------------------------------

def baseline_methods() -> list[tuple[str, Policy]]:
    rules = [Rule.FIFO, Rule.MOPNR, Rule.MWKR]
    out = [(r.name, fixed(r)) for r in rules]
    out.append(("Random-HH", random_hh()))
    out += [(r.name, fixed(r)) for r in (Rule.SPT, Rule.LPT, Rule.LWKR)]
    return out


def main_methods(regret_model: SelectorModel, norm_model: SelectorModel,
                 lam: float = 1.0) -> list[tuple[str, Policy]]:
    """The learned selectors plus all baselines."""
    return [
        ("Regret-Gated", gated(regret_model, lam)),
        ("Regret-Argmin", argmin(regret_model)),
        ("Norm-Argmin", argmin(norm_model)),
    ] + baseline_methods()


def ablation_methods(models: dict[LabelKind, SelectorModel],
                     lambdas: Sequence[float] = (0.5, 1.0, 2.0)) -> list[tuple[str, Policy]]:
    out = []
    for kind in (LabelKind.REGRET, LabelKind.NORMALIZED):
        model = models[kind]
        out.append((f"{kind.value}-argmin", argmin(model)))
        for lam in lambdas:
            out.append((f"{kind.value}-gated-l{float(lam)}", gated(model, lam)))
        for lam in lambdas:
            out.append((f"{kind.value}-lcb-l{float(lam)}", lcb(model, lam)))
    return out


def ablation_grid(
    models: dict[LabelKind, SelectorModel],
    test: Sequence[Instance],
    lambdas: Sequence[float] = (0.5, 1.0, 2.0),
    seed: int = 0,
    threads: int = 1,
    metadata: dict | None = None,
) -> EvalReport:
    """Label kind x {argmin, gated, lcb} x lambda; one model per label kind."""
    report = evaluate(ablation_methods(models, lambdas), test, seed, threads, metadata=metadata)
    report.metadata["lambdas"] = [float(x) for x in lambdas]
    return report


# -- rollout-budget sweep -----------------------------------------------------------

@dataclass
class SweepRow:
    depth: int | None
    breadth: int | None
    wall_seconds: float
    rollouts: int
    steps: int
    guided_steps: int
    mean_rpd: float
    median_rpd: float
    switch_rate: float

    def to_dict(self) -> dict:
        return {"depth": budget_str(self.depth), "breadth": budget_str(self.breadth),
                "wall_seconds": round(self.wall_seconds, 3), "rollouts": self.rollouts,
                "steps": self.steps, "guided_steps": self.guided_steps, "mean_rpd": round(self.mean_rpd, 6),
                "median_rpd": round(self.median_rpd, 6), "switch_rate": round(self.switch_rate, 6)}


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    def cell(self, depth, breadth) -> SweepRow:
        for r in self.rows:
            if r.depth == depth and r.breadth == breadth:
                return r
        raise KeyError((depth, breadth))

    def table(self) -> str:
        lines = [f"{'depth':>5} {'b':>4} {'time(s)':>8} {'rollouts':>9} {'steps':>9} {'guided':>9} {'RPD':>7}"]
        for r in self.rows:
            d = r.to_dict()
            lines.append(f"{d['depth']:>5} {d['breadth']:>4} {r.wall_seconds:>8.2f} "
                         f"{r.rollouts:>9d} {r.steps:>9d} {r.guided_steps:>9d} {r.mean_rpd:>7.2f}")
        return "\n".join(lines)

    def to_json(self, with_time: bool = True) -> dict:
        rows = [r.to_dict() for r in self.rows]
        if not with_time:
            for r in rows:
                r.pop("wall_seconds")
        return {"format": "rollout_hh.sweep", "version": FORMAT_VERSION,
                "metadata": self.metadata, "rows": rows}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps({"format": "rollout_hh.sweep", "version": FORMAT_VERSION,
                                     "metadata": self.metadata}, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        cols = ["depth", "breadth", "wall_seconds", "rollouts", "steps", "guided_steps", "mean_rpd",
                "median_rpd", "switch_rate"]
        w.writerow(cols)
        for r in self.rows:
            d = r.to_dict()
            w.writerow([d[c] for c in cols])
        return buf.getvalue()

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        atomic_write_text(csv_path, self.to_csv())
        atomic_write_text(json_path, json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")
        return csv_path, json_path


DEFAULT_DEPTHS = (None, 1, 3, 5, 10)
DEFAULT_BREADTHS = (None, 3, 5)


def pareto_sweep(
    train: Sequence[Instance],
    test: Sequence[Instance],
    depths: Sequence[int | None] = DEFAULT_DEPTHS,
    breadths: Sequence[int | None] = DEFAULT_BREADTHS,
    base: LabelConfig | None = None,
    lam: float = 1.0,
    k: int = 7,
    epsilon: float = 1e-8,
    seed: int = 0,
    threads: int = 1,
    metadata: dict | None = None,
) -> SweepResult:
    """Relabel, refit and evaluate the gated policy for every (depth, breadth).

    All cells share the default rule, the sampled states (state sampling only
    depends on the label seed and instance id) and the evaluation seed.
    """
    base = base or LabelConfig()
    h0 = best_fixed_rule(train)
    oracle = [oracle_fixed(inst) for inst in test]
    rows = []
    for depth in depths:
        for breadth in breadths:
            cfg = LabelConfig(base.states_per_instance, base.trajectories_per_instance, depth, breadth,
                              LabelKind.REGRET, h0, base.seed, base.include_default)
            t0 = time.perf_counter()
            data, ledger = build_dataset(train, cfg, threads)
            model = fit(data, k, epsilon, h0, LabelKind.REGRET)
            elapsed = time.perf_counter() - t0
            policy = gated(model, lam)
            ms, sw, tot = [], 0, 0
            for inst in test:
                trace: list[Rule] = []
                ms.append(run_policy(policy, inst, seed, trace)[0])
                sw += sum(r != h0 for r in trace)
                tot += len(trace)
            rpds = [rpd(m, o) for m, o in zip(ms, oracle)]
            rows.append(SweepRow(depth, breadth, elapsed, ledger.rollouts, ledger.steps,
                                 ledger.guided_steps, float(np.mean(rpds)), float(statistics.median(rpds)), sw / tot))
    meta = {"seed": seed, "lambda": lam, "k": k, "default_rule": h0.name,
            "train_instances": len(train), "test_instances": len(test),
            "label_config": base.echo()}
    meta.update(metadata or {})
    return SweepResult(rows, meta)


def generalization_probe(
    model: SelectorModel,
    test: Sequence[Instance],
    lam: float = 1.0,
    seed: int = 0,
    threads: int = 1,
    metadata: dict | None = None,
) -> EvalReport:
    """Evaluate a model trained at one size on instances of another, unchanged."""
    before = model.fingerprint()
    methods = [("Regret-Gated", gated(model, lam))] + baseline_methods()
    report = evaluate(methods, test, seed, threads, metadata=metadata)
    after = model.fingerprint()
    if before != after:
        raise RuntimeError("model changed during the probe")
    report.metadata["model_fingerprint"] = after
    return report
