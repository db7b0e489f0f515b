"""Rollout labels for (state, candidate rule) pairs.

States are sampled from exploration trajectories that pick a uniformly random
rule at every decision.  Each sampled state is labeled by rolling out a set of
candidate rules: the candidate is followed for ``depth`` decisions (or to the
end) and the default rule completes the schedule.  Targets are either the
per-state regret ``(m - m_best) / m_best`` or the makespan over the instance
lower bound.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._rng import child_rng
from .core import ContractError, Instance, ScheduleState, lower_bound
from .features import NUM_FEATURES, state_features, with_rule
from .io import FORMAT_VERSION, atomic_write_text
from .rules import ALL_RULES, NUM_RULES, Rule, parse_rule, select_job

FULL = None  # depth/breadth sentinel for "no limit"


class LabelKind(str, Enum):
    REGRET = "regret"
    NORMALIZED = "normalized"

    @classmethod
    def parse(cls, value: str | LabelKind) -> LabelKind:
        if isinstance(value, LabelKind):
            return value
        v = value.strip().lower()
        if v in ("norm", "normalised"):
            v = "normalized"
        return cls(v)


def parse_budget(value: str | int | None) -> int | None:
    """'full' / None -> FULL, otherwise a positive int."""
    if value is None:
        return FULL
    if isinstance(value, str):
        if value.strip().lower() in ("full", "inf", "infinity"):
            return FULL
        value = int(value)
    if value < 1:
        raise ContractError(f"budget must be >= 1 or 'full', got {value}")
    return int(value)


def budget_str(value: int | None) -> str:
    return "full" if value is None else str(value)


@dataclass(frozen=True)
class LabelConfig:
    states_per_instance: int = 25
    trajectories_per_instance: int = 3
    depth: int | None = FULL
    breadth: int | None = FULL
    label_kind: LabelKind = LabelKind.REGRET
    default_rule: Rule = Rule.FIFO
    seed: int = 0
    # breadth subsets always contain default_rule unless this is switched off
    include_default: bool = True

    def __post_init__(self):
        object.__setattr__(self, "label_kind", LabelKind.parse(self.label_kind))
        object.__setattr__(self, "default_rule", parse_rule(self.default_rule))
        object.__setattr__(self, "depth", parse_budget(self.depth))
        object.__setattr__(self, "breadth", parse_budget(self.breadth))
        if self.states_per_instance < 1:
            raise ContractError("states_per_instance must be >= 1")
        if self.trajectories_per_instance < 1:
            raise ContractError("trajectories_per_instance must be >= 1")
        if self.breadth is not None and self.breadth > NUM_RULES:
            raise ContractError(f"breadth {self.breadth} exceeds the {NUM_RULES} available rules")

    def echo(self) -> dict:
        d = asdict(self)
        d["depth"] = budget_str(self.depth)
        d["breadth"] = budget_str(self.breadth)
        d["label_kind"] = self.label_kind.value
        d["default_rule"] = self.default_rule.name
        return d


@dataclass
class LabeledSample:
    features: np.ndarray
    target: float
    instance_id: str
    decision: int
    rule: Rule
    makespan: int
    lower_bound: int
    num_ops: int


@dataclass
class CostLedger:
    """Labeling cost.

    ``steps`` counts every simulated dispatch decision (candidate and default
    continuation); ``guided_steps`` counts only the candidate-guided ones.
    """

    rollouts: int = 0
    steps: int = 0
    wall_seconds: float = 0.0
    guided_steps: int = 0

    def __add__(self, other: CostLedger) -> CostLedger:
        return CostLedger(self.rollouts + other.rollouts, self.steps + other.steps,
                          self.wall_seconds + other.wall_seconds,
                          self.guided_steps + other.guided_steps)

    def to_dict(self) -> dict:
        return {"rollouts": self.rollouts, "steps": self.steps, "guided_steps": self.guided_steps,
                "wall_seconds": self.wall_seconds}


def trajectory_loads(total: int, trajectories: int) -> list[int]:
    base, extra = divmod(total, trajectories)
    return [base + (1 if t < extra else 0) for t in range(trajectories)]


def sample_states(instance: Instance, cfg: LabelConfig, rng: np.random.Generator) -> list[ScheduleState]:
    """Partial schedules visited by random-rule trajectories.

    Trajectory ``t`` contributes ``loads[t]`` states at distinct decision
    indices drawn uniformly from ``0 .. J*M - 1``.  States are returned in
    trajectory order, then by decision index.
    """
    n_ops = instance.num_ops
    if cfg.states_per_instance > n_ops * cfg.trajectories_per_instance:
        raise ContractError(
            f"{cfg.states_per_instance} states requested but only "
            f"{n_ops}x{cfg.trajectories_per_instance} decision points exist")
    out = []
    for load in trajectory_loads(cfg.states_per_instance, cfg.trajectories_per_instance):
        if load == 0:
            continue
        wanted = set(int(d) for d in rng.choice(n_ops, size=load, replace=False))
        last = max(wanted)
        state = ScheduleState(instance)
        while True:
            if state.decisions_made in wanted:
                out.append(state.copy())
            if state.decisions_made >= last:
                break
            rule = ALL_RULES[int(rng.integers(NUM_RULES))]
            state.dispatch(select_job(rule, state, rng))
    return out


def rollout(
    state: ScheduleState,
    rule: Rule | int,
    depth: int | None,
    default_rule: Rule | int,
    rng: np.random.Generator | None = None,
) -> tuple[int, int]:
    """Follow ``rule`` for ``depth`` decisions, then ``default_rule`` to the end.

    ``state`` is not modified.  Returns ``(makespan, steps)``.
    """
    if state.is_terminal:
        raise ContractError("cannot roll out from a terminal state")
    sim = state.copy()
    remaining = sim.remaining_decisions
    guided = remaining if depth is None else min(depth, remaining)
    for _ in range(guided):
        sim.dispatch(select_job(rule, sim, rng))
    for _ in range(remaining - guided):
        sim.dispatch(select_job(default_rule, sim, rng))
    return sim.makespan(), remaining


def candidate_rules(cfg: LabelConfig, rng: np.random.Generator) -> list[Rule]:
    """The rules evaluated at one state, in code order."""
    if cfg.breadth is None or cfg.breadth == NUM_RULES:
        return list(ALL_RULES)
    if cfg.include_default:
        others = [r for r in ALL_RULES if r != cfg.default_rule]
        picked = rng.choice(len(others), size=cfg.breadth - 1, replace=False)
        chosen = [cfg.default_rule] + [others[int(i)] for i in picked]
    else:
        picked = rng.choice(NUM_RULES, size=cfg.breadth, replace=False)
        chosen = [ALL_RULES[int(i)] for i in picked]
    return sorted(chosen)


def regret_targets(makespans: Sequence[int]) -> list[float]:
    best = min(makespans)
    return [(m - best) / best for m in makespans]


def label_state(
    state: ScheduleState,
    cfg: LabelConfig,
    rng: np.random.Generator | None = None,
    state_index: int = 0,
) -> tuple[list[LabeledSample], CostLedger]:
    """Roll out the candidate set at ``state`` and emit one sample per rule.

    ``rng`` draws the breadth subset.  The rollout for rule ``h`` uses its own
    stream keyed by (seed, instance id, state index, h), so candidates share
    the state but not rollout randomness.
    """
    if state.is_terminal:
        raise ContractError("cannot label a terminal state")
    inst = state.instance
    if rng is None:
        rng = child_rng(cfg.seed, inst.id, "subset", state_index)
    rules = candidate_rules(cfg, rng)
    makespans, steps = [], 0
    for h in rules:
        m, s = rollout(state, h, cfg.depth, cfg.default_rule,
                       child_rng(cfg.seed, inst.id, state_index, int(h)))
        makespans.append(m)
        steps += s
    remaining = state.remaining_decisions
    guided = len(rules) * (remaining if cfg.depth is None else min(cfg.depth, remaining))
    lb = lower_bound(inst)
    if cfg.label_kind is LabelKind.REGRET:
        targets = regret_targets(makespans)
    else:
        targets = [m / lb for m in makespans]
    svec = state_features(state)
    samples = [
        LabeledSample(with_rule(svec, h), t, inst.id, state.decisions_made, h, m, lb, inst.num_ops)
        for h, m, t in zip(rules, makespans, targets)
    ]
    return samples, CostLedger(len(rules), steps, 0.0, guided)


def label_instance(instance: Instance, cfg: LabelConfig) -> tuple[list[LabeledSample], CostLedger]:
    states = sample_states(instance, cfg, child_rng(cfg.seed, instance.id, "states"))
    samples, ledger = [], CostLedger()
    for i, s in enumerate(states):
        smp, cost = label_state(s, cfg, state_index=i)
        samples.extend(smp)
        ledger = ledger + cost
    return samples, ledger


def _label_job(args):
    return label_instance(*args)


def build_dataset(
    instances: Sequence[Instance],
    cfg: LabelConfig,
    threads: int = 1,
) -> tuple[list[LabeledSample], CostLedger]:
    """Label every instance; output order is instance order for any ``threads``."""
    if not instances:
        raise ContractError("build_dataset needs at least one instance")
    t0 = time.perf_counter()
    jobs = [(inst, cfg) for inst in instances]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_label_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        results = [_label_job(j) for j in jobs]
    dataset, ledger = [], CostLedger()
    for samples, cost in results:
        dataset.extend(samples)
        ledger = ledger + cost
    ledger.wall_seconds = time.perf_counter() - t0
    return dataset, ledger


def _state_groups(samples: Sequence[LabeledSample]) -> list[list[LabeledSample]]:
    """Split a dataset into per-state groups.

    A state's samples are contiguous with strictly increasing rule codes, so a
    new group starts whenever the (instance, decision) key changes or the code
    stops increasing.  Two trajectories may share a decision index, which is
    why the key alone is not enough.
    """
    groups: list[list[LabeledSample]] = []
    for s in samples:
        prev = groups[-1][-1] if groups else None
        if (prev is None or (prev.instance_id, prev.decision) != (s.instance_id, s.decision)
                or int(s.rule) <= int(prev.rule)):
            groups.append([])
        groups[-1].append(s)
    return groups


def relabel(samples: Sequence[LabeledSample], kind: LabelKind | str) -> list[LabeledSample]:
    """Recompute targets of an existing dataset under another label kind."""
    kind = LabelKind.parse(kind)
    out = []
    for group in _state_groups(samples):
        best = min(g.makespan for g in group)
        for s in group:
            if kind is LabelKind.NORMALIZED:
                t = s.makespan / s.lower_bound
            else:
                t = (s.makespan - best) / best
            out.append(LabeledSample(s.features, t, s.instance_id, s.decision, s.rule,
                                     s.makespan, s.lower_bound, s.num_ops))
    return out


def dataset_arrays(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features for s in samples], dtype=float).reshape(len(samples), NUM_FEATURES)
    y = np.array([s.target for s in samples], dtype=float)
    return X, y


# -- dataset file -------------------------------------------------------------

DATASET_META = ("instance_id", "decision", "rule", "makespan", "lower_bound", "num_ops",
                "label_kind", "depth", "breadth")


def _fmt(x: float) -> str:
    return repr(float(x))


def save_dataset(path: str | Path, samples: Iterable[LabeledSample], cfg: LabelConfig,
                 echo: dict | None = None) -> None:
    """CSV with a ``#``-prefixed JSON header line carrying version and config.

    Floats are written with ``repr`` so they read back bit-exactly.
    """
    header = {"format": "rollout_hh.dataset", "version": FORMAT_VERSION,
              "label_config": cfg.echo(), "config": echo or {}}
    cols = [f"f{i}" for i in range(NUM_FEATURES)] + ["target"] + list(DATASET_META)
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    kind, depth, breadth = cfg.label_kind.value, budget_str(cfg.depth), budget_str(cfg.breadth)
    for s in samples:
        vals = [_fmt(v) for v in s.features] + [_fmt(s.target)]
        vals += [s.instance_id, str(s.decision), s.rule.name, str(s.makespan),
                 str(s.lower_bound), str(s.num_ops), kind, depth, breadth]
        writer.writerow(vals)
    atomic_write_text(path, buf.getvalue())


def load_dataset(path: str | Path) -> tuple[list[LabeledSample], dict]:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ContractError(f"{path}: missing dataset header")
        header = json.loads(first[2:])
        if header.get("format") != "rollout_hh.dataset":
            raise ContractError(f"{path}: not a dataset file")
        if header.get("version") != FORMAT_VERSION:
            raise ContractError(f"{path}: unsupported dataset version {header.get('version')}")
        reader = csv.reader(fh)
        next(reader, None)
        samples = []
        for parts in reader:
            if len(parts) < NUM_FEATURES + 1 + len(DATASET_META):
                raise ContractError(f"{path}: short row {reader.line_num}")
            feats = np.array([float(v) for v in parts[:NUM_FEATURES]])
            meta = parts[NUM_FEATURES + 1:]
            samples.append(LabeledSample(
                feats, float(parts[NUM_FEATURES]), meta[0], int(meta[1]), Rule[meta[2]],
                int(meta[3]), int(meta[4]), int(meta[5])))
    return samples, header


def save_ledger(path: str | Path, ledger: CostLedger, cfg: LabelConfig, echo: dict | None = None) -> None:
    doc = {"format": "rollout_hh.ledger", "version": FORMAT_VERSION, **ledger.to_dict(),
           "label_config": cfg.echo(), "config": echo or {}}
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
