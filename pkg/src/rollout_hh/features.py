"""State features for (partial schedule, candidate rule) pairs.

A feature vector has 42 entries: 35 instance/state features followed by a
one-hot block over the 7 rule codes.  Time-like quantities are divided by
the instance lower bound so that they are scale free.

====  =====================================================================
idx   feature
====  =====================================================================
0     number of jobs
1     number of machines
2     jobs / machines
3-7   all-operation processing time: mean, std, min, max, coef. of variation
8-11  machine total load: mean/LB, std/LB, max/LB, max/mean
12    fraction of operations scheduled
13    fraction of total work scheduled
14    partial makespan / LB
15    remaining decisions / (J*M)
16    ready-set size / J
17-20 ready-op processing time mean, std, min, max (/ all-op mean)
21-24 per-job remaining work mean, std, min, max (/ LB)
25    total remaining work / LB
26    per-job remaining work coefficient of variation
27-29 per-job remaining op count mean, std, max (/ M)
30-32 machine ready time mean, std, max - min (/ LB)
33-34 job ready time over unfinished jobs mean, std (/ LB)
35-41 one-hot rule code
====  =====================================================================

Standard deviations are population deviations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import ContractError, Instance, ScheduleState, lower_bound
from .rules import NUM_RULES, Rule

NUM_STATE_FEATURES = 35
NUM_FEATURES = NUM_STATE_FEATURES + NUM_RULES
CONSTANT_STD = 1e-12

FEATURE_NAMES: tuple[str, ...] = (
    "num_jobs", "num_machines", "jobs_per_machine",
    "p_mean", "p_std", "p_min", "p_max", "p_cv",
    "load_mean", "load_std", "load_max", "load_imbalance",
    "frac_ops_done", "frac_work_done", "partial_makespan", "frac_decisions_left",
    "ready_frac", "ready_p_mean", "ready_p_std", "ready_p_min", "ready_p_max",
    "rem_work_mean", "rem_work_std", "rem_work_min", "rem_work_max", "rem_work_total", "rem_work_cv",
    "rem_ops_mean", "rem_ops_std", "rem_ops_max",
    "mready_mean", "mready_std", "mready_range",
    "jready_mean", "jready_std",
) + tuple(f"rule_{r.name}" for r in Rule)


@lru_cache(maxsize=4096)
def _static_block(instance: Instance) -> tuple[np.ndarray, float, float, float]:
    """Features 0-11 plus (LB, all-op mean, total work); these never change."""
    p = np.asarray(instance.proc_time, dtype=float)
    loads = np.asarray(instance.machine_loads(), dtype=float)
    lb = float(lower_bound(instance))
    J, M = instance.num_jobs, instance.num_machines
    p_mean = p.mean()
    block = np.array([
        J, M, J / M,
        p_mean, p.std(), p.min(), p.max(), p.std() / p_mean,
        loads.mean() / lb, loads.std() / lb, loads.max() / lb, loads.max() / loads.mean(),
    ])
    return block, lb, p_mean, float(p.sum())


def state_features(state: ScheduleState) -> np.ndarray:
    """The 35 state/instance features of a non-terminal state."""
    inst = state.instance
    if state.is_terminal:
        raise ContractError("features are defined only at decision points")
    static, lb, p_mean, total_work = _static_block(inst)
    J, M = inst.num_jobs, inst.num_machines
    next_op = np.asarray(state.next_op)
    unfinished = np.flatnonzero(next_op < M)

    rem_work = np.array([inst.suffix[j][k] for j, k in enumerate(state.next_op)], dtype=float)
    ready_p = np.array([inst.proc_time[j][state.next_op[j]] for j in unfinished], dtype=float) / p_mean
    rem_ops = (M - next_op) / M
    mready = np.asarray(state.machine_ready, dtype=float) / lb
    jready = np.asarray(state.job_ready, dtype=float)[unfinished] / lb

    rem_total = rem_work.sum()
    rem_mean = rem_work.mean()
    out = np.empty(NUM_STATE_FEATURES)
    out[:12] = static
    out[12] = state.decisions_made / (J * M)
    out[13] = (total_work - rem_total) / total_work
    out[14] = max(state.machine_ready) / lb
    out[15] = state.remaining_decisions / (J * M)
    out[16] = len(unfinished) / J
    out[17:21] = ready_p.mean(), ready_p.std(), ready_p.min(), ready_p.max()
    out[21:25] = rem_mean / lb, rem_work.std() / lb, rem_work.min() / lb, rem_work.max() / lb
    out[25] = rem_total / lb
    out[26] = rem_work.std() / rem_mean
    out[27:30] = rem_ops.mean(), rem_ops.std(), rem_ops.max()
    out[30:33] = mready.mean(), mready.std(), mready.max() - mready.min()
    out[33:35] = jready.mean(), jready.std()
    return out


def one_hot(rule: Rule | int) -> np.ndarray:
    v = np.zeros(NUM_RULES)
    v[int(rule)] = 1.0
    return v


def with_rule(state_vec: np.ndarray, rule: Rule | int) -> np.ndarray:
    return np.concatenate([state_vec, one_hot(rule)])


def extract_features(state: ScheduleState, rule: Rule | int) -> np.ndarray:
    return with_rule(state_features(state), rule)


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension z-scoring fitted on training vectors.

    Dimensions whose std is below ``epsilon`` are constant and map to 0.
    """

    mean: np.ndarray
    std: np.ndarray
    epsilon: float = CONSTANT_STD

    @property
    def constant(self) -> np.ndarray:
        return self.std < self.epsilon

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return normalize(self, v)

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.where(self.constant, self.mean, z * self.std + self.mean)


def fit_normalizer(samples: Sequence[np.ndarray] | np.ndarray, epsilon: float = CONSTANT_STD) -> Normalizer:
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError("fit_normalizer needs a non-empty 2-D sample matrix")
    if X.shape[0] < 2:
        raise ContractError("fit_normalizer needs at least two samples")
    return Normalizer(X.mean(axis=0), X.std(axis=0), epsilon)


def normalize(norm: Normalizer, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    const = norm.constant
    return np.where(const, 0.0, (v - norm.mean) / np.where(const, 1.0, norm.std))
