"""Job-shop instances, partial schedules and the serial schedule generator.

The generator is a greedy serial dispatcher: at every decision point the
ready set is the set of unfinished jobs, one job is chosen, and its next
operation starts at ``max(job_ready, machine_ready)``.  All times are
integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from ._rng import make_rng


class ContractError(ValueError):
    """Raised when an operation is called outside its precondition."""


@dataclass(frozen=True)
class Instance:
    """A JSSP instance: per-job machine routing and processing times.

    ``routing[j][k]`` is the machine of job ``j``'s ``k``-th operation and
    ``proc_time[j][k]`` its duration.
    """

    id: str
    num_jobs: int
    num_machines: int
    routing: tuple[tuple[int, ...], ...]
    proc_time: tuple[tuple[int, ...], ...]
    # suffix[j][k] = sum of proc_time[j][k:], so suffix[j][M] == 0
    suffix: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        routing = tuple(tuple(int(m) for m in row) for row in self.routing)
        proc = tuple(tuple(int(p) for p in row) for row in self.proc_time)
        object.__setattr__(self, "routing", routing)
        object.__setattr__(self, "proc_time", proc)
        J, M = self.num_jobs, self.num_machines
        if J < 1 or M < 1:
            raise ContractError("instance needs at least one job and one machine")
        if len(routing) != J or len(proc) != J:
            raise ContractError("routing/proc_time must have one row per job")
        for j in range(J):
            if sorted(routing[j]) != list(range(M)):
                raise ContractError(f"job {j} routing is not a permutation of 0..{M - 1}")
            if len(proc[j]) != M:
                raise ContractError(f"job {j} has {len(proc[j])} durations, expected {M}")
            if min(proc[j]) < 1:
                raise ContractError(f"job {j} has a processing time below 1")
        suffix = []
        for row in proc:
            acc = [0] * (M + 1)
            for k in range(M - 1, -1, -1):
                acc[k] = acc[k + 1] + row[k]
            suffix.append(tuple(acc))
        object.__setattr__(self, "suffix", tuple(suffix))

    @property
    def num_ops(self) -> int:
        return self.num_jobs * self.num_machines

    @property
    def total_work(self) -> int:
        return sum(s[0] for s in self.suffix)

    def machine_loads(self) -> list[int]:
        loads = [0] * self.num_machines
        for mrow, prow in zip(self.routing, self.proc_time):
            for m, p in zip(mrow, prow):
                loads[m] += p
        return loads

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "num_jobs": self.num_jobs,
            "num_machines": self.num_machines,
            "routing": [list(r) for r in self.routing],
            "proc_time": [list(r) for r in self.proc_time],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Instance:
        return cls(
            id=str(data["id"]),
            num_jobs=int(data["num_jobs"]),
            num_machines=int(data["num_machines"]),
            routing=data["routing"],
            proc_time=data["proc_time"],
        )


class LogEntry(NamedTuple):
    job: int
    op: int
    machine: int
    start: int
    end: int


class ScheduleState:
    """A partial schedule built by the serial dispatcher.

    Mutated in place by :meth:`dispatch`; use :meth:`copy` to branch.
    """

    __slots__ = (
        "instance", "next_op", "job_ready", "machine_ready",
        "dispatch_log", "decisions_made", "arrival_order",
    )

    def __init__(self, instance: Instance):
        self.instance = instance
        J, M = instance.num_jobs, instance.num_machines
        self.next_op = [0] * J
        self.job_ready = [0] * J
        self.machine_ready = [0] * M
        self.dispatch_log: list[LogEntry] = []
        self.decisions_made = 0
        self.arrival_order = [0] * J

    def copy(self) -> ScheduleState:
        new = ScheduleState.__new__(ScheduleState)
        new.instance = self.instance
        new.next_op = self.next_op[:]
        new.job_ready = self.job_ready[:]
        new.machine_ready = self.machine_ready[:]
        new.dispatch_log = self.dispatch_log[:]
        new.decisions_made = self.decisions_made
        new.arrival_order = self.arrival_order[:]
        return new

    @property
    def remaining_decisions(self) -> int:
        return self.instance.num_ops - self.decisions_made

    @property
    def is_terminal(self) -> bool:
        return self.decisions_made == self.instance.num_ops

    def ready_jobs(self) -> list[int]:
        M = self.instance.num_machines
        return [j for j, k in enumerate(self.next_op) if k < M]

    def makespan(self) -> int:
        return max(self.machine_ready) if self.dispatch_log else 0

    def dispatch(self, job: int) -> LogEntry:
        inst = self.instance
        k = self.next_op[job]
        if k >= inst.num_machines:
            raise ContractError(f"job {job} is already finished")
        m = inst.routing[job][k]
        jr = self.job_ready[job]
        mr = self.machine_ready[m]
        start = jr if jr > mr else mr
        end = start + inst.proc_time[job][k]
        entry = LogEntry(job, k, m, start, end)
        self.dispatch_log.append(entry)
        self.next_op[job] = k + 1
        self.job_ready[job] = end
        self.machine_ready[m] = end
        self.decisions_made += 1
        self.arrival_order[job] = self.decisions_made
        return entry

    def __repr__(self) -> str:
        return (f"ScheduleState({self.instance.id!r}, "
                f"{self.decisions_made}/{self.instance.num_ops} dispatched)")


def dispatch_step(state: ScheduleState, chosen_job: int) -> ScheduleState:
    """Schedule ``chosen_job``'s next operation; returns the (mutated) state."""
    if not 0 <= chosen_job < state.instance.num_jobs:
        raise ContractError(f"job index {chosen_job} out of range")
    state.dispatch(chosen_job)
    return state


def complete_with_rule(state: ScheduleState, rule, rng=None) -> tuple[int, int]:
    """Run ``rule`` until the schedule is complete.

    Mutates ``state``.  Returns ``(makespan, steps)`` where ``steps`` counts
    the dispatch decisions simulated here.
    """
    from .rules import select_job

    steps = 0
    while not state.is_terminal:
        state.dispatch(select_job(rule, state, rng))
        steps += 1
    return state.makespan(), steps


def lower_bound(instance: Instance) -> int:
    """max(longest job duration, heaviest machine load)."""
    job_bound = max(s[0] for s in instance.suffix)
    return max(job_bound, max(instance.machine_loads()))


class Feasibility(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_feasible(state: ScheduleState) -> Feasibility:
    """Re-check every schedule invariant from the dispatch log alone."""
    inst = state.instance
    J, M = inst.num_jobs, inst.num_machines
    job_pos = [0] * J
    job_end = [0] * J
    mach_end = [0] * M
    by_machine: dict[int, list[tuple[int, int]]] = {m: [] for m in range(M)}
    for i, e in enumerate(state.dispatch_log):
        if not 0 <= e.job < J:
            return Feasibility(False, f"entry {i}: job {e.job} out of range")
        if e.op != job_pos[e.job] or e.op >= M:
            return Feasibility(False, f"entry {i}: job {e.job} op {e.op} out of routing order "
                                      f"(expected op {job_pos[e.job]})")
        if e.machine != inst.routing[e.job][e.op]:
            return Feasibility(False, f"entry {i}: job {e.job} op {e.op} on wrong machine {e.machine}")
        if e.end - e.start != inst.proc_time[e.job][e.op]:
            return Feasibility(False, f"entry {i}: duration {e.end - e.start} != processing time")
        if e.start < job_end[e.job]:
            return Feasibility(False, f"entry {i}: job {e.job} op {e.op} starts before its predecessor ends")
        for s, t in by_machine[e.machine]:
            if e.start < t and s < e.end:
                return Feasibility(False, f"entry {i}: overlaps [{s}, {t}) on machine {e.machine}")
        if e.start != max(job_end[e.job], mach_end[e.machine]):
            return Feasibility(False, f"entry {i}: start {e.start} violates the start-time rule")
        by_machine[e.machine].append((e.start, e.end))
        job_pos[e.job] += 1
        job_end[e.job] = e.end
        mach_end[e.machine] = e.end
    if job_pos != list(state.next_op):
        return Feasibility(False, "next_op does not match the dispatch log")
    if state.decisions_made != len(state.dispatch_log):
        return Feasibility(False, "decisions_made does not match the dispatch log")
    if list(state.job_ready) != job_end or list(state.machine_ready) != mach_end:
        return Feasibility(False, "ready times do not match the dispatch log")
    return Feasibility(True)


def generate_instance(num_jobs: int, num_machines: int, seed: int, id: str | None = None) -> Instance:
    """Random instance: Fisher-Yates machine permutation per job, durations U{1..99}.

    Uses PCG64 seeded with ``seed``; for each job the permutation is drawn
    first (swaps from the last position down), then its M durations.
    """
    if num_jobs < 1 or num_machines < 1:
        raise ContractError("num_jobs and num_machines must be >= 1")
    rng = make_rng(seed)
    routing, proc = [], []
    for _ in range(num_jobs):
        perm = list(range(num_machines))
        for i in range(num_machines - 1, 0, -1):
            j = int(rng.integers(0, i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        routing.append(perm)
        proc.append([int(p) for p in rng.integers(1, 100, size=num_machines)])
    if id is None:
        id = f"{num_jobs}x{num_machines}-s{seed}"
    return Instance(id, num_jobs, num_machines, routing, proc)


def save_instance(instance: Instance, path: str | Path) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, json.dumps(instance.to_dict(), sort_keys=True) + "\n")


def load_instance(path: str | Path) -> Instance:
    """Read an instance from JSON or from the textual benchmark layout."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return Instance.from_dict(json.loads(text))
    return parse_benchmark(text, id=path.stem)


def parse_benchmark(text: str, id: str = "benchmark") -> Instance:
    """Parse the standard "J M" then machine/duration pairs text layout.

    Lines starting with ``#`` are ignored.
    """
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ContractError("empty benchmark text")
    J, M = int(rows[0][0]), int(rows[0][1])
    if len(rows) < J + 1:
        raise ContractError(f"expected {J} job lines, found {len(rows) - 1}")
    routing, proc = [], []
    for row in rows[1:J + 1]:
        vals = [int(v) for v in row]
        if len(vals) != 2 * M:
            raise ContractError(f"job line has {len(vals)} values, expected {2 * M}")
        routing.append(vals[0::2])
        proc.append(vals[1::2])
    return Instance(id, J, M, routing, proc)


def format_benchmark(instance: Instance) -> str:
    lines = [f"{instance.num_jobs} {instance.num_machines}"]
    for mrow, prow in zip(instance.routing, instance.proc_time):
        lines.append(" ".join(f"{m} {p}" for m, p in zip(mrow, prow)))
    return "\n".join(lines) + "\n"


def empty_state(instance: Instance) -> ScheduleState:
    return ScheduleState(instance)


def replay(instance: Instance, jobs: Sequence[int]) -> ScheduleState:
    """Build a state by dispatching ``jobs`` in order from empty."""
    state = ScheduleState(instance)
    for j in jobs:
        dispatch_step(state, j)
    return state
