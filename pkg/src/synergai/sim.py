"""Deterministic discrete-event simulator with energy and overhead accounting.

The event loop owns a virtual clock and a heap of arrival / completion / tick
events (ties break completion < arrival < tick, then job id). Policies make
all decisions through `on_event`; the simulator turns their assignments into
completion events, tracks per-worker busy intervals for energy, and samples
the wall-clock cost of every decision call. A brute-force oracle computes the
minimum achievable violation count on small instances.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .cluster import Cluster, ConfigChoice
from .errors import InvariantError, TooLarge, UnschedulableJob
from .profiles import ConfigurationDictionary, ProfileSet
from .scheduler import (
    ArrivalEvent,
    Assignment,
    CompletionEvent,
    Policy,
    SchedulerState,
    TickEvent,
)
from .baselines import make_policy
from .workload import ArrivalTrace, JobSpec

_REL_TOL = 1e-9
_RANK = {CompletionEvent: 0, ArrivalEvent: 1, TickEvent: 2}


@dataclass(frozen=True)
class JobRecord:
    """Everything observed about one executed job."""

    job_id: str
    engine_id: str
    arrival_s: float
    start_s: float
    finish_s: float
    worker_id: str
    config: ConfigChoice
    t_qos_s: float

    @property
    def wait_s(self) -> float:
        return self.start_s - self.arrival_s

    @property
    def e2e_s(self) -> float:
        return self.finish_s - self.arrival_s

    @property
    def excess_s(self) -> float:
        return self.e2e_s - self.t_qos_s if self.violated else 0.0

    @property
    def violated(self) -> bool:
        # Strictly later than the deadline, with 1e-9 relative headroom so a
        # job that finishes exactly on time never trips on float rounding.
        return self.e2e_s > self.t_qos_s + _REL_TOL * max(1.0, abs(self.t_qos_s))

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "engine_id": self.engine_id,
            "arrival_s": self.arrival_s,
            "start_s": self.start_s,
            "finish_s": self.finish_s,
            "worker_id": self.worker_id,
            "config": self.config.to_json(),
            "t_qos_s": self.t_qos_s,
            "wait_s": self.wait_s,
            "e2e_s": self.e2e_s,
            "excess_s": self.excess_s,
            "violated": self.violated,
        }


@dataclass
class EnergyLedger:
    """Per-worker busy seconds and joules (busy time x nominal power)."""

    busy_seconds: dict[str, float] = field(default_factory=dict)
    joules: dict[str, float] = field(default_factory=dict)

    @classmethod
    def for_cluster(cls, cluster: Cluster) -> "EnergyLedger":
        return cls(
            busy_seconds={wid: 0.0 for wid in cluster.worker_ids},
            joules={wid: 0.0 for wid in cluster.worker_ids},
        )

    def add(self, worker_id: str, seconds: float, watts: float) -> None:
        self.busy_seconds[worker_id] = self.busy_seconds.get(worker_id, 0.0) + seconds
        self.joules[worker_id] = self.joules.get(worker_id, 0.0) + seconds * watts


@dataclass
class SimResult:
    policy: str
    records: list[JobRecord]
    energy: EnergyLedger
    overheads_s: list[float]
    assignments: list[Assignment]

    def record_for(self, job_id: str) -> JobRecord:
        for r in self.records:
            if r.job_id == job_id:
                return r
        raise KeyError(job_id)


def _duration_parts(
    job: JobSpec,
    worker_id: str,
    config: ConfigChoice,
    cluster: Cluster,
    profiles: ProfileSet,
    dictionary: ConfigurationDictionary,
) -> tuple[float, float]:
    """(preprocessing seconds, query-processing seconds) for an assignment."""
    rec = profiles.lookup(job.engine_id, worker_id, config)
    if rec is not None:
        return rec.preproc_s, job.q / rec.qps
    entry = dictionary.resolve(job.engine_id, cluster.worker(worker_id))
    return entry.preproc_s, job.q / entry.qps


def run(
    trace: ArrivalTrace,
    cluster: Cluster,
    profiles: ProfileSet,
    dictionary: ConfigurationDictionary,
    policy: Union[Policy, str],
    tick_s: float = 5.0,
    exec_noise: float = 0.0,
    noise_seed: int = 0,
) -> SimResult:
    """Drain the trace under one policy and return per-job records.

    With exec_noise = 0 (the default) the actual query-processing time equals
    the profiled estimate; otherwise it is scaled by a per-job factor drawn
    uniformly from [1 - exec_noise, 1 + exec_noise], seeded by noise_seed.
    """
    if not 0.0 <= exec_noise <= 0.5:
        raise InvariantError("exec_noise must lie in [0, 0.5]")
    if isinstance(policy, str):
        policy = make_policy(policy, cluster, dictionary, profiles)

    rng = np.random.default_rng(noise_seed)
    noise = {
        job.job_id: (1.0 + rng.uniform(-exec_noise, exec_noise)) if exec_noise > 0 else 1.0
        for job in trace.jobs()
    }
    job_of = {job.job_id: job for job in trace.jobs()}
    arrival_of = {job.job_id: t for t, job in trace.arrivals}

    state = SchedulerState.initial(cluster)
    energy = EnergyLedger.for_cluster(cluster)
    seq = itertools.count()
    heap: list = []

    def push(event) -> None:
        tiebreak = getattr(event, "job_id", "") or getattr(getattr(event, "job", None), "job_id", "")
        heapq.heappush(heap, (event.time_s, _RANK[type(event)], tiebreak, next(seq), event))

    for t, job in trace.arrivals:
        push(ArrivalEvent(t, job))

    n_jobs = len(trace)
    pending_arrivals = n_jobs
    running: dict[str, Assignment] = {}
    records: list[JobRecord] = []
    all_assignments: list[Assignment] = []
    overheads: list[float] = []
    sim_busy: dict[str, Optional[str]] = {wid: None for wid in cluster.worker_ids}

    if tick_s > 0 and n_jobs > 0:
        push(TickEvent(tick_s))

    while heap:
        _, _, _, _, event = heapq.heappop(heap)
        if isinstance(event, TickEvent) and len(records) == n_jobs:
            continue
        if isinstance(event, ArrivalEvent):
            pending_arrivals -= 1
        elif isinstance(event, CompletionEvent):
            assignment = running.pop(event.job_id)
            if sim_busy[event.worker_id] != event.job_id:
                raise InvariantError(
                    f"completion for {event.job_id} on worker {event.worker_id} it never held"
                )
            sim_busy[event.worker_id] = None
            job = job_of[event.job_id]
            records.append(
                JobRecord(
                    job_id=event.job_id,
                    engine_id=job.engine_id,
                    arrival_s=arrival_of[event.job_id],
                    start_s=assignment.start_s,
                    finish_s=event.time_s,
                    worker_id=event.worker_id,
                    config=assignment.config,
                    t_qos_s=job.t_qos_s,
                )
            )

        t0 = time.perf_counter()
        assignments = policy.on_event(state, event)
        overheads.append(time.perf_counter() - t0)

        for a in assignments:
            if sim_busy[a.worker_id] is not None:
                raise InvariantError(f"policy put {a.job_id} on busy worker {a.worker_id}")
            sim_busy[a.worker_id] = a.job_id
            job = job_of[a.job_id]
            preproc, query_t = _duration_parts(
                job, a.worker_id, a.config, cluster, profiles, dictionary
            )
            expected = preproc + query_t
            if abs(expected - (a.expected_finish_s - a.start_s)) > _REL_TOL * max(1.0, expected):
                raise InvariantError(
                    f"policy estimate for {a.job_id} disagrees with the execution model"
                )
            actual = preproc + query_t * noise[a.job_id]
            energy.add(a.worker_id, actual, cluster.nominal_power(a.worker_id, a.config))
            running[a.job_id] = a
            all_assignments.append(a)
            push(CompletionEvent(a.start_s + actual, a.job_id, a.worker_id))

        if isinstance(event, TickEvent) and len(records) < n_jobs:
            if not assignments and not running and pending_arrivals == 0 and state.queue:
                raise UnschedulableJob(
                    f"policy {policy.name} stalled with {len(state.queue)} queued jobs"
                )
            push(TickEvent(event.time_s + tick_s))

    if len(records) != n_jobs:
        raise UnschedulableJob(f"policy {policy.name} finished {len(records)} of {n_jobs} jobs")
    return SimResult(
        policy=policy.name,
        records=records,
        energy=energy,
        overheads_s=overheads,
        assignments=all_assignments,
    )


def brute_force_min_violations(
    trace: ArrivalTrace, cluster: Cluster, dictionary: ConfigurationDictionary, max_jobs: int = 6
) -> int:
    """Minimum violation count over all orderings and worker choices.

    Exhausts every job-to-worker mapping; per worker, every service order of
    its assigned jobs is tried (jobs start as early as possible, which is
    never worse in this model). Same execution model as the zero-noise
    simulator: durations come from the dictionary's best-config entries.
    """
    n = len(trace)
    if n > max_jobs:
        raise TooLarge(f"brute force capped at {max_jobs} jobs, got {n}")
    if n == 0:
        return 0
    jobs = list(trace.arrivals)
    workers = list(cluster.workers)

    def duration(job: JobSpec, w) -> float:
        entry = dictionary.resolve(job.engine_id, w)
        return entry.preproc_s + job.q / entry.qps

    dur = [[duration(job, w) for w in workers] for _, job in jobs]
    memo: dict[tuple[int, tuple[int, ...]], int] = {}

    def subset_min(w_idx: int, idx: tuple[int, ...]) -> int:
        if not idx:
            return 0
        key = (w_idx, idx)
        if key not in memo:
            best = len(idx)
            for perm in itertools.permutations(idx):
                t = 0.0
                viols = 0
                for i in perm:
                    arrival, job = jobs[i]
                    start = max(arrival, t)
                    t = start + dur[i][w_idx]
                    if t - arrival > job.t_qos_s:
                        viols += 1
                        if viols >= best:
                            break
                best = min(best, viols)
                if best == 0:
                    break
            memo[key] = best
        return memo[key]

    best_total = n + 1
    for mapping in itertools.product(range(len(workers)), repeat=n):
        per_worker: dict[int, list[int]] = {}
        for i, w_idx in enumerate(mapping):
            per_worker.setdefault(w_idx, []).append(i)
        total = sum(subset_min(w_idx, tuple(ids)) for w_idx, ids in per_worker.items())
        best_total = min(best_total, total)
        if best_total == 0:
            break
    return best_total
