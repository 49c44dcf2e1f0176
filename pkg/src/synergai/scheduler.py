"""Online scheduling: event-driven state machine and the urgency-ordered policy.

All policies share one contract: `on_event` advances the clock, applies the
event (arrival / worker freed / periodic tick), then reorders and dispatches.
State mutates only inside `on_event`, so a run is a deterministic function of
its event sequence. The flagship policy orders the queue by slack (remaining
time minus best estimate), de-prioritizes jobs that can no longer meet their
deadline, and cascades each job across its acceptable workers, falling back
to the globally fastest worker for doomed jobs.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional, Union

from .cluster import Cluster, ConfigChoice
from .errors import ClockRegression
from .estimator import QueuedJob, WorkerEstimate, worker_estimates
from .profiles import ConfigurationDictionary
from .workload import JobSpec

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class ArrivalEvent:
    time_s: float
    job: JobSpec


@dataclass(frozen=True)
class CompletionEvent:
    time_s: float
    job_id: str
    worker_id: str


@dataclass(frozen=True)
class TickEvent:
    time_s: float


Event = Union[ArrivalEvent, CompletionEvent, TickEvent]


@dataclass(frozen=True)
class Assignment:
    """A (job, worker, config) binding committed at start_s."""

    job_id: str
    worker_id: str
    config: ConfigChoice
    start_s: float
    expected_finish_s: float

    def to_json(self) -> dict:
        return {
            "event_time": self.start_s,
            "job_id": self.job_id,
            "worker_id": self.worker_id,
            "config": self.config.to_json(),
            "expected_finish": self.expected_finish_s,
        }


@dataclass
class SchedulerState:
    """Queue contents plus worker occupancy at simulated time `now`.

    worker_busy_until maps worker_id to the expected free time of the running
    job, or None when idle. Actual freeing happens on CompletionEvent, so the
    one-job-per-worker invariant holds even when execution times drift from
    their estimates.
    """

    worker_busy_until: dict[str, Optional[float]]
    queue: list[QueuedJob] = field(default_factory=list)
    now: float = 0.0

    @classmethod
    def initial(cls, cluster: Cluster) -> "SchedulerState":
        return cls(worker_busy_until={wid: None for wid in cluster.worker_ids})

    def is_free(self, worker_id: str) -> bool:
        return self.worker_busy_until[worker_id] is None

    def free_workers(self) -> list[str]:
        return [w for w, busy in self.worker_busy_until.items() if busy is None]


class Policy:
    """Base class for every scheduling policy."""

    name = "abstract"

    def __init__(self, cluster: Cluster, dictionary: ConfigurationDictionary):
        self.cluster = cluster
        self.dictionary = dictionary

    def on_event(self, state: SchedulerState, event: Event) -> list[Assignment]:
        if event.time_s < state.now - _TIME_EPS:
            raise ClockRegression(
                f"event at t={event.time_s} precedes scheduler clock t={state.now}"
            )
        state.now = max(state.now, event.time_s)
        if isinstance(event, ArrivalEvent):
            queued = QueuedJob(job=event.job, arrival_time_s=event.time_s)
            state.queue.append(queued)
            self._after_arrival(state, queued)
        elif isinstance(event, CompletionEvent):
            state.worker_busy_until[event.worker_id] = None
            self._after_completion(state, event)
        return self.dispatch(state)

    # Hooks for policies that track rotation cursors, recency, commitments.
    def _after_arrival(self, state: SchedulerState, queued: QueuedJob) -> None:
        pass

    def _after_completion(self, state: SchedulerState, event: CompletionEvent) -> None:
        pass

    def _on_assign(self, state: SchedulerState, assignment: Assignment) -> None:
        pass

    def dispatch(self, state: SchedulerState) -> list[Assignment]:
        raise NotImplementedError

    def _start(
        self,
        state: SchedulerState,
        queued: QueuedJob,
        worker_id: str,
        config: ConfigChoice,
        t_estimated_s: float,
    ) -> Assignment:
        assignment = Assignment(
            job_id=queued.job_id,
            worker_id=worker_id,
            config=config,
            start_s=state.now,
            expected_finish_s=state.now + t_estimated_s,
        )
        state.worker_busy_until[worker_id] = assignment.expected_finish_s
        state.queue.remove(queued)
        self._on_assign(state, assignment)
        return assignment


class SynergaiScheduler(Policy):
    """Urgency-ordered scheduling with acceptable-worker cascading.

    Each event triggers a full queue re-evaluation: slack is recomputed from
    current waiting times, jobs sort most-urgent first, jobs whose deadline is
    already unreachable sink to the tail, and the dispatch scan walks each
    job's fastest-first candidate list looking for a free worker.
    """

    name = "synergai"

    def __init__(self, cluster: Cluster, dictionary: ConfigurationDictionary):
        super().__init__(cluster, dictionary)
        self._estimate_cache: dict[tuple[str, int], list[WorkerEstimate]] = {}

    def estimates_for(self, job: JobSpec) -> list[WorkerEstimate]:
        """All-worker estimates, fastest first, cached per (engine, q)."""
        key = (job.engine_id, job.q)
        cached = self._estimate_cache.get(key)
        if cached is None:
            cached = worker_estimates(job, self.cluster, self.dictionary)
            self._estimate_cache[key] = cached
        return cached

    def slack(self, queued: QueuedJob, now: float) -> float:
        ests = self.estimates_for(queued.job)
        return queued.job.t_qos_s - (now - queued.arrival_time_s) - ests[0].t_estimated_s

    def reorder_queue(self, state: SchedulerState) -> SchedulerState:
        """Sort by ascending slack; inevitable violations move to the tail.

        Idempotent at a fixed timestamp. Ties break by arrival time then
        job_id so replays are stable.
        """
        def key(queued: QueuedJob):
            s = self.slack(queued, state.now)
            # Negative slack means no worker can meet the deadline (the
            # acceptable set is empty); those jobs yield to salvageable ones.
            return (1 if s < 0 else 0, s, queued.arrival_time_s, queued.job_id)

        state.queue.sort(key=key)
        return state

    def dispatch(self, state: SchedulerState) -> list[Assignment]:
        self.reorder_queue(state)
        assignments: list[Assignment] = []
        for queued in list(state.queue):
            ests = self.estimates_for(queued.job)
            rem = queued.job.t_qos_s - (state.now - queued.arrival_time_s)
            # Estimates are sorted ascending, so the acceptable set is a prefix.
            cut = bisect_right([e.t_estimated_s for e in ests], rem)
            candidates = ests[:cut] if cut > 0 else ests
            for est in candidates:
                if state.is_free(est.worker_id):
                    assignments.append(
                        self._start(state, queued, est.worker_id, est.config, est.t_estimated_s)
                    )
                    break
        return assignments
