"""Comparison policies: RR, SRR, LRU, MRU, BE, and SLO-MAEL.

All baselines keep FIFO queue order and run every job under the worker's
default configuration (max threads on x86, the habitual best mode on ARM),
so none of them benefits from per-engine tuning.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .cluster import Cluster, ConfigChoice, Worker, threads
from .errors import ValidationError
from .profiles import ConfigurationDictionary, ProfileSet, default_config
from .scheduler import (
    Assignment,
    CompletionEvent,
    Policy,
    QueuedJob,
    SchedulerState,
    SynergaiScheduler,
)
from .workload import JobSpec

POLICY_NAMES = ("synergai", "rr", "srr", "lru", "mru", "be", "slo-mael")
SIMPLE_BASELINES = ("rr", "srr", "lru", "mru", "be")


def baseline_default_config(worker: Worker, dictionary: ConfigurationDictionary) -> ConfigChoice:
    """The fixed per-worker config baselines deploy regardless of the job."""
    if worker.arch == "x86":
        assert hasattr(worker.tuning, "levels")
        return threads(worker.tuning.levels[-1])
    return default_config(worker, dictionary)


class BaselineScheduler(Policy):
    """FIFO dispatch; subclasses only choose the worker."""

    def __init__(self, cluster: Cluster, dictionary: ConfigurationDictionary, profiles: Optional[ProfileSet] = None):
        super().__init__(cluster, dictionary)
        self.profiles = profiles if profiles is not None else ProfileSet([])
        self._default_cfg = {
            w.worker_id: baseline_default_config(w, dictionary) for w in cluster.workers
        }
        self._est_cache: dict[tuple[str, str, int], float] = {}

    def default_estimate(self, job: JobSpec, worker_id: str) -> tuple[ConfigChoice, float]:
        """Execution estimate under the worker's default config."""
        cfg = self._default_cfg[worker_id]
        key = (job.engine_id, worker_id, job.q)
        t = self._est_cache.get(key)
        if t is None:
            rec = self.profiles.lookup(job.engine_id, worker_id, cfg)
            if rec is not None:
                t = rec.preproc_s + job.q / rec.qps
            else:
                entry = self.dictionary.resolve(job.engine_id, self.cluster.worker(worker_id))
                t = entry.preproc_s + job.q / entry.qps
            self._est_cache[key] = t
        return cfg, t

    def dispatch(self, state: SchedulerState) -> list[Assignment]:
        assignments: list[Assignment] = []
        for queued in list(state.queue):
            worker_id = self._pick(state, queued)
            if worker_id is None:
                continue
            cfg, t = self.default_estimate(queued.job, worker_id)
            assignments.append(self._start(state, queued, worker_id, cfg, t))
        return assignments

    def _pick(self, state: SchedulerState, queued: QueuedJob) -> Optional[str]:
        raise NotImplementedError


class RoundRobinScheduler(BaselineScheduler):
    """Rotate over workers; skip past busy ones within the same event."""

    name = "rr"

    def __init__(self, cluster, dictionary, profiles=None):
        super().__init__(cluster, dictionary, profiles)
        self._order = list(cluster.worker_ids)
        self._cursor = 0

    def _pick(self, state, queued):
        n = len(self._order)
        for k in range(n):
            idx = (self._cursor + k) % n
            wid = self._order[idx]
            if state.is_free(wid):
                self._cursor = (idx + 1) % n
                return wid
        return None


class StrictRoundRobinScheduler(BaselineScheduler):
    """Each job is bound to its rotation worker at arrival and waits for it."""

    name = "srr"

    def __init__(self, cluster, dictionary, profiles=None):
        super().__init__(cluster, dictionary, profiles)
        self._order = list(cluster.worker_ids)
        self._arrival_count = 0
        self._designated: dict[str, str] = {}

    def _after_arrival(self, state, queued):
        wid = self._order[self._arrival_count % len(self._order)]
        self._arrival_count += 1
        self._designated[queued.job_id] = wid

    def _pick(self, state, queued):
        wid = self._designated[queued.job_id]
        return wid if state.is_free(wid) else None

    def _on_assign(self, state, assignment):
        self._designated.pop(assignment.job_id, None)


class _RecencyScheduler(BaselineScheduler):
    """Shared bookkeeping for LRU/MRU: last activity per worker, 0 initially."""

    def __init__(self, cluster, dictionary, profiles=None):
        super().__init__(cluster, dictionary, profiles)
        self._last_active = {wid: 0.0 for wid in cluster.worker_ids}

    def _on_assign(self, state, assignment):
        self._last_active[assignment.worker_id] = assignment.start_s

    def _after_completion(self, state, event: CompletionEvent):
        self._last_active[event.worker_id] = event.time_s


class LeastRecentlyUsedScheduler(_RecencyScheduler):
    name = "lru"

    def _pick(self, state, queued):
        free = state.free_workers()
        if not free:
            return None
        return min(free, key=lambda w: (self._last_active[w], w))


class MostRecentlyUsedScheduler(_RecencyScheduler):
    name = "mru"

    def _pick(self, state, queued):
        free = state.free_workers()
        if not free:
            return None
        return min(free, key=lambda w: (-self._last_active[w], w))


class BestEffortScheduler(BaselineScheduler):
    """Greedy walk from strongest to weakest worker."""

    name = "be"

    def __init__(self, cluster, dictionary, profiles=None, strength_order: Optional[list[str]] = None):
        super().__init__(cluster, dictionary, profiles)
        self._order = list(strength_order) if strength_order else list(cluster.worker_ids)
        unknown = [w for w in self._order if not cluster.has_worker(w)]
        if unknown or len(set(self._order)) != len(cluster.workers):
            raise ValidationError(f"strength order must cover the cluster exactly, got {self._order}")

    def _pick(self, state, queued):
        for wid in self._order:
            if state.is_free(wid):
                return wid
        return None


class SloMaelScheduler(BaselineScheduler):
    """Score-all-mappings baseline: minimum average expected latency.

    On each arrival, every not-yet-placed queued job is bound to a worker by
    exhaustively scoring job-to-worker mappings (expected wait plus the
    default-config estimate, averaged over the mapped jobs) and committing
    the earliest job from the best mapping, repeating until all are placed.
    Waits are projected from worker availability at scoring time; mapping
    members serialize against each other but previously committed jobs are
    not re-modeled. Commitments are never revisited: a job waits for its
    worker even when another frees up first. Queues past the enumeration
    cap fall back to per-job greedy placement.
    """

    name = "slo-mael"
    ENUMERATION_CAP = 6

    def __init__(self, cluster, dictionary, profiles=None):
        super().__init__(cluster, dictionary, profiles)
        self._committed: dict[str, str] = {}
        self._worker_ids = sorted(cluster.worker_ids)

    def _after_arrival(self, state, queued):
        self._commit_pending(state)

    def _pick(self, state, queued):
        wid = self._committed.get(queued.job_id)
        if wid is None:
            return None
        return wid if state.is_free(wid) else None

    def _on_assign(self, state, assignment):
        self._committed.pop(assignment.job_id, None)

    def dispatch(self, state: SchedulerState) -> list[Assignment]:
        # Arrivals commit everything, but recover if a job slipped through.
        if any(qj.job_id not in self._committed for qj in state.queue):
            self._commit_pending(state)
        return super().dispatch(state)

    def _availability(self, state: SchedulerState) -> dict[str, float]:
        """Earliest start per worker as the scorer sees it: the running job
        only. Jobs already committed but still waiting are invisible here;
        the policy never re-models its own backlog (no rescheduling)."""
        return {
            wid: (state.now if busy is None else max(busy, state.now))
            for wid, busy in state.worker_busy_until.items()
        }

    def _commit_pending(self, state: SchedulerState) -> None:
        while True:
            pending = [qj for qj in state.queue if qj.job_id not in self._committed]
            if not pending:
                return
            vf = self._availability(state)
            if len(pending) > self.ENUMERATION_CAP:
                for qj in pending:
                    best_wid = None
                    best_score = None
                    for wid in self._worker_ids:
                        _, t = self.default_estimate(qj.job, wid)
                        score = (vf[wid] - state.now) + t
                        if best_score is None or score < best_score:
                            best_score, best_wid = score, wid
                    self._committed[qj.job_id] = best_wid
                    _, t = self.default_estimate(qj.job, best_wid)
                    vf[best_wid] += t
                return
            mapping = self.best_mapping(pending, vf, state.now)
            self._committed[pending[0].job_id] = mapping[0]

    def best_mapping(
        self, pending: list[QueuedJob], availability: dict[str, float], now: float
    ) -> tuple[str, ...]:
        """Exhaustive argmin over worker tuples of mean(wait + estimate).

        Jobs inside one mapping serialize on shared workers. Workers are
        tried in worker_id order and only strict improvements replace the
        incumbent, so ties resolve to the lowest worker ids.
        """
        best_mapping = None
        best_score = None
        for mapping in itertools.product(self._worker_ids, repeat=len(pending)):
            vf = dict(availability)
            total = 0.0
            for qj, wid in zip(pending, mapping):
                _, t = self.default_estimate(qj.job, wid)
                total += (vf[wid] - now) + t
                vf[wid] += t
            score = total / len(pending)
            if best_score is None or score < best_score:
                best_score, best_mapping = score, mapping
        return best_mapping


_POLICY_CLASSES = {
    "rr": RoundRobinScheduler,
    "srr": StrictRoundRobinScheduler,
    "lru": LeastRecentlyUsedScheduler,
    "mru": MostRecentlyUsedScheduler,
    "be": BestEffortScheduler,
    "slo-mael": SloMaelScheduler,
}


def make_policy(
    name: str,
    cluster: Cluster,
    dictionary: ConfigurationDictionary,
    profiles: Optional[ProfileSet] = None,
    strength_order: Optional[list[str]] = None,
) -> Policy:
    """Instantiate a policy by CLI name."""
    key = name.strip().lower()
    if key == "synergai":
        return SynergaiScheduler(cluster, dictionary)
    if key == "be":
        return BestEffortScheduler(cluster, dictionary, profiles, strength_order=strength_order)
    cls = _POLICY_CLASSES.get(key)
    if cls is None:
        raise ValidationError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
    return cls(cluster, dictionary, profiles)
