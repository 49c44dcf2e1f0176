"""Execution-time estimation and QoS arithmetic over the dictionary.

Everything here is a pure function of its inputs: remaining time before a
deadline, the per-worker execution estimate (preprocessing plus queries over
dictionary QPS), the set of workers able to finish in time, and slack.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cluster import Cluster, ConfigChoice, Worker
from .errors import ClockRegression
from .profiles import ConfigurationDictionary
from .workload import JobSpec


@dataclass(frozen=True)
class QueuedJob:
    """A job sitting in the queue since arrival_time_s."""

    job: JobSpec
    arrival_time_s: float

    @property
    def job_id(self) -> str:
        return self.job.job_id

    def waiting(self, now: float) -> float:
        if now < self.arrival_time_s:
            raise ClockRegression(
                f"{self.job_id}: now={now} precedes arrival={self.arrival_time_s}"
            )
        return now - self.arrival_time_s


@dataclass(frozen=True)
class WorkerEstimate:
    """Estimated execution time of a job on one worker under its best config."""

    worker_id: str
    config: ConfigChoice
    t_estimated_s: float


def remaining_time(job: QueuedJob, now: float) -> float:
    """Seconds left before the deadline; negative once a violation is locked in."""
    return job.job.t_qos_s - job.waiting(now)


def estimate(job: JobSpec, worker: Worker, dictionary: ConfigurationDictionary) -> WorkerEstimate:
    """Execution estimate on one worker: preprocessing + q / best-config QPS."""
    entry = dictionary.resolve(job.engine_id, worker)
    t = entry.preproc_s + job.q / entry.qps
    return WorkerEstimate(worker_id=worker.worker_id, config=entry.config, t_estimated_s=t)


def worker_estimates(job: JobSpec, cluster: Cluster, dictionary: ConfigurationDictionary) -> list[WorkerEstimate]:
    """Estimates on every worker, fastest first (worker_id breaks ties)."""
    ests = [estimate(job, w, dictionary) for w in cluster.workers]
    ests.sort(key=lambda e: (e.t_estimated_s, e.worker_id))
    return ests


def acceptable_workers(
    job: QueuedJob, cluster: Cluster, dictionary: ConfigurationDictionary, now: float
) -> list[WorkerEstimate]:
    """Workers whose estimate fits in the remaining time, fastest first.

    Empty means no worker can meet the deadline any more.
    """
    rem = remaining_time(job, now)
    return [e for e in worker_estimates(job.job, cluster, dictionary) if e.t_estimated_s <= rem]


def optimal_worker(
    job: QueuedJob, cluster: Cluster, dictionary: ConfigurationDictionary, now: float
) -> WorkerEstimate | None:
    """The fastest deadline-meeting worker, or None when none qualifies."""
    acceptable = acceptable_workers(job, cluster, dictionary, now)
    return acceptable[0] if acceptable else None


def urgency(job: QueuedJob, cluster: Cluster, dictionary: ConfigurationDictionary, now: float) -> float:
    """Slack: remaining time minus the best estimate over all workers.

    Sorting ascending by this value orders the queue most-urgent first;
    negative slack flags an inevitable violation. The minimum runs over all
    workers, not just acceptable ones, so doomed jobs still order sensibly.
    """
    best = worker_estimates(job.job, cluster, dictionary)[0]
    return remaining_time(job, now) - best.t_estimated_s
