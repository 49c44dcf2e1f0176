"""Workload construction: QoS deadlines, Poisson arrival rates, and traces.

Deadlines come from the per-engine distribution of profiled execution times
(median for the low-demand set, lower quartile for the high-demand set); the
arrival rate comes from the same statistics pooled over every engine, config,
and worker. Traces are pure functions of their regime and seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster import EngineSpec
from .errors import EmptyProfileSet, ValidationError
from .profiles import DEFAULT_REFERENCE_QUERIES, ProfileRecord, ProfileSet

# Demand / frequency intensities map onto percentiles of the profiled
# execution-time distribution (linear rank interpolation throughout).
DEMAND_PERCENTILE = {"DL": 50.0, "DH": 25.0}
FREQUENCY_PERCENTILE = {"FL": 50.0, "FH": 25.0}

REGIME_NAMES = ("DL-FL", "DL-FH", "DH-FH", "DH-FL")


@dataclass(frozen=True)
class JobSpec:
    """An inference job: run q queries of an engine within t_qos_s of arrival."""

    job_id: str
    engine_id: str
    q: int
    t_qos_s: float

    def validate(self) -> None:
        if self.q < 1:
            raise ValidationError(f"{self.job_id}: q must be >= 1")
        if self.t_qos_s <= 0:
            raise ValidationError(f"{self.job_id}: t_qos_s must be > 0")

    def to_json(self) -> dict:
        return {"job_id": self.job_id, "engine_id": self.engine_id, "q": self.q, "t_qos_s": self.t_qos_s}


@dataclass(frozen=True)
class ArrivalTrace:
    """Time-ordered (arrival_time_s, job) sequence with unique job ids."""

    arrivals: tuple[tuple[float, JobSpec], ...]

    def __post_init__(self):
        times = [t for t, _ in self.arrivals]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("arrival times must be non-decreasing")
        ids = [j.job_id for _, j in self.arrivals]
        if len(set(ids)) != len(ids):
            raise ValidationError("job ids must be unique within a trace")
        for t, job in self.arrivals:
            if t < 0:
                raise ValidationError(f"{job.job_id}: arrival time must be >= 0")
            job.validate()

    def __len__(self) -> int:
        return len(self.arrivals)

    def jobs(self) -> list[JobSpec]:
        return [j for _, j in self.arrivals]

    def save(self, path) -> None:
        lines = [
            json.dumps({"arrival_time_s": t, **job.to_json()}, sort_keys=True)
            for t, job in self.arrivals
        ]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path) -> "ArrivalTrace":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read trace from {path}: {exc}") from exc
        arrivals = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                job = JobSpec(
                    job_id=str(obj["job_id"]),
                    engine_id=str(obj["engine_id"]),
                    q=int(obj["q"]),
                    t_qos_s=float(obj["t_qos_s"]),
                )
                arrivals.append((float(obj["arrival_time_s"]), job))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad trace row ({exc})") from exc
        return cls(tuple(arrivals))


@dataclass(frozen=True)
class ExperimentRegime:
    """One experiment setting: demand intensity x arrival frequency."""

    demand: str  # "DL" | "DH"
    frequency: str  # "FL" | "FH"
    n_jobs: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.demand not in DEMAND_PERCENTILE:
            raise ValidationError(f"unknown demand intensity {self.demand!r}")
        if self.frequency not in FREQUENCY_PERCENTILE:
            raise ValidationError(f"unknown frequency {self.frequency!r}")
        if self.n_jobs < 1:
            raise ValidationError("n_jobs must be >= 1")

    @property
    def name(self) -> str:
        return f"{self.demand}-{self.frequency}"


def parse_regime(name: str, n_jobs: int = 24, seed: int = 0) -> ExperimentRegime:
    """Build a regime from its "DL-FL"-style name."""
    try:
        demand, frequency = name.strip().upper().split("-")
    except ValueError:
        raise ValidationError(f"regime name must look like 'DL-FL', got {name!r}") from None
    return ExperimentRegime(demand=demand, frequency=frequency, n_jobs=n_jobs, seed=seed)


def derive_demand(records: Sequence[ProfileRecord], intensity: str) -> float:
    """QoS deadline for one engine from its profiled execution times."""
    if intensity not in DEMAND_PERCENTILE:
        raise ValidationError(f"unknown demand intensity {intensity!r}")
    totals = [r.total_s for r in records]
    if not totals:
        raise EmptyProfileSet("derive_demand needs at least one profile record")
    return float(np.percentile(totals, DEMAND_PERCENTILE[intensity]))


def derive_lambda(records: Sequence[ProfileRecord], frequency: str) -> float:
    """Poisson arrival rate (1/s) from the pooled execution-time distribution."""
    if frequency not in FREQUENCY_PERCENTILE:
        raise ValidationError(f"unknown frequency {frequency!r}")
    totals = [r.total_s for r in records]
    if not totals:
        raise EmptyProfileSet("derive_lambda needs at least one profile record")
    return float(1.0 / np.percentile(totals, FREQUENCY_PERCENTILE[frequency]))


def gen_trace(
    regime: ExperimentRegime,
    engines: Sequence[EngineSpec],
    profiles: ProfileSet,
    lam: float | None = None,
    q: int = DEFAULT_REFERENCE_QUERIES,
) -> ArrivalTrace:
    """Generate the regime's arrival trace.

    Inter-arrival gaps are i.i.d. exponential draws from the regime seed;
    engines rotate round-robin over the engine list; each job's deadline is
    the engine's derived demand and its query count is the reference q.
    """
    if not engines:
        raise ValidationError("gen_trace needs at least one engine")
    if lam is None:
        lam = derive_lambda(profiles.records, regime.frequency)
    if lam <= 0:
        raise ValidationError("arrival rate must be > 0")
    deadlines = {
        e.engine_id: derive_demand(profiles.for_engine(e.engine_id), regime.demand)
        for e in engines
    }
    rng = np.random.default_rng(regime.seed)
    gaps = rng.exponential(1.0 / lam, size=regime.n_jobs)
    times = np.cumsum(gaps)
    width = max(3, len(str(regime.n_jobs)))
    arrivals = []
    for i in range(regime.n_jobs):
        engine = engines[i % len(engines)]
        job = JobSpec(
            job_id=f"j{i:0{width}d}",
            engine_id=engine.engine_id,
            q=q,
            t_qos_s=deadlines[engine.engine_id],
        )
        arrivals.append((float(times[i]), job))
    return ArrivalTrace(tuple(arrivals))
