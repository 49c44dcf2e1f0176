"""Cluster model: workers, tuning axes, operating modes, and power accounting.

A cluster mixes x86 workers, tuned by thread count, with ARM boards, tuned
by discrete operating modes (frequency / online CPUs / power budget).
Clusters are immutable after validation and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from .errors import (
    DuplicateWorkerId,
    EmptyCluster,
    InvalidTuning,
    UnknownConfig,
    UnknownWorker,
    ValidationError,
)

# Sentinel used in cluster files for modes with no fixed power ceiling (MAXN).
UNBOUNDED = "unbounded"

# Energy accounting needs a finite wattage for unbounded modes; 30 W is the
# highest bounded budget on the default boards and can be overridden per
# cluster file or CLI flag.
DEFAULT_MAXN_SUBSTITUTE_W = 30.0

ARCH_X86 = "x86"
ARCH_ARM = "arm"


@dataclass(frozen=True)
class ConfigChoice:
    """One point on a worker's tuning axis: a thread count or a mode id."""

    variant: str  # "threads" | "mode"
    value: int

    def __post_init__(self):
        if self.variant not in ("threads", "mode"):
            raise UnknownConfig(f"unknown config variant {self.variant!r}")
        if self.value < 1:
            raise UnknownConfig(f"config value must be >= 1, got {self.value}")

    def __str__(self) -> str:
        return f"{self.variant}:{self.value}"

    def to_json(self) -> dict:
        if self.variant == "threads":
            return {"variant": "threads", "n": self.value}
        return {"variant": "mode", "mode_id": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> "ConfigChoice":
        if obj.get("variant") == "threads":
            return threads(int(obj["n"]))
        if obj.get("variant") == "mode":
            return mode(int(obj["mode_id"]))
        raise UnknownConfig(f"unparseable config {obj!r}")


def threads(n: int) -> ConfigChoice:
    """Thread-count config for an x86 worker."""
    return ConfigChoice("threads", n)


def mode(mode_id: int) -> ConfigChoice:
    """Operating-mode config for an ARM worker."""
    return ConfigChoice("mode", mode_id)


@dataclass(frozen=True)
class OperatingMode:
    mode_id: int
    max_cpu_freq_mhz: int
    online_cpus: int
    power_budget_w: Union[float, str]  # Watts, or UNBOUNDED

    @property
    def bounded(self) -> bool:
        return self.power_budget_w != UNBOUNDED

    def validate(self) -> None:
        if self.max_cpu_freq_mhz <= 0:
            raise InvalidTuning(f"mode {self.mode_id}: max_cpu_freq_mhz must be > 0")
        if self.online_cpus < 1:
            raise InvalidTuning(f"mode {self.mode_id}: online_cpus must be >= 1")
        if self.bounded and float(self.power_budget_w) <= 0:
            raise InvalidTuning(f"mode {self.mode_id}: bounded power budget must be > 0")

    def to_json(self) -> dict:
        return {
            "mode_id": self.mode_id,
            "max_cpu_freq_mhz": self.max_cpu_freq_mhz,
            "online_cpus": self.online_cpus,
            "power_budget_w": self.power_budget_w,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OperatingMode":
        budget = obj["power_budget_w"]
        if budget != UNBOUNDED:
            budget = float(budget)
        return cls(
            mode_id=int(obj["mode_id"]),
            max_cpu_freq_mhz=int(obj["max_cpu_freq_mhz"]),
            online_cpus=int(obj["online_cpus"]),
            power_budget_w=budget,
        )


@dataclass(frozen=True)
class ThreadScaling:
    """Vertical-scaling axis: the thread counts a worker may be pinned to."""

    levels: tuple[int, ...]

    def validate(self) -> None:
        if not self.levels:
            raise InvalidTuning("thread scaling axis has no levels")
        if self.levels[0] < 1:
            raise InvalidTuning("thread levels must start at >= 1")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise InvalidTuning(f"thread levels must be strictly increasing: {self.levels}")

    def configs(self) -> list[ConfigChoice]:
        return [threads(n) for n in self.levels]

    def has(self, config: ConfigChoice) -> bool:
        return config.variant == "threads" and config.value in self.levels


@dataclass(frozen=True)
class ModeSelection:
    """Operating-mode axis of an ARM board (runtime-switchable modes only)."""

    modes: tuple[OperatingMode, ...]

    def validate(self) -> None:
        if not self.modes:
            raise InvalidTuning("mode selection axis has no modes")
        ids = [m.mode_id for m in self.modes]
        if len(set(ids)) != len(ids):
            raise InvalidTuning(f"duplicate mode ids: {ids}")
        for m in self.modes:
            m.validate()

    def configs(self) -> list[ConfigChoice]:
        return [mode(m.mode_id) for m in self.modes]

    def has(self, config: ConfigChoice) -> bool:
        return config.variant == "mode" and any(m.mode_id == config.value for m in self.modes)

    def mode_by_id(self, mode_id: int) -> OperatingMode:
        for m in self.modes:
            if m.mode_id == mode_id:
                return m
        raise UnknownConfig(f"no mode {mode_id} on this axis")


TuningAxis = Union[ThreadScaling, ModeSelection]


@dataclass(frozen=True)
class Worker:
    worker_id: str
    arch: str  # ARCH_X86 | ARCH_ARM
    tuning: TuningAxis
    nominal_power_w: float
    vcpus: int
    ram_gb: int

    def validate(self) -> None:
        if not self.worker_id:
            raise ValidationError("worker_id must be non-empty")
        if self.arch not in (ARCH_X86, ARCH_ARM):
            raise ValidationError(f"{self.worker_id}: unknown arch {self.arch!r}")
        self.tuning.validate()
        # The tuning axis reflects how each architecture is actually tuned:
        # thread pinning on x86, operating modes on the ARM boards.
        if self.arch == ARCH_X86 and not isinstance(self.tuning, ThreadScaling):
            raise InvalidTuning(f"{self.worker_id}: x86 workers take a ThreadScaling axis")
        if self.arch == ARCH_ARM and not isinstance(self.tuning, ModeSelection):
            raise InvalidTuning(f"{self.worker_id}: arm workers take a ModeSelection axis")
        if self.nominal_power_w <= 0:
            raise ValidationError(f"{self.worker_id}: nominal_power_w must be > 0")
        if self.vcpus < 1 or self.ram_gb < 1:
            raise ValidationError(f"{self.worker_id}: vcpus and ram_gb must be >= 1")

    def configs(self) -> list[ConfigChoice]:
        return self.tuning.configs()

    def has_config(self, config: ConfigChoice) -> bool:
        return self.tuning.has(config)

    def to_json(self) -> dict:
        if isinstance(self.tuning, ThreadScaling):
            tuning = {"variant": "thread_scaling", "levels": list(self.tuning.levels)}
        else:
            tuning = {"variant": "mode_selection", "modes": [m.to_json() for m in self.tuning.modes]}
        return {
            "worker_id": self.worker_id,
            "arch": self.arch,
            "tuning": tuning,
            "nominal_power_w": self.nominal_power_w,
            "vcpus": self.vcpus,
            "ram_gb": self.ram_gb,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Worker":
        t = obj["tuning"]
        if t.get("variant") == "thread_scaling":
            tuning: TuningAxis = ThreadScaling(tuple(int(x) for x in t["levels"]))
        elif t.get("variant") == "mode_selection":
            tuning = ModeSelection(tuple(OperatingMode.from_json(m) for m in t["modes"]))
        else:
            raise ValidationError(f"unparseable tuning axis {t!r}")
        return cls(
            worker_id=str(obj["worker_id"]),
            arch=str(obj["arch"]),
            tuning=tuning,
            nominal_power_w=float(obj["nominal_power_w"]),
            vcpus=int(obj["vcpus"]),
            ram_gb=int(obj["ram_gb"]),
        )


@dataclass(frozen=True)
class EngineSpec:
    """An inference engine: task + backend + model variant. Accuracy is metadata."""

    engine_id: str
    task: str
    backend: str
    model_variant: str
    dataset: str
    accuracy: float

    def to_json(self) -> dict:
        return {
            "engine_id": self.engine_id,
            "task": self.task,
            "backend": self.backend,
            "model_variant": self.model_variant,
            "dataset": self.dataset,
            "accuracy": self.accuracy,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EngineSpec":
        return cls(
            engine_id=str(obj["engine_id"]),
            task=str(obj["task"]),
            backend=str(obj["backend"]),
            model_variant=str(obj["model_variant"]),
            dataset=str(obj["dataset"]),
            accuracy=float(obj["accuracy"]),
        )


class Cluster:
    """Validated, immutable set of workers plus energy-accounting settings."""

    def __init__(self, workers: Iterable[Worker], maxn_substitute_w: float = DEFAULT_MAXN_SUBSTITUTE_W):
        self.workers: tuple[Worker, ...] = tuple(workers)
        self.maxn_substitute_w = float(maxn_substitute_w)
        self._by_id = {w.worker_id: w for w in self.workers}

    @property
    def worker_ids(self) -> list[str]:
        return [w.worker_id for w in self.workers]

    def worker(self, worker_id: str) -> Worker:
        try:
            return self._by_id[worker_id]
        except KeyError:
            raise UnknownWorker(f"no worker {worker_id!r} in cluster") from None

    def has_worker(self, worker_id: str) -> bool:
        return worker_id in self._by_id

    def nominal_power(self, worker_id: str, config: ConfigChoice) -> float:
        return nominal_power(self.worker(worker_id), config, self.maxn_substitute_w)

    def to_json(self) -> dict:
        return {
            "maxn_substitute_w": self.maxn_substitute_w,
            "workers": [w.to_json() for w in self.workers],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Cluster":
        workers = [Worker.from_json(w) for w in obj["workers"]]
        sub = float(obj.get("maxn_substitute_w", DEFAULT_MAXN_SUBSTITUTE_W))
        return validate_cluster(workers, maxn_substitute_w=sub)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Cluster":
        try:
            return cls.from_json(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"cannot load cluster from {path}: {exc!r}") from exc


def validate_cluster(workers: list[Worker], maxn_substitute_w: float = DEFAULT_MAXN_SUBSTITUTE_W) -> Cluster:
    """Check every worker invariant and id uniqueness; return the cluster handle."""
    if not workers:
        raise EmptyCluster("a cluster needs at least one worker")
    seen = set()
    for w in workers:
        if w.worker_id in seen:
            raise DuplicateWorkerId(f"worker_id {w.worker_id!r} appears more than once")
        seen.add(w.worker_id)
        w.validate()
    if maxn_substitute_w <= 0:
        raise ValidationError("maxn_substitute_w must be > 0")
    return Cluster(workers, maxn_substitute_w=maxn_substitute_w)


def nominal_power(worker: Worker, config: ConfigChoice, maxn_substitute_w: float = DEFAULT_MAXN_SUBSTITUTE_W) -> float:
    """Wattage attributed to a worker while busy under the given config.

    ARM boards draw their mode's power budget (or the MAXN substitute when
    unbounded); x86 workers draw their full nominal power at any thread count.
    """
    if not worker.has_config(config):
        raise UnknownConfig(f"config {config} is not valid on worker {worker.worker_id!r}")
    if isinstance(worker.tuning, ModeSelection):
        m = worker.tuning.mode_by_id(config.value)
        return float(m.power_budget_w) if m.bounded else float(maxn_substitute_w)
    return float(worker.nominal_power_w)


def _data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def default_cluster() -> Cluster:
    """The packaged 3-worker reference cluster (one x86 VM, two ARM boards)."""
    return Cluster.load(_data_path("cluster_default.json"))


def default_engines() -> list[EngineSpec]:
    """The packaged 12-engine suite (image classification + object detection)."""
    payload = json.loads(_data_path("engines_default.json").read_text())
    return [EngineSpec.from_json(e) for e in payload["engines"]]


def load_engines(path) -> list[EngineSpec]:
    try:
        payload = json.loads(Path(path).read_text())
        return [EngineSpec.from_json(e) for e in payload["engines"]]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"cannot load engines from {path}: {exc!r}") from exc


def save_engines(engines: list[EngineSpec], path) -> None:
    payload = {"engines": [e.to_json() for e in engines]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
