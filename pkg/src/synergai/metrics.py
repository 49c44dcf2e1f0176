"""Aggregate job records into run reports and cross-policy comparisons.

Percentiles use linear rank interpolation everywhere. Mean excess time is
taken over all jobs, with non-violators contributing zero. Ratio summaries
divide each baseline's metric by the reference policy's; a zero reference
with a nonzero baseline yields an infinity sentinel that is excluded from
macro-averages and flagged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyRun, ValidationError
from .sim import EnergyLedger, JobRecord

COMPARE_METRICS = ("violations", "wait_mean_s", "e2e_mean_s", "e2e_p99_s", "excess_mean_s")


@dataclass(frozen=True)
class Stats:
    """min / max / mean / p99 of a sample, p99 by rank interpolation."""

    min: float
    max: float
    mean: float
    p99: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Stats":
        arr = np.asarray(list(values), dtype=float)
        if arr.size == 0:
            raise EmptyRun("cannot compute stats over an empty sample")
        return cls(
            min=float(arr.min()),
            max=float(arr.max()),
            mean=float(arr.mean()),
            p99=float(np.percentile(arr, 99)),
        )

    def to_json(self) -> dict:
        return {"min": self.min, "max": self.max, "mean": self.mean, "p99": self.p99}

    @classmethod
    def from_json(cls, obj: dict) -> "Stats":
        return cls(min=obj["min"], max=obj["max"], mean=obj["mean"], p99=obj["p99"])


@dataclass
class RunReport:
    """Per-run aggregates: violations, latency stats, energy, assignments."""

    policy: str
    regime: str
    seed: int
    n_jobs: int
    violations: int
    wait_stats: Stats
    e2e_stats: Stats
    excess_stats: Stats
    energy_per_worker_j: dict[str, float]
    busy_seconds_per_worker: dict[str, float]
    assignment_fraction_per_worker: dict[str, float]
    overhead_stats: Optional[Stats] = None

    def to_json(self, include_overhead: bool = True) -> dict:
        return {
            "policy": self.policy,
            "regime": self.regime,
            "seed": self.seed,
            "n_jobs": self.n_jobs,
            "violations": self.violations,
            "wait_stats": self.wait_stats.to_json(),
            "e2e_stats": self.e2e_stats.to_json(),
            "excess_stats": self.excess_stats.to_json(),
            "energy_per_worker_j": self.energy_per_worker_j,
            "busy_seconds_per_worker": self.busy_seconds_per_worker,
            "assignment_fraction_per_worker": self.assignment_fraction_per_worker,
            "overhead_stats": self.overhead_stats.to_json()
            if (include_overhead and self.overhead_stats is not None)
            else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunReport":
        overhead = obj.get("overhead_stats")
        return cls(
            policy=obj["policy"],
            regime=obj["regime"],
            seed=int(obj["seed"]),
            n_jobs=int(obj["n_jobs"]),
            violations=int(obj["violations"]),
            wait_stats=Stats.from_json(obj["wait_stats"]),
            e2e_stats=Stats.from_json(obj["e2e_stats"]),
            excess_stats=Stats.from_json(obj["excess_stats"]),
            energy_per_worker_j=dict(obj["energy_per_worker_j"]),
            busy_seconds_per_worker=dict(obj["busy_seconds_per_worker"]),
            assignment_fraction_per_worker=dict(obj["assignment_fraction_per_worker"]),
            overhead_stats=Stats.from_json(overhead) if overhead else None,
        )

    def metric(self, name: str) -> float:
        if name == "violations":
            return float(self.violations)
        if name == "wait_mean_s":
            return self.wait_stats.mean
        if name == "e2e_mean_s":
            return self.e2e_stats.mean
        if name == "e2e_p99_s":
            return self.e2e_stats.p99
        if name == "excess_mean_s":
            return self.excess_stats.mean
        raise ValidationError(f"unknown metric {name!r}")

    def energy_on(self, worker_ids: Sequence[str]) -> float:
        """Total joules over the given workers (e.g. the edge boards)."""
        return sum(self.energy_per_worker_j.get(w, 0.0) for w in worker_ids)


def aggregate(
    records: Sequence[JobRecord],
    ledger: EnergyLedger,
    overheads_s: Optional[Sequence[float]] = None,
    policy: str = "",
    regime: str = "",
    seed: int = 0,
) -> RunReport:
    """Fold job records and the energy ledger into a RunReport."""
    if not records:
        raise EmptyRun("aggregate needs at least one job record")
    n = len(records)
    waits = [r.wait_s for r in records]
    e2es = [r.e2e_s for r in records]
    excesses = [r.excess_s for r in records]  # already clipped at zero per record
    counts: dict[str, int] = {wid: 0 for wid in ledger.joules}
    for r in records:
        counts[r.worker_id] = counts.get(r.worker_id, 0) + 1
    fractions = {wid: c / n for wid, c in counts.items()}
    return RunReport(
        policy=policy,
        regime=regime,
        seed=seed,
        n_jobs=n,
        violations=sum(1 for r in records if r.violated),
        wait_stats=Stats.from_values(waits),
        e2e_stats=Stats.from_values(e2es),
        excess_stats=Stats.from_values(excesses),
        energy_per_worker_j=dict(ledger.joules),
        busy_seconds_per_worker=dict(ledger.busy_seconds),
        assignment_fraction_per_worker=fractions,
        overhead_stats=Stats.from_values(overheads_s) if overheads_s else None,
    )


def normalize_energy(reports: Sequence[RunReport]) -> dict[str, dict[str, float]]:
    """Per worker, divide each policy's joules by the max across policies.

    The heaviest policy maps to exactly 1.0; zero usage maps to 0.0.
    Reports for the same policy are summed before normalizing.
    """
    totals: dict[str, dict[str, float]] = {}
    for rep in reports:
        for wid, j in rep.energy_per_worker_j.items():
            totals.setdefault(wid, {}).setdefault(rep.policy, 0.0)
            totals[wid][rep.policy] += j
    out: dict[str, dict[str, float]] = {}
    for wid, per_policy in totals.items():
        peak = max(per_policy.values())
        out[wid] = {
            pol: (j / peak if peak > 0 else 0.0) for pol, j in per_policy.items()
        }
    return out


@dataclass
class Comparison:
    """Cross-policy means, ratios against the reference, and macro-averages."""

    reference: str
    regimes: list[str]
    policies: list[str]
    # regime -> policy -> metric -> mean over seeds
    table: dict[str, dict[str, dict[str, float]]]
    # regime -> policy -> metric -> ratio vs reference (math.inf possible)
    ratios: dict[str, dict[str, dict[str, float]]]
    # policy -> metric -> macro-average of finite ratios across regimes
    macro: dict[str, dict[str, Optional[float]]]
    # policy -> metric -> True when an infinite ratio was excluded
    macro_flags: dict[str, dict[str, bool]] = field(default_factory=dict)

    def to_json(self) -> dict:
        def clean(x):
            if x is None:
                return None
            return "inf" if math.isinf(x) else x

        return {
            "reference": self.reference,
            "regimes": self.regimes,
            "policies": self.policies,
            "table": self.table,
            "ratios": {
                rg: {p: {m: clean(v) for m, v in ms.items()} for p, ms in pols.items()}
                for rg, pols in self.ratios.items()
            },
            "macro": {p: {m: clean(v) for m, v in ms.items()} for p, ms in self.macro.items()},
            "macro_excluded_inf": self.macro_flags,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    def render_regime(self, regime: str) -> str:
        cols = ["policy"] + list(COMPARE_METRICS)
        widths = [max(10, len(c) + 2) for c in cols]
        lines = ["".join(c.ljust(w) for c, w in zip(cols, widths))]
        lines.append("-" * sum(widths))
        for pol in self.policies:
            row = [pol]
            for m in COMPARE_METRICS:
                row.append(f"{self.table[regime][pol][m]:.3f}")
            lines.append("".join(c.ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)

    def render_text(self) -> str:
        blocks = []
        for rg in self.regimes:
            blocks.append(f"== {rg} (means over seeds; ratios vs {self.reference}) ==")
            blocks.append(self.render_regime(rg))
            ratio_bits = []
            for pol in self.policies:
                if pol == self.reference:
                    continue
                r = self.ratios[rg][pol]["violations"]
                ratio_bits.append(f"{pol}: {'inf' if math.isinf(r) else f'{r:.2f}x'}")
            blocks.append("violation ratios: " + ", ".join(ratio_bits))
            blocks.append("")
        return "\n".join(blocks)


def _ratio(baseline: float, reference: float) -> float:
    if reference == 0.0:
        return 1.0 if baseline == 0.0 else math.inf
    return baseline / reference


def compare(reports: Sequence[RunReport], reference: str = "synergai") -> Comparison:
    """Build per-regime mean tables and baseline/reference ratio summaries."""
    if not reports:
        raise EmptyRun("compare needs at least one report")
    regimes = sorted({r.regime for r in reports})
    policies = sorted({r.policy for r in reports})
    if reference not in policies:
        raise ValidationError(f"reference policy {reference!r} has no reports")

    table: dict[str, dict[str, dict[str, float]]] = {}
    for rg in regimes:
        table[rg] = {}
        for pol in policies:
            group = [r for r in reports if r.regime == rg and r.policy == pol]
            if not group:
                raise ValidationError(f"no reports for ({rg}, {pol})")
            table[rg][pol] = {
                m: float(np.mean([r.metric(m) for r in group])) for m in COMPARE_METRICS
            }

    ratios: dict[str, dict[str, dict[str, float]]] = {}
    for rg in regimes:
        ratios[rg] = {}
        ref_row = table[rg][reference]
        for pol in policies:
            ratios[rg][pol] = {
                m: _ratio(table[rg][pol][m], ref_row[m]) for m in COMPARE_METRICS
            }

    macro: dict[str, dict[str, Optional[float]]] = {}
    flags: dict[str, dict[str, bool]] = {}
    for pol in policies:
        macro[pol] = {}
        flags[pol] = {}
        for m in COMPARE_METRICS:
            vals = [ratios[rg][pol][m] for rg in regimes]
            finite = [v for v in vals if not math.isinf(v)]
            flags[pol][m] = len(finite) != len(vals)
            macro[pol][m] = float(np.mean(finite)) if finite else None

    return Comparison(
        reference=reference,
        regimes=regimes,
        policies=policies,
        table=table,
        ratios=ratios,
        macro=macro,
        macro_flags=flags,
    )
