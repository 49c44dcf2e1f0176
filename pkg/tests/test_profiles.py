"""Dictionary construction, default configs, and the synthetic generator."""

from __future__ import annotations

import random

import numpy as np
import pytest

from synergai import (
    ConfigurationDictionary,
    OptimalEntry,
    ProfileRecord,
    ProfileSet,
    build_dictionary,
    default_config,
    synth_profiles,
)
from synergai.cluster import mode, threads
from synergai.errors import NoEntryAndNoDefault, UnknownConfig, UnknownWorker
from synergai.profiles import (
    AGX_PEAK_QPS_RANGE,
    NX_PEAK_QPS_RANGE,
    X86_PEAK_QPS_RANGE,
)


def rec(engine, worker, cfg, qps, preproc=1.0, q=1024):
    return ProfileRecord(
        engine_id=engine,
        worker_id=worker,
        config=cfg,
        qps=qps,
        preproc_s=preproc,
        total_s=preproc + q / qps,
    )


# ---------------------------------------------------------------------------
# build_dictionary
# ---------------------------------------------------------------------------

def test_argmax_selection(cluster):
    records = [rec("e", "x86", threads(1), 16.5), rec("e", "x86", threads(8), 48.0)]
    d = build_dictionary(records, cluster)
    entry = d.lookup("e", "x86")
    # Linear-scan oracle over the two candidates.
    best = max(records, key=lambda r: r.qps)
    assert entry.config == best.config == threads(8)
    assert entry.qps == 48.0


def test_singleton_argmax(cluster):
    records = [rec("e", "agx", mode(3), 12.0, preproc=2.5)]
    d = build_dictionary(records, cluster)
    entry = d.lookup("e", "agx")
    assert entry == OptimalEntry(config=mode(3), qps=12.0, preproc_s=2.5)


def test_equal_qps_tie_prefers_fewer_threads(cluster):
    records = [rec("e", "x86", threads(8), 40.0), rec("e", "x86", threads(4), 40.0)]
    d = build_dictionary(records, cluster)
    assert d.lookup("e", "x86").config == threads(4)


def test_equal_qps_tie_prefers_fewer_cpus_then_lower_freq(cluster):
    # NX mode 7 (1900 MHz, 2 cpus) vs mode 9 (1900 MHz, 4 cpus): fewer cpus win.
    records = [rec("e", "nx", mode(9), 15.0), rec("e", "nx", mode(7), 15.0)]
    assert build_dictionary(records, cluster).lookup("e", "nx").config == mode(7)
    # NX mode 2 (1400 MHz, 4 cpus) vs mode 9 (1900 MHz, 4 cpus): lower frequency wins.
    records = [rec("e", "nx", mode(9), 15.0), rec("e", "nx", mode(2), 15.0)]
    assert build_dictionary(records, cluster).lookup("e", "nx").config == mode(2)


def test_dictionary_order_independent(cluster, profiles7):
    base = build_dictionary(profiles7, cluster).to_json()
    shuffled = list(profiles7.records)
    random.Random(13).shuffle(shuffled)
    assert build_dictionary(shuffled, cluster).to_json() == base


def test_every_entry_is_brute_force_max(cluster, profiles7, dictionary7):
    for (engine_id, worker_id), entry in dictionary7.entries.items():
        candidates = [
            r for r in profiles7 if r.engine_id == engine_id and r.worker_id == worker_id
        ]
        assert entry.qps == max(r.qps for r in candidates)


def test_unknown_worker_and_config_rejected(cluster):
    with pytest.raises(UnknownWorker):
        build_dictionary([rec("e", "ghost", threads(1), 5.0)], cluster)
    with pytest.raises(UnknownConfig):
        build_dictionary([rec("e", "x86", threads(3), 5.0)], cluster)
    with pytest.raises(UnknownConfig):
        build_dictionary([rec("e", "agx", threads(8), 5.0)], cluster)


def test_dictionary_round_trip(cluster, dictionary7, tmp_path):
    path = tmp_path / "dict.json"
    dictionary7.save(path)
    assert ConfigurationDictionary.load(path).to_json() == dictionary7.to_json()


def test_profile_set_round_trip(profiles7, tmp_path):
    path = tmp_path / "profiles.jsonl"
    profiles7.save(path)
    loaded = ProfileSet.load(path)
    assert [r.to_json() for r in loaded] == [r.to_json() for r in profiles7]


# ---------------------------------------------------------------------------
# default_config
# ---------------------------------------------------------------------------

def test_unprofiled_agx_defaults_to_mode6(cluster):
    empty = ConfigurationDictionary({})
    assert default_config(cluster.worker("agx"), empty) == mode(6)


def test_unprofiled_nx_defaults_to_mode9(cluster):
    empty = ConfigurationDictionary({})
    assert default_config(cluster.worker("nx"), empty) == mode(9)


def test_unprofiled_x86_defaults_to_second_highest_level(cluster):
    empty = ConfigurationDictionary({})
    assert default_config(cluster.worker("x86"), empty) == threads(8)


def test_profiled_majority_vote(cluster):
    records = []
    for i in range(7):
        records.append(rec(f"e{i}", "x86", threads(8), 50.0))
        records.append(rec(f"e{i}", "x86", threads(16), 40.0))
    for i in range(7, 12):
        records.append(rec(f"e{i}", "x86", threads(16), 60.0))
        records.append(rec(f"e{i}", "x86", threads(8), 50.0))
    d = build_dictionary(records, cluster)
    # 8 threads wins 7 of 12 engines.
    assert default_config(cluster.worker("x86"), d) == threads(8)


def test_majority_tie_breaks_to_higher_frequency(cluster):
    records = [
        rec("e0", "agx", mode(5), 20.0),  # 2188 MHz
        rec("e1", "agx", mode(4), 20.0),  # 2100 MHz
    ]
    d = build_dictionary(records, cluster)
    assert default_config(cluster.worker("agx"), d) == mode(5)


def test_default_entry_fallback_estimates(cluster):
    # Engine "new" was never profiled on agx; the resolver synthesizes an
    # entry at the worker's habitual config with median stats.
    records = [
        rec("a", "agx", mode(6), 20.0, preproc=2.0),
        rec("b", "agx", mode(6), 30.0, preproc=4.0),
        rec("c", "agx", mode(6), 40.0, preproc=6.0),
    ]
    d = build_dictionary(records, cluster)
    entry = d.resolve("new", cluster.worker("agx"))
    assert entry.config == mode(6)
    assert entry.qps == 30.0
    assert entry.preproc_s == 4.0


def test_resolver_without_any_entries_raises(cluster):
    empty = ConfigurationDictionary({})
    with pytest.raises(NoEntryAndNoDefault):
        empty.resolve("e", cluster.worker("agx"))


# ---------------------------------------------------------------------------
# synth_profiles
# ---------------------------------------------------------------------------

def test_synth_record_count(cluster, engines):
    records = synth_profiles(cluster, engines, seed=7)
    # 12 engines x (5 thread levels + 6 modes + 9 modes)
    assert len(records) == 12 * (5 + 6 + 9) == 240


def test_synth_deterministic(cluster, engines):
    a = synth_profiles(cluster, engines, seed=7)
    b = synth_profiles(cluster, engines, seed=7)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    c = synth_profiles(cluster, engines, seed=8)
    assert [r.to_json() for r in a] != [r.to_json() for r in c]


def test_synth_x86_monotone_in_threads(cluster, engines):
    ps = ProfileSet(synth_profiles(cluster, engines, seed=11))
    levels = cluster.worker("x86").tuning.levels
    for e in engines:
        qps = [ps.lookup(e.engine_id, "x86", threads(n)).qps for n in levels]
        assert all(b >= a for a, b in zip(qps, qps[1:]))


def test_synth_arm_monotone_in_frequency(cluster, engines):
    ps = ProfileSet(synth_profiles(cluster, engines, seed=11))
    for wid in ("agx", "nx"):
        axis = cluster.worker(wid).tuning
        for e in engines:
            pairs = [
                (m.max_cpu_freq_mhz, ps.lookup(e.engine_id, wid, mode(m.mode_id)).qps)
                for m in axis.modes
            ]
            for f1, q1 in pairs:
                for f2, q2 in pairs:
                    if f1 < f2:
                        assert q1 <= q2


def test_synth_preproc_constant_per_worker(cluster, engines):
    ps = ProfileSet(synth_profiles(cluster, engines, seed=11))
    for e in engines:
        for worker in cluster.workers:
            values = {
                ps.lookup(e.engine_id, worker.worker_id, cfg).preproc_s
                for cfg in worker.configs()
            }
            assert len(values) == 1


def test_synth_mean_thread_speedup_window(cluster, engines):
    # Mean over engines of QPS(8 threads) / QPS(1 thread) near the 3.8x target.
    for seed in range(5):
        ps = ProfileSet(synth_profiles(cluster, engines, seed=100 + seed))
        ratios = [
            ps.lookup(e.engine_id, "x86", threads(8)).qps
            / ps.lookup(e.engine_id, "x86", threads(1)).qps
            for e in engines
        ]
        assert 3.3 <= float(np.mean(ratios)) <= 4.3


def test_synth_peaks_inside_envelopes(cluster, engines):
    envelopes = {"x86": X86_PEAK_QPS_RANGE, "agx": AGX_PEAK_QPS_RANGE, "nx": NX_PEAK_QPS_RANGE}
    for seed in (0, 5, 9):
        ps = ProfileSet(synth_profiles(cluster, engines, seed=seed))
        for wid, (lo, hi) in envelopes.items():
            worker = cluster.worker(wid)
            for e in engines:
                peak = max(ps.lookup(e.engine_id, wid, cfg).qps for cfg in worker.configs())
                assert lo <= peak <= hi


def test_synth_totals_consistent(cluster, engines):
    for r in synth_profiles(cluster, engines, seed=3, q=2048):
        assert r.total_s == pytest.approx(r.preproc_s + 2048 / r.qps, rel=1e-12)
