"""Shared fixtures: the packaged testbed and small hand-buildable instances."""

from __future__ import annotations

import pytest

from synergai import (
    Cluster,
    ConfigurationDictionary,
    OptimalEntry,
    ProfileSet,
    default_cluster,
    default_engines,
    build_dictionary,
    synth_profiles,
)

@pytest.fixture(scope="session")
def cluster() -> Cluster:
    return default_cluster()


@pytest.fixture(scope="session")
def engines():
    return default_engines()


@pytest.fixture(scope="session")
def profiles7(cluster, engines) -> ProfileSet:
    return ProfileSet(synth_profiles(cluster, engines, seed=7))


@pytest.fixture(scope="session")
def dictionary7(cluster, profiles7) -> ConfigurationDictionary:
    return build_dictionary(profiles7, cluster)


def dictionary_from_estimates(cluster: Cluster, estimates: dict, q: int = 100) -> ConfigurationDictionary:
    """Dictionary whose entries produce exact per-worker estimates for q queries.

    estimates: {engine_id: {worker_id: t_estimated_s}}, realized with zero
    preprocessing time and qps = q / t.
    """
    entries = {}
    for engine_id, per_worker in estimates.items():
        for worker_id, t in per_worker.items():
            worker = cluster.worker(worker_id)
            cfg = worker.configs()[0]
            entries[(engine_id, worker_id)] = OptimalEntry(config=cfg, qps=q / t, preproc_s=0.0)
    return ConfigurationDictionary(entries)
