"""Offline phase walkthrough: cluster, profiles, and the configuration dictionary.

The packaged cluster mirrors a small mixed testbed: one x86 VM tuned by
thread count and two ARM boards tuned by operating mode. A synthetic
characterization sweep stands in for live benchmarking; distilling it keeps,
per (engine, worker), the config with the highest throughput.
"""

from synergai import (
    ProfileSet,
    build_dictionary,
    default_cluster,
    default_config,
    default_engines,
    synth_profiles,
)

cluster = default_cluster()
engines = default_engines()

print("== workers ==")
for w in cluster.workers:
    axis = w.tuning
    knobs = (
        f"threads {list(axis.levels)}"
        if hasattr(axis, "levels")
        else f"{len(axis.modes)} operating modes"
    )
    print(f"  {w.worker_id:4s} {w.arch:3s} {w.vcpus:2d} vcpus  {knobs}")

profiles = ProfileSet(synth_profiles(cluster, engines, seed=7))
print(f"\n{len(profiles)} profile records synthesized "
      f"({len(engines)} engines x 20 configs)")

dictionary = build_dictionary(profiles, cluster)
print("\n== best configs per engine (queries/second) ==")
for e in engines[:5]:
    row = []
    for w in cluster.workers:
        entry = dictionary.lookup(e.engine_id, w.worker_id)
        row.append(f"{w.worker_id}={entry.config} @{entry.qps:6.1f}")
    print(f"  {e.engine_id:22s} " + "  ".join(row))
print("  ...")

print("\n== habitual defaults (what a new engine would get) ==")
for w in cluster.workers:
    print(f"  {w.worker_id:4s} -> {default_config(w, dictionary)}")

print("\n== power accounting ==")
for wid, cfg in (("x86", None), ("agx", None), ("nx", None)):
    w = cluster.worker(wid)
    cfg = default_config(w, dictionary)
    print(f"  {wid:4s} busy at {cfg}: {cluster.nominal_power(wid, cfg):5.1f} W")
