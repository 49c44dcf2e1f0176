"""One simulated experiment end to end, with the per-job timeline.

Builds a DH-FH workload (tight deadlines, fast arrivals: both derived from
the profiled execution-time distribution), runs the urgency-ordered policy,
and prints what every job did. Watch for queue reordering: jobs are not
served in arrival order when a later arrival is closer to its deadline.
"""

from synergai import (
    ProfileSet,
    aggregate,
    build_dictionary,
    default_cluster,
    default_engines,
    derive_lambda,
    gen_trace,
    parse_regime,
    run,
    synth_profiles,
)

cluster = default_cluster()
engines = default_engines()
profiles = ProfileSet(synth_profiles(cluster, engines, seed=1003))
dictionary = build_dictionary(profiles, cluster)

regime = parse_regime("DH-FH", seed=3)
trace = gen_trace(regime, engines, profiles)
lam = derive_lambda(profiles.records, regime.frequency)
print(f"regime {regime.name}: {regime.n_jobs} jobs, mean inter-arrival {1 / lam:.0f}s\n")

result = run(trace, cluster, profiles, dictionary, "synergai", tick_s=5.0)

print("job    arrive   start   finish  worker config      wait    e2e  deadline")
for r in sorted(result.records, key=lambda r: r.arrival_s):
    flag = "  VIOLATED" if r.violated else ""
    print(
        f"{r.job_id}  {r.arrival_s:7.1f} {r.start_s:7.1f} {r.finish_s:8.1f}  "
        f"{r.worker_id:4s} {str(r.config):10s} {r.wait_s:6.1f} {r.e2e_s:6.1f} {r.t_qos_s:9.1f}{flag}"
    )

report = aggregate(result.records, result.energy, result.overheads_s,
                   policy="synergai", regime=regime.name, seed=regime.seed)
print(f"\nviolations: {report.violations}/{report.n_jobs}")
print(f"wait  mean {report.wait_stats.mean:6.1f}s   p99 {report.wait_stats.p99:7.1f}s")
print(f"e2e   mean {report.e2e_stats.mean:6.1f}s   p99 {report.e2e_stats.p99:7.1f}s")
print(f"assignment fractions: {report.assignment_fraction_per_worker}")
print(f"energy (J): " + ", ".join(f"{w}={j:.0f}" for w, j in report.energy_per_worker_j.items()))
