"""All seven policies on the same workload.

Same trace, same profiles, seven schedulers. Baselines run each worker's
default configuration and keep arrival order; the deadline-aware policy
re-sorts its queue by slack on every event and cascades across acceptable
workers. The gap widens as deadlines tighten.
"""

from synergai import (
    POLICY_NAMES,
    ProfileSet,
    aggregate,
    build_dictionary,
    compare,
    default_cluster,
    default_engines,
    gen_trace,
    parse_regime,
    run,
    synth_profiles,
)

cluster = default_cluster()
engines = default_engines()

reports = []
for regime_name in ("DL-FL", "DH-FH"):
    for seed in range(3):
        profiles = ProfileSet(synth_profiles(cluster, engines, seed=1000 + seed))
        dictionary = build_dictionary(profiles, cluster)
        trace = gen_trace(parse_regime(regime_name, seed=seed), engines, profiles)
        for policy in POLICY_NAMES:
            result = run(trace, cluster, profiles, dictionary, policy)
            reports.append(
                aggregate(result.records, result.energy,
                          policy=policy, regime=regime_name, seed=seed)
            )

print(compare(reports, reference="synergai").render_text())
