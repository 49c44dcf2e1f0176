"""Deadline arithmetic on one queued job.

A job carries q queries and a deadline measured from its arrival. Each
worker's estimate is preprocessing time plus q over the best-config
throughput; workers whose estimate fits in the remaining time form the
acceptable set, and slack (remaining minus the best estimate) drives queue
ordering: the smaller the slack, the more urgent the job.
"""

from synergai import (
    JobSpec,
    ProfileSet,
    QueuedJob,
    acceptable_workers,
    build_dictionary,
    default_cluster,
    default_engines,
    optimal_worker,
    remaining_time,
    synth_profiles,
    urgency,
    worker_estimates,
)

cluster = default_cluster()
engines = default_engines()
profiles = ProfileSet(synth_profiles(cluster, engines, seed=7))
dictionary = build_dictionary(profiles, cluster)

job = JobSpec(job_id="demo", engine_id="tf-resnet50", q=1024, t_qos_s=150.0)
queued = QueuedJob(job, arrival_time_s=0.0)

print(f"job {job.job_id}: {job.q} queries of {job.engine_id}, deadline {job.t_qos_s}s\n")
print("== per-worker estimates (fastest first) ==")
for est in worker_estimates(job, cluster, dictionary):
    print(f"  {est.worker_id:4s} {est.config}  ->  {est.t_estimated_s:7.1f}s")

for now in (0.0, 60.0, 110.0):
    rem = remaining_time(queued, now)
    acc = acceptable_workers(queued, cluster, dictionary, now)
    best = optimal_worker(queued, cluster, dictionary, now)
    slack = urgency(queued, cluster, dictionary, now)
    names = [a.worker_id for a in acc] or ["(none: violation inevitable)"]
    pick = best.worker_id if best else "-"
    print(f"\nafter waiting {now:5.1f}s: remaining {rem:6.1f}s  slack {slack:7.1f}s")
    print(f"  acceptable: {', '.join(names)}")
    print(f"  optimal worker: {pick}")
