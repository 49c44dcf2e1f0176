"""QoS-driven, architecture-aware inference-serving scheduling at desk scale.

The library pairs an offline characterization stage (profile records distilled
into a per-engine configuration dictionary) with an online, urgency-ordered
scheduling policy, six comparison baselines, a deterministic discrete-event
simulator, and a metrics harness for violation / latency / energy studies on
heterogeneous edge-cloud clusters.
"""

from .cluster import (
    ARCH_ARM,
    ARCH_X86,
    Cluster,
    ConfigChoice,
    EngineSpec,
    ModeSelection,
    OperatingMode,
    ThreadScaling,
    Worker,
    default_cluster,
    default_engines,
    mode,
    nominal_power,
    threads,
    validate_cluster,
)
from .profiles import (
    ConfigurationDictionary,
    OptimalEntry,
    ProfileRecord,
    ProfileSet,
    build_dictionary,
    default_config,
    synth_profiles,
)
from .workload import (
    ArrivalTrace,
    ExperimentRegime,
    JobSpec,
    derive_demand,
    derive_lambda,
    gen_trace,
    parse_regime,
)
from .estimator import (
    QueuedJob,
    WorkerEstimate,
    acceptable_workers,
    estimate,
    optimal_worker,
    remaining_time,
    urgency,
    worker_estimates,
)
from .scheduler import (
    ArrivalEvent,
    Assignment,
    CompletionEvent,
    Policy,
    SchedulerState,
    SynergaiScheduler,
    TickEvent,
)
from .baselines import (
    POLICY_NAMES,
    SIMPLE_BASELINES,
    BestEffortScheduler,
    LeastRecentlyUsedScheduler,
    MostRecentlyUsedScheduler,
    RoundRobinScheduler,
    SloMaelScheduler,
    StrictRoundRobinScheduler,
    make_policy,
)
from .sim import EnergyLedger, JobRecord, SimResult, brute_force_min_violations, run
from .metrics import Comparison, RunReport, Stats, aggregate, compare, normalize_energy

__version__ = "0.1.0"
