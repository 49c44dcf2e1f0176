"""Exception hierarchy shared by every module.

Two families matter for exit codes: ValidationError (bad inputs, exit 2)
and InvariantError (a runtime guarantee broke, exit 3).
"""


class SynergaiError(Exception):
    """Base class for all library errors."""


class ValidationError(SynergaiError):
    """Invalid input data or configuration."""


class InvariantError(SynergaiError):
    """A runtime invariant was violated; indicates a bug or corrupt state."""


class EmptyCluster(ValidationError):
    """Cluster validation received no workers."""


class DuplicateWorkerId(ValidationError):
    """Two workers share the same worker_id."""


class InvalidTuning(ValidationError):
    """A worker's tuning axis is empty, non-increasing, or mismatched to its arch."""


class UnknownWorker(ValidationError):
    """A worker_id does not exist in the cluster."""


class UnknownConfig(ValidationError):
    """A config choice is not valid on the target worker's tuning axis."""


class EmptyProfileSet(ValidationError):
    """A statistic was requested over zero profile records."""


class NoEntryAndNoDefault(ValidationError):
    """No dictionary entry exists for (engine, worker) and no default can be built."""


class EmptyRun(ValidationError):
    """Metrics aggregation received no job records."""


class TooLarge(ValidationError):
    """Instance exceeds the exhaustive-search size limit."""


class ClockRegression(InvariantError):
    """An event or query carried a timestamp earlier than the current clock."""


class UnschedulableJob(InvariantError):
    """The event loop drained while jobs remained unfinished (policy deadlock)."""
