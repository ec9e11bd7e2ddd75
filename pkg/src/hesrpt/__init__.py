"""Optimal server allocation for parallelizable jobs with sublinear speedup."""

from .core import (
    FLOWTIME,
    SLOWDOWN,
    AllocationVector,
    Instance,
    Job,
    SpeedupParams,
    WeightScheme,
    canonical_order,
    fit_speedup,
    slowdown_of,
    speedup,
    z_prefix,
)
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    HesrptError,
    InstanceParseError,
    LivelockError,
    OracleRefusal,
    PreconditionError,
    SimulationError,
)
from .optimal import (
    OfflineSchedule,
    Phase,
    ScaleFreeConstants,
    offline_schedule,
    optimal_allocation,
    optimal_flow_time,
    optimal_omegas,
    ranked_allocation,
)
from .oracle import brute_force_optimum, evaluate_order, is_sjf, scale_free_ratios
from .policies import EQUI, HELL, KNEE, RS, SRPT, HeSRPT, PolicyState, knee_tune_alpha, make_policy
from .simulator import SimResult, simulate, speed_scale_equivalence_check
from .workloads import (
    AllAtZero,
    Deterministic,
    Pareto,
    Poisson,
    TargetLoad,
    Uniform,
    WorkloadSpec,
    generate,
    read_instance,
    write_instance,
)

__version__ = "0.1.0"
