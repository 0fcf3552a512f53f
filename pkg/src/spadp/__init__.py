"""Reduced-dimensional LQR learning for two-time-scale LTI systems.

The package learns low-order state-feedback gains for systems whose
dynamics split into slow and fast parts, using only measured
trajectories: a fixed-step simulator generates data, a data-driven policy
iteration inverts it into value matrices and gains, and a model-based
Riccati baseline certifies the results.  Clustered consensus networks get
the same treatment through cluster averaging, and a neuro-adaptive
observer supplies state estimates when only outputs are measured.
"""

from .clusters import (
    ClusteredNetwork,
    ClusterTransforms,
    build_network,
    decoupled_slow,
    full_system,
    sp_form,
    transforms,
)
from .learner import (
    AdpConfig,
    LearnDivergence,
    LearnResult,
    LearnStep,
    RankCheck,
    build_regression,
    check_rank,
    composite_gain,
    learn,
    learn_decentralized,
    learn_output_feedback,
)
from .linalg import (
    LstsqResult,
    devec,
    is_hurwitz,
    kron,
    lyapunov_solve,
    solve_least_squares,
    spectral_abscissa,
    sym_compress,
    sym_expand,
    sym_param_count,
    symmetrize,
    vec,
)
from .observer import (
    CosimResult,
    ObserverConfig,
    ObserverState,
    cosimulate,
    init_observer_state,
    nn_forward,
    observer_derivatives,
)
from .riccati import (
    AreSolution,
    PoleReport,
    care_solve,
    closed_loop_cost,
    slow_pole_report,
    stabilizing_gain,
)
from .sim import (
    AdpDataset,
    CostEstimate,
    ExplorationSignal,
    LtiSystem,
    SimulationBlowUp,
    Trajectory,
    collect_adp_data,
    evaluate_cost,
    feedback_policy,
    simulate,
)
from .spmodel import (
    SlowSubsystem,
    SpSystem,
    assemble_full,
    from_full,
    reduce_slow,
    slow_of,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunReport,
    compare_dims,
    config_hash,
    reference_gain,
    run,
    subsample,
    substeps,
    sweep_epsilon,
    trajectory_gap,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
