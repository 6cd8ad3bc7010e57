"""Uplink intercell interference statistics under channel-based scheduling.

Analytic location laws for five schedulers, composite-fading interference
transforms, outage/capacity/fairness metrics, and a seeded Monte-Carlo
engine that serves as the independent correctness oracle.
"""

from .geometry import (
    AngularGrid,
    NetworkConfig,
    RingGrid,
    SegmentGrid,
    build_ring_grid,
    build_segment_grid,
    db_to_linear,
    dbm_to_watt,
    interferer_distance,
)
from .fading import ChannelModel, Exponential, Gamma, GeneralizedK, gamma_from_gk
from .numerics import (
    IntegrationError,
    QuadratureRule,
    bessel_k,
    cf_to_cdf,
    gauss_laguerre,
    integrate_semi_infinite,
    ln_gamma,
    whittaker_w,
)
from .scheduling import (
    CellContest,
    ComplexityBudgetError,
    GreedyRoundRobinSweep,
    JointLocationAngle,
    LocationPmf,
    RingSnrLaw,
    greedy_pmf,
    greedy_rr_pmf,
    joint_pmf_with_angle,
    location_rr_pmf,
    proportional_fair_pmf,
    ring_max_snr_law,
    round_robin_pmf,
)
from .interference import (
    InterfererDistancePmf,
    InterferenceTransform,
    cumulative_transform,
    interferer_pmf,
    per_cell_pdf,
    transform_to_cdf,
)
from .metrics import (
    CapacityResult,
    FairnessResult,
    OutageProblem,
    SignalLaw,
    average_fairness,
    ergodic_capacity,
    outage_probability,
    signal_law,
    slot_averaged_metric,
)
from .montecarlo import SimulationReport, TrialOutcome, empirical_cdf, run_trials

__version__ = "0.1.0"
