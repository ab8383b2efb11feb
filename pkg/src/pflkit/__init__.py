"""Power-and-force-limiting collision toolkit.

Models permissible contact velocities and impact forces for collaborative
robot applications, including the energy stored by soft protective covers;
computes direction-dependent manipulator effective mass; simulates 1-D
collisions with configurable stop reactions; derives collision metrics from
measured force traces; and aggregates measurement corpora into report
tables. See the README for file formats and the CLI.
"""

from .collision_sim import (
    Friction,
    ReactionModel,
    SimResult,
    SimScenario,
    brake_hold_preset,
    brake_oscillate_preset,
    contact_law,
    retract_preset,
    simulate,
    static_friction_coefficient,
)
from .dynamics import (
    JointSpec,
    KinematicChain,
    effective_mass,
    forward_kinematics,
    geometric_jacobian,
    joint_space_inertia,
)
from .pfl_model import (
    CONSTRAINED,
    BodyRegionModel,
    ChainEffectiveMass,
    ContactScenario,
    EnergyBalance,
    ExplicitEffectiveMass,
    SkinModel,
    StaticEffectiveMass,
    hand_back_region,
    permissible_velocity,
    predicted_impact_force,
    reduced_mass,
    soft_pad,
    spring_energy_balance,
    static_effective_mass,
)
from .trace_analysis import (
    CollisionMetrics,
    CollisionType,
    ForceTrace,
    classify,
    clamping_force,
    compute_metrics,
    estimate_robot_mass,
    impulse_to_peak,
    peak,
    phase1_duration,
    window_maxima,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
