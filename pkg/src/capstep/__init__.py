"""Capture-step gait engine.

Pattern-generated stepping, pendulum-model balance control (pivot offsets,
step timing, footstep placement), kinematic state estimation, and a
closed-loop point-mass simulator for push-recovery analysis.
"""

from .config import (
    ConfigError,
    CpgConfig,
    EstimationConfig,
    FilterConfig,
    GaitConfig,
    KinematicModel,
    PendulumParams,
    RefConfig,
    SimConfig,
    load_config,
    save_config,
)
from .control import (
    FootstepController,
    GaitTarget,
    NominalState,
    StepParams,
    StepTimeCase,
    amplitude_conversion,
    footstep_location,
    lateral_zmp,
    predictive_filter,
    reference_trajectory,
    sagittal_zmp,
    step_time,
)
from .cpg import (
    JointAngles,
    LegInterfaceParams,
    MotionPhase,
    SwingAmplitude,
    WholeBodyPose,
    advance_phase,
    arm_swing,
    compose_pose,
    leg_interface_map,
    leg_lift,
    leg_swing,
    unit_swing,
)
from .estimation import (
    SensorFrame,
    StateEstimator,
    SupportState,
    detect_support_exchange,
    extract_com,
    reconstruct_pose,
)
from .lipm import (
    ComState,
    State1D,
    ZmpOffset,
    lipm_predict,
    orbital_energy,
    predict_pos,
    predict_vel,
    time_to_position,
    time_to_velocity,
)
from .plant import (
    Scenario,
    ScenarioError,
    StabilityMap,
    SweepSpec,
    grid_cells,
    load_scenario,
    run_scenario,
    step_plant,
    sweep_phase_space,
)

__version__ = "0.1.0"
