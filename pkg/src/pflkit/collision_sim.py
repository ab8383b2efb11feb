"""Lumped-parameter 1-D collision simulator.

A reduced mass approaches at a set speed and loads a soft cover in series
with a body-region spring. While the cover still has travel the two springs
share one force, so the stack responds with the series stiffness
k_s k / (k_s + k); once the cover is flat the incremental stiffness is the
body spring alone. Contact is unilateral: force is never negative and
separation ends the contact, which is what lets a bounce produce a Type 1
trace.

Until the modelled controller reacts, the mass is ballistic under the
contact force (plus an optional constant friction force for the sliding
transient rig). Reactions are phenomenological, a detection force threshold
plus a delay, followed by commanded motion:

    retract          velocity is overridden to back straight out
    brake_hold       ramp to zero speed at a set deceleration, then hold
                     position, producing a sustained clamping force
    brake_oscillate  same braking, then a damped ring around the stop
                     position, the signature of an abrupt servo stop

The ballistic phase uses fixed-step semi-implicit Euler (10 us default),
which keeps the energy of the stiff spring stack bounded; a growth of the
undamped total energy beyond 0.1 % aborts the run as a timestep diagnostic.
Commanded phases follow their closed forms exactly and are only sampled at
the output rate. The force signal is resampled to the measuring-device rate
(1 kHz) and cut at the device's onset threshold, so generated traces are
indistinguishable in schema from measured ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .pfl_model import SkinModel
from .trace_analysis import DEFAULT_ONSET_THRESHOLD, ForceTrace

REACTION_NONE = "none"
RETRACT = "retract"
BRAKE_HOLD = "brake_hold"
BRAKE_OSCILLATE = "brake_oscillate"
REACTION_KINDS = (REACTION_NONE, RETRACT, BRAKE_HOLD, BRAKE_OSCILLATE)

DETECT_SKIN = "skin"
DETECT_ROBOT = "robot"

# relative growth of the undamped total energy that flags an unstable step
ENERGY_GROWTH_LIMIT = 1e-3


class SimError(ValueError):
    """Invalid simulation scenario."""


class SimulationUnstableError(RuntimeError):
    """Energy grew beyond the stability bound; the timestep is too large."""


@dataclass(frozen=True)
class ReactionModel:
    """Detection threshold, delay, and the commanded motion that follows.

    `detection_source` records whether the trigger level is the sensorized
    cover's threshold or the robot's own force sensing; both act as a force
    threshold on the 1-D contact force.
    """

    kind: str = REACTION_NONE
    detection_force: float = DEFAULT_ONSET_THRESHOLD
    detection_source: str = DETECT_ROBOT
    reaction_delay: float = 0.0
    deceleration: float = 0.0
    retract_speed: float = 0.0
    oscillation_frequency: float = 0.0
    oscillation_damping: float = 0.0

    def __post_init__(self):
        if self.kind not in REACTION_KINDS:
            raise SimError(f"unknown reaction kind {self.kind!r}")
        if self.detection_source not in (DETECT_SKIN, DETECT_ROBOT):
            raise SimError(f"unknown detection source {self.detection_source!r}")
        if self.kind == REACTION_NONE:
            return
        if not self.detection_force > 0.0:
            raise SimError("detection force must be positive")
        if self.reaction_delay < 0.0:
            raise SimError("reaction delay must be nonnegative")
        if self.kind == RETRACT and not self.retract_speed > 0.0:
            raise SimError("retract reaction needs a positive retract speed")
        if self.kind in (BRAKE_HOLD, BRAKE_OSCILLATE) and not self.deceleration > 0.0:
            raise SimError("brake reactions need a positive deceleration")
        if self.kind == BRAKE_OSCILLATE:
            if not self.oscillation_frequency > 0.0:
                raise SimError("oscillation frequency must be positive")
            if not 0.0 < self.oscillation_damping < 1.0:
                raise SimError("oscillation damping ratio must be in (0, 1)")


def retract_preset(**overrides) -> ReactionModel:
    """Collaborative robot that backs out after detecting contact (Type 1)."""
    params = dict(
        kind=RETRACT,
        detection_force=20.0,
        detection_source=DETECT_SKIN,
        reaction_delay=0.010,
        retract_speed=0.2,
    )
    params.update(overrides)
    return ReactionModel(**params)


def brake_hold_preset(**overrides) -> ReactionModel:
    """Robot that brakes on its path and holds position (Type 3 clamping)."""
    params = dict(
        kind=BRAKE_HOLD,
        detection_force=20.0,
        detection_source=DETECT_SKIN,
        reaction_delay=0.010,
        deceleration=5.0,
    )
    params.update(overrides)
    return ReactionModel(**params)


def brake_oscillate_preset(**overrides) -> ReactionModel:
    """Abrupt early stop followed by damped structural ringing (Type 2).

    Detection sits at the sensorized cover's low trip level, well under the
    measuring device's 20 N threshold, so the stop happens while the cover
    still has travel and the ring stays in the soft series regime instead of
    punching through to the stiff body spring. The ring parameters are
    illustrative, chosen to reproduce the qualitative oscillating force
    profile, not fitted to any hardware.
    """
    params = dict(
        kind=BRAKE_OSCILLATE,
        detection_force=10.0,
        detection_source=DETECT_SKIN,
        reaction_delay=0.002,
        deceleration=30.0,
        oscillation_frequency=9.0,
        oscillation_damping=0.05,
    )
    params.update(overrides)
    return ReactionModel(**params)


@dataclass(frozen=True)
class Friction:
    """Constant sliding-rig friction: force and the normal force behind it."""

    force: float
    normal_force: float

    def __post_init__(self):
        if self.force < 0.0:
            raise SimError("friction force must be nonnegative")
        if not self.normal_force > 0.0:
            raise SimError("normal force must be positive")

    @property
    def coefficient(self) -> float:
        return static_friction_coefficient(self.force, self.normal_force)


@dataclass(frozen=True)
class SimScenario:
    """Everything one run needs; immutable, so sweeps can share it freely."""

    reduced_mass: float
    initial_velocity: float
    body_spring_constant: float
    skin: SkinModel = field(default_factory=SkinModel.none)
    reaction: ReactionModel = field(default_factory=ReactionModel)
    friction: Optional[Friction] = None
    timestep: float = 1e-5
    max_time: float = 2.0
    output_rate: float = 1000.0
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD

    def __post_init__(self):
        if not self.reduced_mass > 0.0:
            raise SimError("reduced mass must be positive")
        if self.initial_velocity < 0.0:
            raise SimError("initial velocity must be nonnegative")
        if not self.body_spring_constant > 0.0:
            raise SimError("body spring constant must be positive")
        if not self.timestep > 0.0 or not self.max_time > 0.0:
            raise SimError("timestep and max time must be positive")
        if not self.output_rate > 0.0:
            raise SimError("output rate must be positive")
        steps = (1.0 / self.output_rate) / self.timestep
        if abs(steps - round(steps)) > 1e-6 or round(steps) < 1:
            raise SimError(
                "output period must be an integer multiple of the timestep"
            )


@dataclass(frozen=True)
class SimResult:
    """One run: the triggered trace plus the full state log and audits.

    The log arrays cover the whole horizon from motion start at the output
    rate. Audit quantities (peak force, impulse to the first rest instant,
    worst energy drift) are tracked at full integrator resolution during the
    ballistic phase.
    """

    trace: ForceTrace
    time: np.ndarray
    force: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    skin_compression: np.ndarray
    peak_force: float
    peak_time: float
    impulse_to_rest: float | None
    max_energy_drift: float
    detection_time: float | None
    reaction_start_time: float | None


def static_friction_coefficient(friction_force: float, normal_force: float) -> float:
    """Dimensionless friction coefficient from a force pair."""
    if not normal_force > 0.0:
        raise SimError("normal force must be positive")
    if friction_force < 0.0:
        raise SimError("friction force must be nonnegative")
    return friction_force / normal_force


def contact_law(
    body_spring_constant: float, skin: SkinModel, penetration: float
) -> tuple[float, float]:
    """Contact force and cover compression at a given penetration.

    Series springs while the cover has travel left, body spring alone after
    it flattens; zero for nonpositive penetration (unilateral contact).
    """
    k = body_spring_constant
    ks, ds = skin.spring_constant, skin.compressible_thickness
    if penetration <= 0.0:
        return 0.0, 0.0
    if ks <= 0.0 or ds <= 0.0:
        return k * penetration, 0.0
    flatten_at = ds * (k + ks) / k
    if penetration < flatten_at:
        force = (ks * k / (ks + k)) * penetration
        return force, force / ks
    return k * (penetration - ds), ds


def _spring_energy(k: float, skin: SkinModel, x: float) -> float:
    force, xs = contact_law(k, skin, x)
    xb = max(x, 0.0) - xs
    return 0.5 * skin.spring_constant * xs * xs + 0.5 * k * xb * xb


def _commanded_position(reaction: ReactionModel, x_r: float, v_r: float, tau: float) -> tuple[float, float]:
    """Position and velocity `tau` seconds after the reaction takes over."""
    if reaction.kind == RETRACT:
        return x_r - reaction.retract_speed * tau, -reaction.retract_speed
    decel = reaction.deceleration
    sgn = 1.0 if v_r >= 0.0 else -1.0
    tau_stop = abs(v_r) / decel
    if tau < tau_stop:
        return x_r + v_r * tau - sgn * 0.5 * decel * tau * tau, v_r - sgn * decel * tau
    x_hold = x_r + 0.5 * v_r * tau_stop
    if reaction.kind == BRAKE_HOLD:
        return x_hold, 0.0
    # damped ring about the stop position, seeded by the pre-brake momentum
    zeta = reaction.oscillation_damping
    omega_n = 2.0 * math.pi * reaction.oscillation_frequency
    omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
    t2 = tau - tau_stop
    envelope = math.exp(-zeta * omega_n * t2)
    amp = v_r / omega_d
    x = x_hold + amp * envelope * math.sin(omega_d * t2)
    v = amp * envelope * (omega_d * math.cos(omega_d * t2) - zeta * omega_n * math.sin(omega_d * t2))
    return x, v


def simulate(scenario: SimScenario) -> SimResult:
    """Run one collision; deterministic for fixed inputs."""
    mu = scenario.reduced_mass
    k = scenario.body_spring_constant
    skin = scenario.skin
    reaction = scenario.reaction
    dt = scenario.timestep
    out_every = int(round((1.0 / scenario.output_rate) / dt))
    n_out = int(math.floor(scenario.max_time * scenario.output_rate)) + 1
    friction_force = scenario.friction.force if scenario.friction else 0.0

    t_log = np.arange(n_out) / scenario.output_rate
    f_log = np.zeros(n_out)
    x_log = np.zeros(n_out)
    v_log = np.zeros(n_out)
    s_log = np.zeros(n_out)

    x = 0.0
    v = scenario.initial_velocity
    energy_0 = 0.5 * mu * v * v
    max_drift = 0.0
    impulse = 0.0
    impulse_to_rest: float | None = None
    peak_force = 0.0
    peak_time = 0.0
    detection_time: float | None = None
    reaction_start: float | None = None

    watch_detection = reaction.kind != REACTION_NONE
    force_prev, _ = contact_law(k, skin, x)
    step = 0
    out_idx = 0
    handoff: tuple[float, float, float, str] | None = None  # t, x, v, phase

    max_steps = (n_out - 1) * out_every
    while step <= max_steps:
        t = step * dt
        force, xs = contact_law(k, skin, x)
        if step > 0:
            impulse += 0.5 * (force_prev + force) * dt
        force_prev = force
        if force > peak_force:
            peak_force, peak_time = force, t
        if watch_detection and detection_time is None and force >= reaction.detection_force:
            detection_time = t
            reaction_start = t + reaction.reaction_delay
        if step % out_every == 0:
            out_idx = step // out_every
            f_log[out_idx], x_log[out_idx], v_log[out_idx], s_log[out_idx] = force, x, v, xs

        if reaction_start is not None and t >= reaction_start:
            handoff = (t, x, v, "reaction")
            break
        if reaction.kind == REACTION_NONE and x <= 0.0 and v <= 0.0 and step > 0:
            handoff = (t, x, v, "separated")
            break

        v_prev = v
        accel = -force / mu
        if friction_force > 0.0 and v != 0.0:
            accel -= math.copysign(friction_force, v) / mu
        v += accel * dt
        x += v * dt
        if v_prev > 0.0 >= v and impulse_to_rest is None:
            impulse_to_rest = impulse + 0.5 * (force + contact_law(k, skin, x)[0]) * dt
        if energy_0 > 0.0:
            drift = (0.5 * mu * v * v + _spring_energy(k, skin, x) - energy_0) / energy_0
            if drift > max_drift:
                max_drift = drift
                if drift > ENERGY_GROWTH_LIMIT:
                    raise SimulationUnstableError(
                        f"energy grew {drift:.2%} by t={t + dt:.6f} s; "
                        f"timestep {dt:g} s is too large for this stiffness"
                    )
        step += 1

    if handoff is not None:
        t_r, x_r, v_r, phase = handoff
        for i in range(out_idx + 1, n_out):
            t = t_log[i]
            if phase == "separated":
                xi, vi = x_r + v_r * (t - t_r), v_r
            else:
                xi, vi = _commanded_position(reaction, x_r, v_r, t - t_r)
            fi, si = contact_law(k, skin, xi)
            f_log[i], x_log[i], v_log[i], s_log[i] = fi, xi, vi, si
            if fi > peak_force:
                peak_force, peak_time = fi, t

    trace = ForceTrace.from_signal(
        f_log, scenario.output_rate, scenario.onset_threshold
    )
    return SimResult(
        trace=trace,
        time=t_log,
        force=f_log,
        position=x_log,
        velocity=v_log,
        skin_compression=s_log,
        peak_force=peak_force,
        peak_time=peak_time,
        impulse_to_rest=impulse_to_rest,
        max_energy_drift=max_drift,
        detection_time=detection_time,
        reaction_start_time=reaction_start,
    )
