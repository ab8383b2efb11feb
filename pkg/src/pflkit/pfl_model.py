"""Two-body spring contact limits and the compliant-cover extension.

The power-and-force-limiting contact model treats a collision as the robot's
reduced mass loading a linear spring that stands in for the struck body
region: all kinetic energy mu v^2 / 2 turns into spring energy F^2 / (2 k),
which bounds the velocity for a given force limit. When the robot wears a
soft protective cover, the cover also stores spring energy up to the point
where it is fully flattened, d^2 k_s / 2, which raises the permissible
velocity and lowers the predicted impact force.

Two contact kinds are distinguished. A transient contact lets the struck
body part recoil, so the two-body reduced mass applies. A quasi-static
(clamping) contact pins the body part against a fixed structure; its mass is
treated as infinite and the reduced mass collapses to the robot's effective
mass alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Union

from . import dynamics

# marker for an immobilized (clamped) body part: infinite mass, zero inverse
CONSTRAINED = math.inf

TRANSIENT = "transient"
QUASI_STATIC = "quasi_static_constrained"
CONTACT_KINDS = (TRANSIENT, QUASI_STATIC)

# force-prediction variants: standard limits ignore the cover, modified ones
# subtract its stored energy; quasi-static variants clamp the body part
TS_QUASISTATIC = "ts-quasistatic"
TS_TRANSIENT = "ts-transient"
MOD_QUASISTATIC = "mod-quasistatic"
MOD_TRANSIENT = "mod-transient"
VARIANTS = (TS_QUASISTATIC, TS_TRANSIENT, MOD_QUASISTATIC, MOD_TRANSIENT)


class ModelError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class BodyRegionModel:
    """Spring constant, force limits, and mass of one human body region.

    `body_mass` may be CONSTRAINED (math.inf) for a region that is pinned and
    cannot recoil; transient scenarios require a finite mass.
    """

    name: str
    spring_constant: float
    max_force_transient: float
    max_force_quasistatic: float
    body_mass: float = CONSTRAINED

    def __post_init__(self):
        if not self.spring_constant > 0.0:
            raise ModelError("body spring constant must be positive")
        if not self.max_force_quasistatic > 0.0:
            raise ModelError("quasi-static force limit must be positive")
        if self.max_force_transient < self.max_force_quasistatic:
            raise ModelError(
                "transient force limit must be at least the quasi-static limit"
            )
        if not self.body_mass > 0.0:
            raise ModelError("body mass must be positive (or CONSTRAINED)")


def hand_back_region(body_mass: float = 5.3) -> BodyRegionModel:
    """Back of the non-dominant hand: 75 kN/m, 280 N transient / 140 N clamping.

    The default 5.3 kg stands in for the struck mass on a sliding transient
    rig; pass CONSTRAINED for a pinned hand.
    """
    return BodyRegionModel(
        name="hand-back",
        spring_constant=75_000.0,
        max_force_transient=280.0,
        max_force_quasistatic=140.0,
        body_mass=body_mass,
    )


@dataclass(frozen=True)
class SkinModel:
    """Soft protective cover: linear spring until fully flattened.

    An absent cover is any model with spring_constant * thickness^2 == 0.
    `activation_threshold_force` is informational (the contact force at which
    a sensorized cover trips); it does not enter the energy balance.
    """

    spring_constant: float = 0.0
    compressible_thickness: float = 0.0
    activation_threshold_force: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.spring_constant < 0.0 or self.compressible_thickness < 0.0:
            raise ModelError("skin stiffness and thickness must be nonnegative")

    @classmethod
    def none(cls) -> "SkinModel":
        return cls(label="none")

    @property
    def is_present(self) -> bool:
        return self.spring_constant * self.compressible_thickness**2 > 0.0

    @property
    def energy_term(self) -> float:
        """d^2 k_s, twice the energy the cover stores at full compression."""
        return self.compressible_thickness**2 * self.spring_constant


def soft_pad() -> SkinModel:
    """Representative sensorized pad at its impact point: 3 kN/m, 16 mm travel."""
    return SkinModel(
        spring_constant=3_000.0,
        compressible_thickness=0.016,
        activation_threshold_force=2.0,
        label="module-pad",
    )


@dataclass(frozen=True)
class StaticEffectiveMass:
    """Datasheet-style effective mass: half the moving mass plus the payload."""

    moving_mass: float
    payload: float = 0.0

    def resolve(self) -> float:
        return static_effective_mass(self.moving_mass, self.payload)


@dataclass(frozen=True)
class ExplicitEffectiveMass:
    """Directly supplied effective mass in kg."""

    mass: float

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ModelError("effective mass must be positive")

    def resolve(self) -> float:
        return self.mass


@dataclass(frozen=True)
class ChainEffectiveMass:
    """Configuration- and direction-dependent effective mass of a chain."""

    chain: dynamics.KinematicChain
    q: tuple
    point: tuple
    direction: tuple

    def resolve(self) -> float:
        return dynamics.effective_mass(self.chain, self.q, self.point, self.direction)


EffectiveMassSpec = Union[StaticEffectiveMass, ExplicitEffectiveMass, ChainEffectiveMass]


@dataclass(frozen=True)
class ContactScenario:
    """A contact kind plus the body region, cover, and robot mass involved."""

    kind: str
    body: BodyRegionModel
    skin: SkinModel
    robot: EffectiveMassSpec

    def __post_init__(self):
        if self.kind not in CONTACT_KINDS:
            raise ModelError(f"unknown contact kind {self.kind!r}")
        if self.kind == TRANSIENT and math.isinf(self.body.body_mass):
            raise ModelError("transient contact requires a finite body mass")

    def robot_mass(self) -> float:
        return self.robot.resolve()

    def reduced_mass(self) -> float:
        """Two-body reduced mass; collapses to the robot mass when clamping."""
        if self.kind == QUASI_STATIC:
            return reduced_mass(self.robot_mass(), CONSTRAINED)
        return reduced_mass(self.robot_mass(), self.body.body_mass)


def static_effective_mass(moving_mass: float, payload: float = 0.0) -> float:
    """Effective robot mass from the static rule M/2 + payload."""
    if not moving_mass > 0.0:
        raise ModelError("moving mass must be positive")
    if payload < 0.0:
        raise ModelError("payload must be nonnegative")
    return moving_mass / 2.0 + payload


def reduced_mass(robot_mass: float, body_mass: float = CONSTRAINED) -> float:
    """Reduced mass of the two-body collision, (1/m_R + 1/m_H)^-1.

    A CONSTRAINED (infinite) body mass contributes zero inverse mass, so the
    result equals the robot mass.
    """
    if not robot_mass > 0.0:
        raise ModelError("robot mass must be positive")
    if not body_mass > 0.0:
        raise ModelError("body mass must be positive (or CONSTRAINED)")
    if math.isinf(body_mass):
        return robot_mass
    return 1.0 / (1.0 / robot_mass + 1.0 / body_mass)


def permissible_velocity(
    scenario: ContactScenario, f_max: float, with_cover: bool = True
) -> float:
    """Largest velocity whose predicted impact force stays within f_max.

    Without the cover extension this is f_max / sqrt(k mu). With it, the
    energy the cover absorbs before flattening adds d^2 k_s / mu under the
    root, which can only increase the result.
    """
    if not f_max > 0.0:
        raise ModelError("force limit must be positive")
    mu = scenario.reduced_mass()
    v_sq = f_max**2 / (scenario.body.spring_constant * mu)
    if with_cover:
        v_sq += scenario.skin.energy_term / mu
    return math.sqrt(v_sq)


def _variant_mu(scenario: ContactScenario, variant: str) -> float:
    if variant in (TS_QUASISTATIC, MOD_QUASISTATIC):
        return reduced_mass(scenario.robot_mass(), CONSTRAINED)
    if math.isinf(scenario.body.body_mass):
        raise ModelError("transient variant requires a finite body mass")
    return reduced_mass(scenario.robot_mass(), scenario.body.body_mass)


def predicted_impact_force(
    scenario: ContactScenario,
    velocity: float,
    variant: str,
    actual_compression: bool = False,
) -> float | None:
    """Impact force the spring model predicts at a given approach velocity.

    By default the cover is modelled at its full travel, so the mod-*
    variants return None ("no prediction") when the cover would absorb the
    entire kinetic energy before flattening, i.e. v^2 < d^2 k_s / mu.

    `actual_compression=True` switches the mod-* variants to the exact
    series model in that regime: while the peak stays at or below the
    cover's flattening force k_s d, both springs share the load and
    F = v sqrt(k_ser mu) with k_ser = k_s k / (k_s + k). The two branches
    meet continuously at F = k_s d. The hook is off by default; the ts-*
    variants ignore the cover either way.
    """
    if variant not in VARIANTS:
        raise ModelError(f"unknown variant {variant!r}")
    if velocity < 0.0:
        raise ModelError("velocity must be nonnegative")
    mu = _variant_mu(scenario, variant)
    skin = scenario.skin
    k = scenario.body.spring_constant
    modified = variant in (MOD_QUASISTATIC, MOD_TRANSIENT)
    if modified and actual_compression and skin.is_present:
        k_series = skin.spring_constant * k / (skin.spring_constant + k)
        series_force = velocity * math.sqrt(k_series * mu)
        if series_force <= skin.spring_constant * skin.compressible_thickness:
            return series_force
    cover = skin.energy_term if modified else 0.0
    v_sq = velocity**2 - cover / mu
    if v_sq < 0.0:
        return None
    return math.sqrt(v_sq * k * mu)


@dataclass(frozen=True)
class EnergyBalance:
    """Kinetic energy split between cover and body-region springs, in J."""

    kinetic: float
    body_spring: float
    skin_spring: float


def spring_energy_balance(scenario: ContactScenario, velocity: float) -> EnergyBalance:
    """Where the kinetic energy ends up at peak compression.

    The cover takes up to d^2 k_s / 2; whatever remains loads the body-region
    spring. Components sum to the kinetic term exactly.
    """
    if velocity < 0.0:
        raise ModelError("velocity must be nonnegative")
    mu = scenario.reduced_mass()
    kinetic = 0.5 * mu * velocity**2
    skin = min(kinetic, 0.5 * scenario.skin.energy_term)
    return EnergyBalance(kinetic=kinetic, body_spring=kinetic - skin, skin_spring=skin)


def display_round(value: float, decimals: int = 2) -> float:
    """Round half away from zero, the convention for reported velocities."""
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))
