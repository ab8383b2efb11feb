"""Loaders for the shared TOML configuration files.

One file family covers the whole toolkit: kinematic chains, contact
scenarios, simulation scenarios, and report settings. Every quantity is SI.
Schemas are documented in the package README; each file declares its kind in
a `format` key so mistakes fail early with the offending path in the
message.
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import collision_sim, dynamics, pfl_model

CHAIN_FORMAT = "pflkit-chain/1"
SCENARIO_FORMAT = "pflkit-scenario/1"
SIM_FORMAT = "pflkit-sim/1"
REPORT_FORMAT = "pflkit-report/1"


class ConfigError(ValueError):
    """Unreadable or invalid configuration file."""


def _load_toml(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _expect_format(path, data: dict, expected: str) -> None:
    declared = data.get("format")
    if declared != expected:
        raise ConfigError(
            f"{path}: expected format {expected!r}, found {declared!r}"
        )


def _get(path, table: dict, key: str, types, where: str = ""):
    if key not in table:
        raise ConfigError(f"{path}: missing key {where + key!r}")
    value = table[key]
    if types is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{path}: key {where + key!r} has the wrong type")
    return value


def _vector(path, table: dict, key: str, length: int, where: str = ""):
    value = _get(path, table, key, list, where)
    if len(value) != length or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"{path}: {where + key!r} must be {length} numbers")
    return [float(v) for v in value]


def load_chain(path) -> dynamics.KinematicChain:
    """Read a kinematic chain description."""
    data = _load_toml(path)
    _expect_format(path, data, CHAIN_FORMAT)
    raw_joints = data.get("joint")
    if not isinstance(raw_joints, list) or not raw_joints:
        raise ConfigError(f"{path}: needs at least one [[joint]] table")
    joints = []
    for i, jt in enumerate(raw_joints):
        where = f"joint[{i}]."
        kind = _get(path, jt, "kind", str, where)
        axis = _vector(path, jt, "axis", 3, where)
        translation = _vector(path, jt, "origin_translation", 3, where) if "origin_translation" in jt else [0.0, 0.0, 0.0]
        rpy = _vector(path, jt, "origin_rpy", 3, where) if "origin_rpy" in jt else [0.0, 0.0, 0.0]
        origin = dynamics.rigid_transform(
            rotation=dynamics.rpy_matrix(*rpy), translation=translation
        )
        if "link_inertia" in jt:
            rows = _get(path, jt, "link_inertia", list, where)
            if len(rows) != 3:
                raise ConfigError(f"{path}: {where}link_inertia needs 3 rows")
            inertia = [
                [float(v) for v in row] for row in rows
            ]
        else:
            diag = _vector(path, jt, "link_inertia_diag", 3, where)
            inertia = [
                [diag[0], 0.0, 0.0],
                [0.0, diag[1], 0.0],
                [0.0, 0.0, diag[2]],
            ]
        try:
            joints.append(
                dynamics.JointSpec(
                    kind=kind,
                    axis=axis,
                    origin=origin,
                    link_mass=_get(path, jt, "link_mass", float, where),
                    link_com=_vector(path, jt, "link_com", 3, where),
                    link_inertia=inertia,
                )
            )
        except dynamics.ChainError as exc:
            raise ConfigError(f"{path}: {where[:-1]}: {exc}") from None
    base = dynamics.rigid_transform(
        rotation=dynamics.rpy_matrix(*data.get("base_rpy", [0.0, 0.0, 0.0])),
        translation=data.get("base_translation", [0.0, 0.0, 0.0]),
    )
    try:
        return dynamics.KinematicChain(joints=tuple(joints), base_frame=base)
    except dynamics.ChainError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _body_from(path, table: dict) -> pfl_model.BodyRegionModel:
    mass = table.get("body_mass", "constrained")
    if isinstance(mass, str):
        if mass != "constrained":
            raise ConfigError(
                f"{path}: body_mass must be a number or 'constrained'"
            )
        mass = pfl_model.CONSTRAINED
    try:
        return pfl_model.BodyRegionModel(
            name=table.get("name", "body-region"),
            spring_constant=_get(path, table, "spring_constant", float, "body."),
            max_force_transient=_get(path, table, "max_force_transient", float, "body."),
            max_force_quasistatic=_get(path, table, "max_force_quasistatic", float, "body."),
            body_mass=float(mass),
        )
    except pfl_model.ModelError as exc:
        raise ConfigError(f"{path}: body: {exc}") from None


def _skin_from(path, table: dict | None) -> pfl_model.SkinModel:
    if table is None:
        return pfl_model.SkinModel.none()
    try:
        return pfl_model.SkinModel(
            spring_constant=_get(path, table, "spring_constant", float, "skin."),
            compressible_thickness=_get(
                path, table, "compressible_thickness", float, "skin."
            ),
            activation_threshold_force=table.get("activation_threshold_force"),
            label=table.get("label", ""),
        )
    except pfl_model.ModelError as exc:
        raise ConfigError(f"{path}: skin: {exc}") from None


def _robot_from(path, table: dict) -> pfl_model.EffectiveMassSpec:
    if "effective_mass" in table:
        return pfl_model.ExplicitEffectiveMass(
            _get(path, table, "effective_mass", float, "robot.")
        )
    if "moving_mass" in table:
        return pfl_model.StaticEffectiveMass(
            moving_mass=_get(path, table, "moving_mass", float, "robot."),
            payload=float(table.get("payload", 0.0)),
        )
    if "chain" in table:
        chain_path = Path(path).parent / _get(path, table, "chain", str, "robot.")
        chain = load_chain(chain_path)
        return pfl_model.ChainEffectiveMass(
            chain=chain,
            q=tuple(_vector(path, table, "q", len(chain), "robot.")),
            point=tuple(_vector(path, table, "point", 3, "robot.")),
            direction=tuple(_vector(path, table, "direction", 3, "robot.")),
        )
    raise ConfigError(
        f"{path}: [robot] needs effective_mass, moving_mass, or chain"
    )


def load_contact_scenario(path) -> pfl_model.ContactScenario:
    """Read a contact scenario (kind, body region, cover, robot mass)."""
    data = _load_toml(path)
    _expect_format(path, data, SCENARIO_FORMAT)
    kind = _get(path, data, "kind", str)
    if "body" not in data:
        raise ConfigError(f"{path}: missing [body] table")
    if "robot" not in data:
        raise ConfigError(f"{path}: missing [robot] table")
    try:
        return pfl_model.ContactScenario(
            kind=kind,
            body=_body_from(path, data["body"]),
            skin=_skin_from(path, data.get("skin")),
            robot=_robot_from(path, data["robot"]),
        )
    except pfl_model.ModelError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_sim_scenario(path) -> collision_sim.SimScenario:
    """Read a simulation scenario."""
    data = _load_toml(path)
    _expect_format(path, data, SIM_FORMAT)
    reaction_table = data.get("reaction")
    if reaction_table is None:
        reaction = collision_sim.ReactionModel()
    else:
        kwargs = dict(
            kind=_get(path, reaction_table, "kind", str, "reaction."),
            detection_force=float(reaction_table.get("detection_force", 20.0)),
            detection_source=reaction_table.get(
                "detection_source", collision_sim.DETECT_ROBOT
            ),
            reaction_delay=float(reaction_table.get("reaction_delay", 0.0)),
            deceleration=float(reaction_table.get("deceleration", 0.0)),
            retract_speed=float(reaction_table.get("retract_speed", 0.0)),
            oscillation_frequency=float(
                reaction_table.get("oscillation_frequency", 0.0)
            ),
            oscillation_damping=float(reaction_table.get("oscillation_damping", 0.0)),
        )
        try:
            reaction = collision_sim.ReactionModel(**kwargs)
        except collision_sim.SimError as exc:
            raise ConfigError(f"{path}: reaction: {exc}") from None
    friction = None
    if "friction" in data:
        try:
            friction = collision_sim.Friction(
                force=_get(path, data["friction"], "force", float, "friction."),
                normal_force=_get(
                    path, data["friction"], "normal_force", float, "friction."
                ),
            )
        except collision_sim.SimError as exc:
            raise ConfigError(f"{path}: friction: {exc}") from None
    try:
        return collision_sim.SimScenario(
            reduced_mass=_get(path, data, "reduced_mass", float),
            initial_velocity=_get(path, data, "initial_velocity", float),
            body_spring_constant=_get(path, data, "body_spring_constant", float),
            skin=_skin_from(path, data.get("skin")),
            reaction=reaction,
            friction=friction,
            timestep=float(data.get("timestep", 1e-5)),
            max_time=float(data.get("max_time", 2.0)),
            output_rate=float(data.get("output_rate", 1000.0)),
            onset_threshold=float(data.get("onset_threshold", 20.0)),
        )
    except collision_sim.SimError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_report_config(path) -> dict:
    """Read report settings: limits, reference scenarios, baselines.

    Returns a dict with keys limit_first, limit_second, references (robot ->
    ContactScenario), baselines (robot -> (robot, skin, safety)), and
    aggregation.
    """
    data = _load_toml(path)
    _expect_format(path, data, REPORT_FORMAT)
    if "limits" not in data:
        raise ConfigError(f"{path}: missing [limits] table")
    body = _body_from(path, data["limits"])
    skin = _skin_from(path, data.get("skin"))
    references = {}
    for robot, mass in data.get("robots", {}).items():
        if not isinstance(mass, (int, float)) or isinstance(mass, bool):
            raise ConfigError(f"{path}: robots.{robot} must be a mass in kg")
        references[robot] = pfl_model.ContactScenario(
            kind=pfl_model.QUASI_STATIC,
            body=body,
            skin=skin,
            robot=pfl_model.ExplicitEffectiveMass(float(mass)),
        )
    baselines = {}
    for robot, table in data.get("baselines", {}).items():
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: baselines.{robot} must be a table")
        baselines[robot] = (
            robot,
            table.get("skin_setting", "none"),
            table.get("safety_setting", ""),
        )
    aggregation = data.get("aggregation", "worst")
    if aggregation not in ("worst", "mean"):
        raise ConfigError(f"{path}: aggregation must be 'worst' or 'mean'")
    return {
        "limit_first": body.max_force_transient,
        "limit_second": body.max_force_quasistatic,
        "body": body,
        "skin": skin,
        "references": references,
        "baselines": baselines,
        "aggregation": aggregation,
    }
