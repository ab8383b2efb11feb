"""Serial-manipulator kinematics and direction-dependent effective mass.

A chain is a minimal declarative list of joints. Each joint carries the rigid
transform from its parent link frame, the motion axis expressed in that frame,
and the inertial triple (mass, centre of mass, inertia tensor) of the link it
drives. No robot-description standard is assumed; URDF-style data converts
one to one.

Joint configurations are plain float vectors (rad for revolute joints, m for
prismatic ones) and impact directions are plain unit 3-vectors; both are
validated by the operations that consume them. All types are immutable after
construction and every operation is a pure function, so concurrent use needs
no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
JOINT_KINDS = (REVOLUTE, PRISMATIC)

# tolerance for "is a unit vector" checks on axes and directions
UNIT_TOL = 1e-9
# below this value of u' (J M^-1 J') u the contact point cannot move along u
# and the reflected inertia is reported as infinite
IMMOBILE_EPS = 1e-9


class ChainError(ValueError):
    """Invalid chain description, configuration, or inertial data."""


def rigid_transform(rotation=None, translation=None) -> np.ndarray:
    """Build a 4x4 homogeneous transform from a rotation and/or translation."""
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = np.asarray(rotation, dtype=float)
    if translation is not None:
        T[:3, 3] = np.asarray(translation, dtype=float)
    return T


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis (Rodrigues form)."""
    a = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation from roll-pitch-yaw (x, then y, then z, fixed axes)."""
    return (
        rotation_about_axis((0.0, 0.0, 1.0), yaw)
        @ rotation_about_axis((0.0, 1.0, 0.0), pitch)
        @ rotation_about_axis((1.0, 0.0, 0.0), roll)
    )


def _frozen_array(value, shape) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != shape:
        raise ChainError(f"expected array of shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


def _require_unit(vector, name: str) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    if v.shape != (3,):
        raise ChainError(f"{name} must be a 3-vector")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ChainError(f"{name} must be a unit vector (norm {norm:.12g})")
    return v


def _check_rigid(T: np.ndarray, name: str) -> None:
    R = T[:3, :3]
    if not np.allclose(R @ R.T, np.eye(3), atol=1e-8) or not np.allclose(
        T[3], (0.0, 0.0, 0.0, 1.0), atol=1e-12
    ):
        raise ChainError(f"{name} is not a rigid transform")


@dataclass(frozen=True)
class JointSpec:
    """One joint plus the inertial data of the link it drives.

    Attributes:
        kind: "revolute" or "prismatic"; selects the Jacobian column form.
        axis: unit motion axis in the parent link frame.
        origin: 4x4 rigid transform, parent link frame to joint frame.
        link_mass: link mass in kg, strictly positive.
        link_com: centre of mass in the link frame, m.
        link_inertia: 3x3 inertia tensor about the COM in the link frame,
            kg m^2; must be symmetric positive semidefinite.
    """

    kind: str
    axis: np.ndarray
    origin: np.ndarray
    link_mass: float
    link_com: np.ndarray
    link_inertia: np.ndarray

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ChainError(f"unknown joint kind {self.kind!r}")
        object.__setattr__(self, "axis", _frozen_array(self.axis, (3,)))
        _require_unit(self.axis, "joint axis")
        object.__setattr__(self, "origin", _frozen_array(self.origin, (4, 4)))
        _check_rigid(self.origin, "joint origin")
        if not self.link_mass > 0.0:
            raise ChainError(f"link mass must be positive, got {self.link_mass}")
        object.__setattr__(self, "link_com", _frozen_array(self.link_com, (3,)))
        inertia = _frozen_array(self.link_inertia, (3, 3))
        if not np.allclose(inertia, inertia.T, atol=1e-9):
            raise ChainError("link inertia tensor must be symmetric")
        eigvals = np.linalg.eigvalsh(inertia)
        if eigvals.min() < -1e-9:
            raise ChainError("link inertia tensor must be positive semidefinite")
        object.__setattr__(self, "link_inertia", inertia)


@dataclass(frozen=True)
class KinematicChain:
    """Serial chain: ordered joints plus a base frame in world coordinates."""

    joints: tuple[JointSpec, ...]
    base_frame: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) < 1:
            raise ChainError("chain needs at least one joint")
        base = np.eye(4) if self.base_frame is None else self.base_frame
        base = _frozen_array(base, (4, 4))
        _check_rigid(base, "base frame")
        object.__setattr__(self, "base_frame", base)

    def __len__(self) -> int:
        return len(self.joints)

    @property
    def total_mass(self) -> float:
        return sum(j.link_mass for j in self.joints)


def _check_q(chain: KinematicChain, q) -> np.ndarray:
    qv = np.asarray(q, dtype=float)
    if qv.shape != (len(chain),):
        raise ChainError(
            f"configuration length {qv.shape} does not match {len(chain)} joints"
        )
    return qv


def _joint_motion(spec: JointSpec, qi: float) -> np.ndarray:
    if spec.kind == REVOLUTE:
        return rigid_transform(rotation=rotation_about_axis(spec.axis, qi))
    return rigid_transform(translation=qi * spec.axis)


def forward_kinematics(chain: KinematicChain, q) -> list[np.ndarray]:
    """World pose of every link for configuration q.

    Frame i is the pose of link i after joint i has moved; composition follows
    joint order starting from the base frame.
    """
    qv = _check_q(chain, q)
    frames = []
    T = chain.base_frame
    for spec, qi in zip(chain.joints, qv):
        T = T @ spec.origin @ _joint_motion(spec, qi)
        frames.append(T)
    return frames


def geometric_jacobian(chain: KinematicChain, q, point, link: int | None = None) -> np.ndarray:
    """6xn geometric Jacobian of a world-frame point attached to a link.

    Rows 0-2 map joint rates to the linear velocity of `point`, rows 3-5 to
    the angular velocity of the carrying link. `link` selects which link the
    point rides on (default: the last); columns of joints beyond it are zero.
    """
    qv = _check_q(chain, q)
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise ChainError("point must be a world-frame 3-vector")
    n = len(chain)
    if link is None:
        link = n - 1
    if not 0 <= link < n:
        raise ChainError(f"link index {link} out of range for {n} joints")

    frames = forward_kinematics(chain, qv)
    J = np.zeros((6, n))
    T_parent = chain.base_frame
    for i, spec in enumerate(chain.joints):
        if i > link:
            break
        T_joint = T_parent @ spec.origin
        axis_world = T_joint[:3, :3] @ spec.axis
        if spec.kind == REVOLUTE:
            J[:3, i] = np.cross(axis_world, p - T_joint[:3, 3])
            J[3:, i] = axis_world
        else:
            J[:3, i] = axis_world
        T_parent = frames[i]
    return J


def joint_space_inertia(chain: KinematicChain, q) -> np.ndarray:
    """Joint-space inertia matrix, accumulated link by link.

    Built as the sum over links of Jv' m Jv + Jw' I Jw with the body Jacobians
    taken at each link's centre of mass and the inertia tensor rotated into
    world axes. Raises ChainError if the result is not positive definite,
    which signals inconsistent inertial parameters (or an exactly singular
    mechanism).
    """
    qv = _check_q(chain, q)
    frames = forward_kinematics(chain, qv)
    n = len(chain)
    M = np.zeros((n, n))
    for i, (spec, T) in enumerate(zip(chain.joints, frames)):
        R = T[:3, :3]
        com_world = R @ spec.link_com + T[:3, 3]
        Ji = geometric_jacobian(chain, qv, com_world, link=i)
        Jv, Jw = Ji[:3], Ji[3:]
        inertia_world = R @ spec.link_inertia @ R.T
        M += spec.link_mass * (Jv.T @ Jv) + Jw.T @ inertia_world @ Jw
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ChainError("joint-space inertia is not positive definite") from None
    return M


def effective_mass(chain: KinematicChain, q, point, direction) -> float:
    """Reflected inertia of the chain at a contact point along a direction.

    Inverts the task-space mobility u' (J M^-1 J') u built from the
    translational Jacobian at `point`. Returns math.inf when the point cannot
    move along `direction` (mobility below IMMOBILE_EPS), e.g. at a kinematic
    singularity aligned with the push.
    """
    u = _require_unit(direction, "direction")
    qv = _check_q(chain, q)
    Jv = geometric_jacobian(chain, qv, point)[:3]
    M = joint_space_inertia(chain, qv)
    mobility = float(u @ (Jv @ np.linalg.solve(M, Jv.T)) @ u)
    if mobility < IMMOBILE_EPS:
        return math.inf
    return 1.0 / mobility
