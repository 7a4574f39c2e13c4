"""Coil field models and magnetic loading of the embedded magnets.

The onboard coils are modeled as point dipoles whose moments are
calibrated against bench field/force measurements.  The magnetized
material responds with a body force density (1/mu0) Br . grad(Ba) and a
body couple density (1/mu0) Br x Ba; both are lumped per leg over the
magnet stack volume.  A Biot-Savart loop quadrature is included as an
independent check of the dipole approximation.

All quantities are SI; positions passed to the field functions live in
the same frame as the coil's ``center_offset`` (the chassis frame).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

# Permeability of free space (T*m/A)
MU_0: float = 4.0 * np.pi * 1e-7

# Dipole evaluation closer than this to the coil center is rejected; the
# physical coil-magnet air gap is larger in every scenario.
SINGULARITY_RADIUS: float = 1e-3

# Biot-Savart evaluation guard: distance to the wire itself.
_WIRE_GUARD: float = 1e-4


class SingularFieldError(ValueError):
    """Field requested too close to a source for the model to be valid."""


def _as_vec3(v) -> NDArray[np.float64]:
    out = np.asarray(v, dtype=np.float64)
    if out.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {out.shape}")
    return out


@dataclass(frozen=True)
class CoilSpec:
    """One onboard electromagnet, reduced to a calibrated point dipole.

    Attributes:
        center_offset: Coil center in the chassis frame, metres.  The
            third (lateral) component is what the steering gearbox moves.
        axis: Unit dipole axis in the chassis frame.
        dipole_moment_max: Moment at full drive duty, A*m^2.
        mass: Coil mass, kg.
        label: "front" (gearbox side) or "back".
    """

    center_offset: NDArray[np.float64]
    axis: NDArray[np.float64]
    dipole_moment_max: float
    mass: float
    label: str

    def __post_init__(self):
        object.__setattr__(self, "center_offset", _as_vec3(self.center_offset))
        axis = _as_vec3(self.axis)
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"coil axis must be unit length, |axis| = {norm}")
        object.__setattr__(self, "axis", axis)
        if self.dipole_moment_max <= 0.0:
            raise ValueError("dipole_moment_max must be positive")
        if self.label not in ("front", "back"):
            raise ValueError(f"unknown coil label {self.label!r}")


@dataclass
class DriveState:
    """Signed duty per coil: H-bridge direction times PWM fraction."""

    duty_front: float = 0.0
    duty_back: float = 0.0

    def __post_init__(self):
        self.duty_front = float(min(1.0, max(-1.0, self.duty_front)))
        self.duty_back = float(min(1.0, max(-1.0, self.duty_back)))

    def for_coil(self, label: str) -> float:
        return self.duty_front if label == "front" else self.duty_back


@dataclass(frozen=True)
class FieldSample:
    """Applied field vector at a point, tesla."""

    b: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "b", _as_vec3(self.b))


@dataclass(frozen=True)
class FieldGradient:
    """Spatial gradient of the applied field, grad[i, j] = dB_i/dx_j."""

    grad: NDArray[np.float64]

    def __post_init__(self):
        g = np.asarray(self.grad, dtype=np.float64)
        if g.shape != (3, 3):
            raise ValueError(f"expected a 3x3 tensor, got shape {g.shape}")
        object.__setattr__(self, "grad", g)


@dataclass(frozen=True)
class MagnetElement:
    """Lumped permanent-magnet stack attached to one body node.

    ``br`` is the remanent field vector (tesla) expressed in the same
    frame as the coil specs; ``volume`` is the total stack volume.
    """

    br: NDArray[np.float64]
    volume: float
    node_index: int
    label: str

    def __post_init__(self):
        object.__setattr__(self, "br", _as_vec3(self.br))
        if self.volume <= 0.0:
            raise ValueError("magnet volume must be positive")


@dataclass(frozen=True)
class WrenchDensity:
    """Force (N/m^3) and couple (N*m/m^3) densities on magnetized material."""

    f: NDArray[np.float64]
    m: NDArray[np.float64]


# Paper-default magnet stack: nine disc magnets per leg.
MAGNET_REMANENCE: float = 0.125           # T
MAGNET_DIAMETER: float = 5e-3             # m
MAGNET_THICKNESS: float = 1.7e-3          # m
MAGNETS_PER_STACK: int = 9


def magnet_stack_volume(n_magnets: int = MAGNETS_PER_STACK) -> float:
    """Total volume of a stack of the standard disc magnets, m^3."""
    return n_magnets * np.pi * (MAGNET_DIAMETER / 2.0) ** 2 * MAGNET_THICKNESS


def coil_field(coil: CoilSpec, duty: float, point) -> FieldSample:
    """Applied field of one coil at a point, point-dipole model.

    B(r) = mu0/(4 pi |r|^3) * (3 (m . rhat) rhat - m), with the moment
    m = duty * dipole_moment_max * axis.  The field direction flips with
    the sign of the duty.

    Args:
        coil: Coil description.
        duty: Signed drive duty in [-1, 1].
        point: Evaluation point in the chassis frame, metres.

    Returns:
        FieldSample at the point.

    Raises:
        SingularFieldError: If the point is within 1 mm of the coil center.
    """
    p = _as_vec3(point)
    r = p - coil.center_offset
    dist = float(np.linalg.norm(r))
    if dist < SINGULARITY_RADIUS:
        raise SingularFieldError(
            f"field evaluation {dist * 1e3:.3f} mm from coil center"
        )
    m = duty * coil.dipole_moment_max * coil.axis
    rhat = r / dist
    b = MU_0 / (4.0 * np.pi * dist**3) * (3.0 * np.dot(m, rhat) * rhat - m)
    return FieldSample(b=b)


def coil_field_gradient(coil: CoilSpec, duty: float, point) -> FieldGradient:
    """Analytic gradient tensor of the coil dipole field.

    grad[i, j] = dB_i/dx_j; symmetric and traceless away from the source
    (curl-free, divergence-free field).
    """
    p = _as_vec3(point)
    r = p - coil.center_offset
    dist = float(np.linalg.norm(r))
    if dist < SINGULARITY_RADIUS:
        raise SingularFieldError(
            f"gradient evaluation {dist * 1e3:.3f} mm from coil center"
        )
    m = duty * coil.dipole_moment_max * coil.axis
    n = r / dist
    mn = float(np.dot(m, n))
    eye = np.eye(3)
    g = (3.0 * MU_0 / (4.0 * np.pi * dist**4)) * (
        np.outer(m, n) + np.outer(n, m) + mn * (eye - 5.0 * np.outer(n, n))
    )
    return FieldGradient(grad=g)


def body_force_density(br, grad: FieldGradient) -> NDArray[np.float64]:
    """Force per unit volume on magnetized material: (1/mu0) Br . grad(Ba).

    Component form: f_j = (1/mu0) sum_i br_i grad[i, j].  Vanishes exactly
    in a uniform applied field.
    """
    return _as_vec3(br) @ grad.grad / MU_0


def body_couple_density(br, ba: FieldSample) -> NDArray[np.float64]:
    """Couple per unit volume on magnetized material: (1/mu0) Br x Ba."""
    return np.cross(_as_vec3(br), ba.b) / MU_0


def magnet_wrench(
    magnet: MagnetElement,
    coils: list[CoilSpec],
    drive: DriveState,
    magnet_position,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Lumped force and torque on a magnet stack from all coils.

    Superposes every coil's force and couple densities at the magnet
    position and scales by the stack volume.

    Returns:
        (force [N], torque [N*m]) in the chassis frame.

    Raises:
        SingularFieldError: If the magnet sits inside any coil's guard
            radius.
    """
    pos = _as_vec3(magnet_position)
    force = np.zeros(3)
    torque = np.zeros(3)
    for coil in coils:
        duty = drive.for_coil(coil.label)
        grad = coil_field_gradient(coil, duty, pos)
        ba = coil_field(coil, duty, pos)
        force += body_force_density(magnet.br, grad)
        torque += body_couple_density(magnet.br, ba)
    return magnet.volume * force, magnet.volume * torque


def biot_savart_loop_field(
    loop_radius: float,
    current_turns: float,
    center,
    axis,
    point,
    n_segments: int = 720,
) -> FieldSample:
    """Field of a circular current loop by Biot-Savart quadrature.

    Midpoint quadrature of mu0 I/(4 pi) * integral dl x r / |r|^3 over the
    loop; serves as the independent check of the dipole coil model.

    Args:
        loop_radius: Loop radius, m.
        current_turns: Ampere-turns N*I.
        center: Loop center.
        axis: Unit normal of the loop plane.
        point: Evaluation point.
        n_segments: Quadrature segments (>= 360).
    """
    if n_segments < 360:
        raise ValueError("need at least 360 quadrature segments")
    c = _as_vec3(center)
    a = _as_vec3(axis)
    a = a / np.linalg.norm(a)
    p = _as_vec3(point)

    # Orthonormal basis (u, v) spanning the loop plane.
    seed = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(a, seed)
    u /= np.linalg.norm(u)
    v = np.cross(a, u)

    phi = (np.arange(n_segments) + 0.5) * (2.0 * np.pi / n_segments)
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    pts = c + loop_radius * (np.outer(cos_p, u) + np.outer(sin_p, v))
    dl = (2.0 * np.pi * loop_radius / n_segments) * (
        -np.outer(sin_p, u) + np.outer(cos_p, v)
    )
    r = p - pts
    dist = np.linalg.norm(r, axis=1)
    if float(dist.min()) < _WIRE_GUARD:
        raise SingularFieldError("evaluation point on the loop wire")
    integrand = np.cross(dl, r) / dist[:, None] ** 3
    b = MU_0 * current_turns / (4.0 * np.pi) * integrand.sum(axis=0)
    return FieldSample(b=b)


def calibrate_coil_moment(target_field: float, reference_distance: float) -> float:
    """Dipole moment reproducing a measured on-axis field strength.

    On the axis, |B| = mu0 m / (2 pi r^3); inverting gives the moment that
    matches the bench measurement at the reference distance.
    """
    if target_field <= 0.0:
        raise ValueError("target field must be positive")
    if reference_distance < 2e-3:
        raise ValueError("reference distance must be at least 2 mm")
    return 2.0 * np.pi * reference_distance**3 * target_field / MU_0


def reference_gap_for_force(
    target_field: float, target_force: float, magnet: MagnetElement
) -> float:
    """Coil-magnet gap consistent with paired field/force measurements.

    With the magnet stack on the coil axis and its remanence aligned to
    the axis, |F| = 3 V |Br| m / (2 pi r^4) and |B| = mu0 m / (2 pi r^3),
    so the measured pair (B, F) fixes the gap: r = 3 V |Br| B / (mu0 F).
    """
    if target_field <= 0.0 or target_force <= 0.0:
        raise ValueError("field and force targets must be positive")
    br_mag = float(np.linalg.norm(magnet.br))
    return 3.0 * magnet.volume * br_mag * target_field / (MU_0 * target_force)
