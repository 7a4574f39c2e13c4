"""Ground contact, water loads, and payload attachment.

Ground contact is a penalty normal force with direction-dependent
(anisotropic) Coulomb friction at the shoe nodes: the bristled shoes
slide forward more easily than backward, which is what rectifies the
body oscillation into net crawling.  Two tangential laws are provided:

* ``contact_forces`` -- the velocity-regularized (tanh) law.  It is a
  pure function of the instantaneous state and is what the documented
  friction properties hold for.
* ``contact_forces_sticky`` -- the same normal model with an anchored
  bristle (elastoplastic) tangential law that holds static loads without
  the slow creep inherent to any purely velocity-based regularization.
  The time stepper integrates with this one; a standing robot genuinely
  stands still.

Water applies buoyancy at the foam-block node, quadratic normal drag on
submerged segments, and plate drag at the submerged shoes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .body import GRAVITY, BodyMesh, BodyState, _check_state
from .body import with_chassis_payload, with_towed_inertia

# Slip-velocity scale of the tanh regularization, m/s.
V_EPS: float = 1e-3

MAX_PAYLOAD_MASS: float = 0.2  # kg, demonstrated envelope

# Landing on the bristled shoes is lossy: approach damping runs at this
# multiple of critical.
CONTACT_DAMPING_FACTOR: float = 2.0

# Real surfaces are not uniform: friction varies a few percent over
# centimetre scales, which also breaks the phase-locked limit cycles a
# perfectly periodic drive would otherwise latch onto.  The texture is a
# fixed sum of incommensurate waves, phase-shifted by the run seed.
MU_TEXTURE_AMP: float = 0.04
_TEXTURE_WAVES = ((730.0, 0.0), (1170.0, 2.1), (1910.0, 4.4))  # rad/m, phase


def mu_texture(x: float, seed: int = 0) -> float:
    """Multiplicative friction variation at position x, about 1.0."""
    out = 0.0
    for k, phi in _TEXTURE_WAVES:
        out += np.sin(k * x + phi + 0.7 * seed)
    return 1.0 + MU_TEXTURE_AMP * out / len(_TEXTURE_WAVES)


# Bristle grip recovery: after a forward slide drags the bristle tips
# over the surface, the anisotropic backward grip needs this long under
# load, with the shoe near rest, to dig back in.  Backward slides (the
# digging direction) keep grip.
GRIP_RECOVERY_TIME: float = 0.111  # s
GRIP_QUIET_SPEED: float = 3.2e-2  # m/s; faster shoes cannot re-engage


class UnknownPresetError(ValueError):
    """Requested a surface preset that does not exist."""


@dataclass(frozen=True)
class SurfaceModel:
    """Flat walking surface with anisotropic friction.

    mu_forward applies when a shoe slides toward the robot heading,
    mu_backward against it; mu_backward >= mu_forward > 0.
    """

    name: str
    mu_forward: float
    mu_backward: float
    slope_deg: float = 0.0
    contact_stiffness: float = 5e3     # N/m
    contact_damping: float | None = None  # None: critical per node

    def __post_init__(self):
        if not 0.0 < self.mu_forward <= self.mu_backward:
            raise ValueError(
                "need mu_backward >= mu_forward > 0, got "
                f"{self.mu_forward}/{self.mu_backward}"
            )
        if self.contact_stiffness <= 0.0:
            raise ValueError("contact_stiffness must be positive")


@dataclass(frozen=True)
class WaterModel:
    """Still-water environment for surface swimming.

    The foam block is modeled as a cube of volume ``buoyancy_volume``
    mounted at the buoyancy node; its submerged fraction sets the lift.
    ``drag_coefficient`` scales the quadratic normal drag on submerged
    leg segments and shoe plates.
    """

    fluid_density: float = 1000.0      # kg/m^3
    drag_coefficient: float = 1.28     # flat-plate starting point
    leg_plate_area: float = 7e-4       # m^2 per shoe plate
    buoyancy_volume: float = 1.7e-4    # m^3
    waterline_height: float = 0.0      # m
    # Linear surge resistance of the float at the waterline, N*s/m: a
    # reduced-order stand-in for wave-making and three-dimensional
    # losses the sagittal model cannot resolve; calibrated.
    surge_drag: float = 4.0

    def __post_init__(self):
        for name in ("fluid_density", "drag_coefficient", "leg_plate_area",
                     "buoyancy_volume"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.surge_drag < 0.0:
            raise ValueError("surge_drag must be non-negative")

    @property
    def foam_height(self) -> float:
        return float(self.buoyancy_volume ** (1.0 / 3.0))

    def supports(self, total_mass: float) -> bool:
        """Floating condition: full submersion lifts the robot weight."""
        return self.fluid_density * self.buoyancy_volume >= total_mass


@dataclass(frozen=True)
class Payload:
    """Carried or towed cargo."""

    mass: float
    attachment: str = "on_chassis"      # "on_chassis" | "towed"
    tow_drag_area: float = 0.0

    def __post_init__(self):
        if self.mass < 0.0:
            raise ValueError("payload mass must be non-negative")
        if self.attachment not in ("on_chassis", "towed"):
            raise ValueError(f"unknown attachment {self.attachment!r}")


# Initial-guess friction pairs; calibration overwrites these through the
# parameter file (the source experiments report no coefficients).
_PRESETS: dict[str, tuple[float, float]] = {
    "plastic_table": (0.25, 0.6),
    "paper": (0.35, 0.8),
    "foam": (0.6, 1.2),
    "office_tile": (0.3, 0.7),
}


def surface_preset(name: str, slope_deg: float = 0.0) -> SurfaceModel:
    """Named surface with its current friction pair.

    Raises:
        UnknownPresetError: For names outside the preset set.
    """
    try:
        mu_f, mu_b = _PRESETS[name]
    except KeyError:
        raise UnknownPresetError(
            f"unknown surface preset {name!r}; known: {sorted(_PRESETS)}"
        ) from None
    return SurfaceModel(
        name=name, mu_forward=mu_f, mu_backward=mu_b, slope_deg=slope_deg
    )


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def _normal_forces(
    state: BodyState, mesh: BodyMesh, surface: SurfaceModel
) -> NDArray[np.float64]:
    """Penalty normal force per node (>= 0), zero when above the plane."""
    y = state.positions[:, 1]
    vy = state.velocities[:, 1]
    pen = -y
    k = surface.contact_stiffness
    if surface.contact_damping is None:
        c = CONTACT_DAMPING_FACTOR * 2.0 * np.sqrt(k * mesh.inertial_masses)
    else:
        c = surface.contact_damping
    n = k * pen + c * np.maximum(0.0, -vy)
    n[pen <= 0.0] = 0.0
    return np.maximum(n, 0.0)


def contact_forces(
    state: BodyState, mesh: BodyMesh, surface: SurfaceModel
) -> NDArray[np.float64]:
    """Ground reaction per node with tanh-regularized Coulomb friction.

    Every penetrating node takes the penalty normal force; the shoe nodes
    additionally take F_t = -mu(dir) N tanh(v_t / v_eps) with
    mu(dir) = mu_forward for forward slip, mu_backward for backward slip.
    """
    _check_state(mesh, state)
    n = _normal_forces(state, mesh, surface)
    forces = np.zeros_like(state.positions)
    forces[:, 1] = n
    for node in mesh.shoe_node_indices:
        if n[node] <= 0.0:
            continue
        vt = state.velocities[node, 0]
        mu = surface.mu_forward if vt > 0.0 else surface.mu_backward
        forces[node, 0] = -mu * n[node] * np.tanh(vt / V_EPS)
    return forces


@dataclass
class ContactAnchors:
    """Bristle anchor state per shoe node (front, back).

    ``engaged`` holds 0/1 validity flags and ``grip`` the recovered
    fraction of the backward (bristle) grip, both floats so the compiled
    stepping kernel can share the storage.
    """

    anchor_x: NDArray[np.float64]
    engaged: NDArray[np.float64]
    grip: NDArray[np.float64]

    @classmethod
    def fresh(cls) -> "ContactAnchors":
        return cls(anchor_x=np.zeros(2), engaged=np.zeros(2), grip=np.ones(2))

    def copy(self) -> "ContactAnchors":
        return ContactAnchors(
            self.anchor_x.copy(), self.engaged.copy(), self.grip.copy()
        )


def contact_forces_sticky(
    state: BodyState,
    mesh: BodyMesh,
    surface: SurfaceModel,
    anchors: ContactAnchors,
    dt: float = 1e-4,
    seed: int = 0,
) -> tuple[NDArray[np.float64], ContactAnchors]:
    """Ground reaction with anchored-bristle stick-slip friction.

    While the tangential demand stays inside the friction cone the shoe
    is held by a stiff spring-damper to its anchor point (true stick);
    when the demand exceeds mu(dir) N the anchor slides along so the
    force rides the cone (kinetic slip at exactly the Coulomb level).
    Anchors reset whenever the shoe leaves the ground.

    The backward coefficient carries the bristle grip state: a forward
    slide flattens the bristles (grip drops to zero) and grip recovers
    under load over GRIP_RECOVERY_TIME, so fast gaits anchor less well
    than slow ones.

    Returns the nodal forces and the updated anchors (input not mutated).
    """
    _check_state(mesh, state)
    n = _normal_forces(state, mesh, surface)
    forces = np.zeros_like(state.positions)
    forces[:, 1] = n
    out = anchors.copy()
    k_t = surface.contact_stiffness
    for slot, node in enumerate(mesh.shoe_node_indices):
        if n[node] <= 0.0:
            out.engaged[slot] = 0.0
            continue
        x = state.positions[node, 0]
        if not out.engaged[slot]:
            out.engaged[slot] = 1.0
            out.anchor_x[slot] = x
        c_t = CONTACT_DAMPING_FACTOR * 2.0 * np.sqrt(
            k_t * mesh.inertial_masses[node]
        )
        raw = -k_t * (x - out.anchor_x[slot]) - c_t * state.velocities[node, 0]
        # Bristles re-engage while the shoe rests; forward motion keeps
        # them flattened.
        if abs(state.velocities[node, 0]) < GRIP_QUIET_SPEED:
            out.grip[slot] = min(1.0, out.grip[slot] + dt / GRIP_RECOVERY_TIME)
        mu_b = surface.mu_forward + (
            surface.mu_backward - surface.mu_forward
        ) * out.grip[slot]
        tex = mu_texture(x, seed)
        # raw < 0 resists forward slip, so the forward coefficient caps it.
        cap = (surface.mu_forward if raw < 0.0 else mu_b) * tex * n[node]
        if abs(raw) > cap:
            ft = np.sign(raw) * cap
            out.anchor_x[slot] = x + (ft + c_t * state.velocities[node, 0]) / k_t
            if raw < 0.0:
                out.grip[slot] = 0.0   # forward slide flattens the bristles
        else:
            ft = raw
        forces[node, 0] = ft
    return forces, out


def hydro_forces(
    state: BodyState, mesh: BodyMesh, water: WaterModel
) -> NDArray[np.float64]:
    """Water loads: foam buoyancy, segment drag, shoe-plate drag.

    Buoyancy acts at the buoyancy node proportionally to the submerged
    fraction of the foam block.  Every submerged segment takes quadratic
    drag on the velocity component normal to itself; the shoe nodes take
    additional plate drag on their motion along the local surface normal.
    Drag opposes motion in both stroke directions, so net thrust can only
    come from time asymmetry of the gait.
    """
    _check_state(mesh, state)
    p = state.positions
    v = state.velocities
    rho = water.fluid_density
    cd = water.drag_coefficient
    wl = water.waterline_height
    forces = np.zeros_like(p)

    # Foam block: linear-ramp buoyancy plus linear heave damping (keeps
    # the bobbing mode from ringing; no damping along the swim direction).
    node = mesh.buoyancy_node_index
    h = water.foam_height
    depth = np.clip(wl - p[node, 1], 0.0, h)
    frac = depth / h
    forces[node, 1] += rho * GRAVITY * water.buoyancy_volume * frac
    k_heave = rho * GRAVITY * water.buoyancy_volume / h
    c_heave = np.sqrt(k_heave * mesh.total_mass)
    forces[node, 1] -= c_heave * v[node, 1]
    forces[node, 0] -= water.surge_drag * v[node, 0]

    # Segment drag on the shell strip.
    seg = p[1:] - p[:-1]
    length = np.linalg.norm(seg, axis=1)
    normal = np.column_stack([-seg[:, 1], seg[:, 0]]) / length[:, None]
    vmid = 0.5 * (v[1:] + v[:-1])
    vn = (vmid * normal).sum(axis=1)
    mid_y = 0.5 * (p[1:, 1] + p[:-1, 1])
    submerged = mid_y < wl
    strip_area = length * 35e-3  # shell strip is 35 mm wide out of plane
    fmag = np.where(submerged, -0.5 * rho * cd * strip_area * np.abs(vn) * vn, 0.0)
    fseg = fmag[:, None] * normal
    forces[:-1] += 0.5 * fseg
    forces[1:] += 0.5 * fseg

    # Shoe plates paddle along the local outward normal of the shell.
    for node in mesh.shoe_node_indices:
        if p[node, 1] >= wl:
            continue
        lo, hi = max(node - 1, 0), min(node + 1, mesh.n_nodes - 1)
        tangent = p[hi] - p[lo]
        tangent /= np.linalg.norm(tangent)
        n_out = np.array([tangent[1], -tangent[0]])
        if node == 0:
            n_out = -n_out
        vn_plate = float(v[node] @ n_out)
        fp = -0.5 * rho * cd * water.leg_plate_area * abs(vn_plate) * vn_plate
        forces[node] += fp * n_out

    # Towed cargo drag at the back shoe, both components.
    if mesh.tow_drag_area > 0.0:
        node = mesh.shoe_node_indices[1]
        if p[node, 1] < wl:
            speed = float(np.linalg.norm(v[node]))
            forces[node] -= 0.5 * rho * cd * mesh.tow_drag_area * speed * v[node]
    return forces


def apply_payload(mesh: BodyMesh, payload: Payload) -> BodyMesh:
    """Mesh carrying the payload; identity for zero mass.

    Raises:
        ValueError: For masses beyond the demonstrated 0.2 kg envelope.
    """
    if payload.mass > MAX_PAYLOAD_MASS:
        raise ValueError(
            f"payload {payload.mass * 1e3:.1f} g exceeds the "
            f"{MAX_PAYLOAD_MASS * 1e3:.0f} g envelope"
        )
    if payload.mass == 0.0:
        return mesh
    if payload.attachment == "on_chassis":
        return with_chassis_payload(mesh, payload.mass)
    return with_towed_inertia(mesh, payload.mass, payload.tow_drag_area)
