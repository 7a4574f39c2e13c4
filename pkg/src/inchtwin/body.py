"""Sagittal-plane discretization of the curved elastomer shell.

The body is a half-circular arc of point masses chained by linear axial
springs and angular springs with a naturally curved rest shape.  The
chassis electronics are lumped onto the top nodes, the magnet stacks onto
one node per leg.  Elastic forces are the exact negative gradient of
``elastic_energy`` plus rate-proportional element damping.

Coordinates: x forward (back leg to front leg), y up, metres.  The ground
plane lives at y = 0 in this frame; slopes enter through rotated gravity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

GRAVITY: float = 9.81

# Per-step clip on element damping decay exponents (see engine_kernel).
DAMPING_EXP_CAP = 1.0

# Fixed per-element Kelvin-Voigt loss (kills element-scale ringing); the
# calibrated damping knob acts on whole-body deformation instead.
ELEMENT_DAMPING_RATIO = 0.2

# Reference modal frequency at which ``damping_ratio`` is the loss ratio
# of the deformation damping, rad/s (the locomotion band).
DAMPING_REF_OMEGA = 2.0 * np.pi * 5.0

# Component masses, kg.  Battery and PCB are reported directly; the two
# coil masses live in magnetics but are lumped into the chassis here.
BATTERY_MASS: float = 26e-3
PCB_MASS: float = 10.64e-3
COIL_FRONT_MASS: float = 11.91e-3
COIL_BACK_MASS: float = 13.5e-3
TOTAL_ROBOT_MASS: float = 102.63e-3

# Leg-tip separation of the relaxed half-circular shell, m.
LEG_SPAN: float = 81.53e-3

# NdFeB magnet stack mass per leg (density ~7500 kg/m^3 over the stack
# volume); part of the non-electronics mass budget.
MAGNET_STACK_MASS: float = 2.25e-3

# 3D-printed bristled shoe, one per leg tip.
SHOE_MASS: float = 4e-3


@dataclass(frozen=True)
class MaterialParams:
    """Shell material and section properties.

    ``shell_width`` is the effective out-of-plane strip width used for
    the rectangular cross-section; the as-cast layers are 40-50 mm wide
    so 40 mm is the default, exposed for sensitivity studies.

    ``section_stiffen_factor`` multiplies the flat-strip EI to account
    for the transverse curvature of the half-cylindrical shell: a curved
    panel bent along its length engages membrane stretching and is far
    stiffer than the same material laid flat (a flat-strip EI of
    E w t^3/12 buckles under the robot's own weight, which the physical
    robot plainly does not).
    """

    youngs_modulus: float = 324_054.0   # Pa
    shell_thickness: float = 3e-3       # m
    shell_width: float = 40e-3          # m
    density_soft: float = 1100.0        # kg/m^3
    damping_ratio: float = 0.15
    section_stiffen_factor: float = 40.0

    def __post_init__(self):
        if self.youngs_modulus <= 0.0:
            raise ValueError("youngs_modulus must be positive")
        if not 0.0 < self.damping_ratio <= 1.0:
            raise ValueError("damping_ratio must lie in (0, 1]")
        if self.section_stiffen_factor < 1.0:
            raise ValueError("section_stiffen_factor must be >= 1")

    @property
    def axial_rigidity(self) -> float:
        """EA of the rectangular strip, N."""
        return self.youngs_modulus * self.shell_width * self.shell_thickness

    @property
    def bending_rigidity(self) -> float:
        """Effective EI of the curved shell section, N*m^2."""
        return (
            self.youngs_modulus
            * self.shell_width
            * self.shell_thickness**3
            / 12.0
            * self.section_stiffen_factor
        )


@dataclass(frozen=True)
class BodyMesh:
    """Static description of the discretized body.

    Axial element arrays are parallel: element e joins nodes
    (axial_i[e], axial_j[e]).  Bending elements are centered on interior
    nodes with arms to both neighbours.
    """

    rest_positions: NDArray[np.float64]      # (n, 2)
    node_masses: NDArray[np.float64]         # (n,)
    axial_i: NDArray[np.intp]
    axial_j: NDArray[np.intp]
    axial_rest_length: NDArray[np.float64]
    axial_stiffness: NDArray[np.float64]     # EA / L0 per element
    axial_damping: NDArray[np.float64]
    bend_center: NDArray[np.intp]            # interior node index per element
    bend_rest_angle: NDArray[np.float64]
    bend_stiffness: NDArray[np.float64]      # EI / Lbar per element
    bend_damping: NDArray[np.float64]
    chassis_node_indices: NDArray[np.intp]
    magnet_node_indices: tuple[int, int]     # (front, back)
    shoe_node_indices: tuple[int, int]       # (front, back)
    buoyancy_node_index: int
    damping_ratio: float
    node_inertia_extra: NDArray[np.float64] = field(default=None)  # type: ignore[assignment]
    tow_drag_area: float = 0.0

    def __post_init__(self):
        if self.node_inertia_extra is None:
            object.__setattr__(
                self, "node_inertia_extra", np.zeros(self.n_nodes)
            )

    @property
    def n_nodes(self) -> int:
        return len(self.rest_positions)

    @property
    def total_mass(self) -> float:
        return float(self.node_masses.sum())

    @property
    def inertial_masses(self) -> NDArray[np.float64]:
        """Masses used for acceleration (towed cargo adds inertia only)."""
        return self.node_masses + self.node_inertia_extra


@dataclass
class BodyState:
    """Dynamic snapshot: node positions/velocities and sim time."""

    positions: NDArray[np.float64]   # (n, 2)
    velocities: NDArray[np.float64]  # (n, 2)
    time: float = 0.0

    def copy(self) -> "BodyState":
        return BodyState(self.positions.copy(), self.velocities.copy(), self.time)


def _check_state(mesh: BodyMesh, state: BodyState) -> None:
    if state.positions.shape != (mesh.n_nodes, 2):
        raise ValueError(
            f"state has {state.positions.shape} positions, mesh has "
            f"{mesh.n_nodes} nodes"
        )
    if state.velocities.shape != state.positions.shape:
        raise ValueError("positions and velocities shapes differ")


def build_body(
    params: MaterialParams,
    n_nodes: int = 21,
    component_masses: dict[str, float] | None = None,
) -> BodyMesh:
    """Construct the half-circular arc mesh with the paper mass budget.

    Nodes run from the back leg tip over the crown to the front leg tip.
    Electronics (battery, PCB, both coils) are spread over the chassis
    nodes at the crown; magnet stacks are lumped at one node per leg; the
    remaining shell mass is spread uniformly along the arc.  The node
    masses sum to the total robot mass exactly.

    Args:
        params: Material and section properties.
        n_nodes: Odd node count >= 7 (symmetric arc).
        component_masses: Optional overrides for the mass table, keys
            "battery", "pcb", "coil_front", "coil_back", "magnet_stack",
            "total".

    Raises:
        ValueError: If n_nodes is even or below 7.
    """
    if n_nodes < 7 or n_nodes % 2 == 0:
        raise ValueError("n_nodes must be odd and at least 7")

    cm = {
        "battery": BATTERY_MASS,
        "pcb": PCB_MASS,
        "coil_front": COIL_FRONT_MASS,
        "coil_back": COIL_BACK_MASS,
        "magnet_stack": MAGNET_STACK_MASS,
        "shoe": SHOE_MASS,
        "total": TOTAL_ROBOT_MASS,
    }
    if component_masses:
        cm.update(component_masses)

    radius = LEG_SPAN / 2.0
    # theta runs pi -> 0: node 0 is the back tip, node n-1 the front tip.
    theta = np.pi - np.pi * np.arange(n_nodes) / (n_nodes - 1)
    rest = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    rest[:, 1] -= rest[:, 1].min()  # tips exactly on y = 0

    # Chassis occupies the crown third of the arc (within 30 deg of top).
    chassis = np.where(np.abs(theta - np.pi / 2.0) <= np.pi / 6.0 + 1e-12)[0]

    # Magnet nodes sit ~18 deg up the arc from each tip.
    offset = max(1, round(0.1 * (n_nodes - 1)))
    magnet_front = n_nodes - 1 - offset
    magnet_back = offset
    shoe_front = n_nodes - 1
    shoe_back = 0

    electronics = cm["battery"] + cm["pcb"] + cm["coil_front"] + cm["coil_back"]
    shell_mass = (
        cm["total"] - electronics - 2.0 * cm["magnet_stack"] - 2.0 * cm["shoe"]
    )
    if shell_mass <= 0.0:
        raise ValueError("component masses exceed the total mass")

    masses = np.full(n_nodes, shell_mass / n_nodes)
    masses[chassis] += electronics / len(chassis)
    masses[magnet_front] += cm["magnet_stack"]
    masses[magnet_back] += cm["magnet_stack"]
    masses[shoe_front] += cm["shoe"]
    masses[shoe_back] += cm["shoe"]
    masses *= cm["total"] / masses.sum()  # kill accumulated rounding

    ai = np.arange(n_nodes - 1)
    aj = ai + 1
    seg = rest[aj] - rest[ai]
    rest_len = np.linalg.norm(seg, axis=1)
    k_axial = params.axial_rigidity / rest_len

    bc = np.arange(1, n_nodes - 1)
    rest_angle = _bend_angles(rest)
    lbar = 0.5 * (rest_len[:-1] + rest_len[1:])
    k_bend = params.bending_rigidity / lbar
    # The rigid chassis plate bolted across the crown does not flex with
    # the elastomer; brace the bending elements it spans.
    braced = np.isin(bc, chassis)
    k_bend = np.where(braced, k_bend * 10.0, k_bend)

    # Small fixed per-element dashpots against local ringing; the
    # calibrated damping_ratio instead drives the body-frame deformation
    # damping (see apply_deformation_damping).  Braced elements keep the
    # elastomer's own damping (the plate stores, it does not dissipate).
    m_node = masses.mean()
    c_axial = 2.0 * ELEMENT_DAMPING_RATIO * np.sqrt(k_axial * 0.5 * m_node)
    k_bend_material = np.where(braced, k_bend / 10.0, k_bend)
    c_bend = 2.0 * ELEMENT_DAMPING_RATIO * np.sqrt(
        k_bend_material * 0.5 * m_node * lbar**2
    )

    return BodyMesh(
        rest_positions=rest,
        node_masses=masses,
        axial_i=ai,
        axial_j=aj,
        axial_rest_length=rest_len,
        axial_stiffness=k_axial,
        axial_damping=c_axial,
        bend_center=bc,
        bend_rest_angle=rest_angle,
        bend_stiffness=k_bend,
        bend_damping=c_bend,
        chassis_node_indices=chassis,
        magnet_node_indices=(magnet_front, magnet_back),
        shoe_node_indices=(shoe_front, shoe_back),
        buoyancy_node_index=n_nodes // 2,
        damping_ratio=params.damping_ratio,
    )


def _bend_angles(positions: NDArray[np.float64]) -> NDArray[np.float64]:
    """Signed turn angle at every interior node."""
    a = positions[1:-1] - positions[:-2]
    b = positions[2:] - positions[1:-1]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = (a * b).sum(axis=1)
    return np.arctan2(cross, dot)


def _wrap_angle(d: NDArray[np.float64]) -> NDArray[np.float64]:
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def elastic_energy(mesh: BodyMesh, state: BodyState) -> float:
    """Stored elastic energy: axial stretch plus bending about rest angles."""
    _check_state(mesh, state)
    p = state.positions
    seg = p[mesh.axial_j] - p[mesh.axial_i]
    length = np.linalg.norm(seg, axis=1)
    e_axial = 0.5 * mesh.axial_stiffness * (length - mesh.axial_rest_length) ** 2
    dtheta = _wrap_angle(_bend_angles(p) - mesh.bend_rest_angle)
    e_bend = 0.5 * mesh.bend_stiffness * dtheta**2
    return float(e_axial.sum() + e_bend.sum())


def elastic_forces(
    mesh: BodyMesh, state: BodyState, include_damping: bool = True
) -> NDArray[np.float64]:
    """Nodal elastic forces: -grad(elastic_energy) plus element damping.

    The conservative part matches finite differences of the energy; the
    damping part is proportional to element stretch/turn rates and
    vanishes for rigid-body motion.  (The time stepper applies the same
    damping through ``apply_element_damping`` instead, which is the
    exact impulse form of these rate terms.)
    """
    _check_state(mesh, state)
    p = state.positions
    v = state.velocities
    f = np.zeros_like(p)

    # Axial springs and dashpots along the chain.
    seg = p[1:] - p[:-1]
    length = np.linalg.norm(seg, axis=1)
    direction = seg / length[:, None]
    tension = mesh.axial_stiffness * (length - mesh.axial_rest_length)
    if include_damping:
        stretch_rate = ((v[1:] - v[:-1]) * direction).sum(axis=1)
        tension = tension + mesh.axial_damping * stretch_rate
    f_el = tension[:, None] * direction
    f[:-1] += f_el
    f[1:] -= f_el

    # Angular springs at interior nodes: F = -M * grad(theta).
    a = p[1:-1] - p[:-2]
    b = p[2:] - p[1:-1]
    a2 = (a * a).sum(axis=1)
    b2 = (b * b).sum(axis=1)
    aperp = np.column_stack([-a[:, 1], a[:, 0]])
    bperp = np.column_stack([-b[:, 1], b[:, 0]])
    gi = aperp / a2[:, None]
    gk = bperp / b2[:, None]
    gj = -gi - gk
    theta = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], (a * b).sum(axis=1))
    dtheta = _wrap_angle(theta - mesh.bend_rest_angle)
    moment = mesh.bend_stiffness * dtheta
    if include_damping:
        theta_rate = (
            (gi * v[:-2]).sum(axis=1)
            + (gj * v[1:-1]).sum(axis=1)
            + (gk * v[2:]).sum(axis=1)
        )
        moment = moment + mesh.bend_damping * theta_rate
    f[:-2] -= moment[:, None] * gi
    f[1:-1] -= moment[:, None] * gj
    f[2:] -= moment[:, None] * gk
    return f


def apply_element_damping(mesh: BodyMesh, state: BodyState, dt: float) -> None:
    """Decay element stretch/turn rates over dt (exact impulse form).

    Equivalent to the rate-proportional damping terms of
    ``elastic_forces`` integrated exactly over the step, so it stays
    stable at any damping level; conserves linear and angular momentum.
    """
    p = state.positions
    v = state.velocities
    minv = 1.0 / mesh.inertial_masses

    seg = p[1:] - p[:-1]
    length = np.linalg.norm(seg, axis=1)
    direction = seg / length[:, None]
    for e in range(mesh.n_nodes - 1):
        d = direction[e]
        u = float((v[e + 1] - v[e]) @ d)
        wsum = minv[e] + minv[e + 1]
        expo = min(mesh.axial_damping[e] * dt * wsum, DAMPING_EXP_CAP)
        du = u * (np.exp(-expo) - 1.0)
        v[e + 1] += du * minv[e + 1] / wsum * d
        v[e] -= du * minv[e] / wsum * d

    for b in range(mesh.n_nodes - 2):
        c = b + 1
        a_vec = p[c] - p[c - 1]
        b_vec = p[c + 1] - p[c]
        a2 = float(a_vec @ a_vec)
        b2 = float(b_vec @ b_vec)
        gi = np.array([-a_vec[1], a_vec[0]]) / a2
        gk = np.array([-b_vec[1], b_vec[0]]) / b2
        gj = -gi - gk
        trate = float(gi @ v[c - 1] + gj @ v[c] + gk @ v[c + 1])
        s_gen = float(
            (gi @ gi) * minv[c - 1] + (gj @ gj) * minv[c] + (gk @ gk) * minv[c + 1]
        )
        expo = min(mesh.bend_damping[b] * dt * s_gen, DAMPING_EXP_CAP)
        dth = trate * (np.exp(-expo) - 1.0) / s_gen
        v[c - 1] += dth * gi * minv[c - 1]
        v[c] += dth * gj * minv[c]
        v[c + 1] += dth * gk * minv[c + 1]


def apply_deformation_damping(mesh: BodyMesh, state: BodyState, dt: float) -> None:
    """Decay node velocities toward the body's rigid motion.

    The deviation of each node's velocity from the instantaneous rigid
    (translation + rotation) field decays at the flat rate
    2 * damping_ratio * DAMPING_REF_OMEGA, so modal loss is
    damping_ratio at the reference frequency and falls off above it --
    the bulk viscoelastic loss of the elastomer where stiffness-scaled
    dashpots cannot reach.  Linear and angular momentum are conserved
    exactly; rigid motion is untouched.
    """
    m = mesh.inertial_masses
    total = float(m.sum())
    p = state.positions
    v = state.velocities
    com = (m[:, None] * p).sum(axis=0) / total
    vbar = (m[:, None] * v).sum(axis=0) / total
    r = p - com
    u = v - vbar
    ang = float((m * (r[:, 0] * u[:, 1] - r[:, 1] * u[:, 0])).sum())
    inert = float((m * (r * r).sum(axis=1)).sum())
    omega = ang / inert
    rigid = vbar + omega * np.column_stack([-r[:, 1], r[:, 0]])
    decay = np.exp(-2.0 * mesh.damping_ratio * DAMPING_REF_OMEGA * dt)
    v[:] = rigid + (v - rigid) * decay


def gravity_loads(mesh: BodyMesh, slope_deg: float) -> NDArray[np.float64]:
    """Per-node weight vectors on an inclined surface.

    The surface frame keeps the ground at y = 0; a positive slope tilts
    gravity backwards so +x is uphill.
    """
    if abs(slope_deg) > 30.0:
        raise ValueError(f"slope {slope_deg} deg outside the +/-30 deg range")
    alpha = np.radians(slope_deg)
    g_dir = np.array([-np.sin(alpha), -np.cos(alpha)])
    return mesh.node_masses[:, None] * GRAVITY * g_dir


def rest_state(mesh: BodyMesh) -> BodyState:
    """Stress-free state at the rest geometry with zero velocity."""
    return BodyState(
        positions=mesh.rest_positions.copy(),
        velocities=np.zeros_like(mesh.rest_positions),
        time=0.0,
    )


def with_chassis_payload(mesh: BodyMesh, extra_mass: float) -> BodyMesh:
    """Mesh with extra carried mass spread over the chassis nodes."""
    masses = mesh.node_masses.copy()
    masses[mesh.chassis_node_indices] += extra_mass / len(
        mesh.chassis_node_indices
    )
    return replace(mesh, node_masses=masses)


def with_towed_inertia(mesh: BodyMesh, mass: float, drag_area: float) -> BodyMesh:
    """Mesh with a towed, self-buoyant load coupled to the back leg.

    The tow adds inertia and drag area at the back shoe node but no
    weight (the cargo floats on its own).
    """
    extra = mesh.node_inertia_extra.copy()
    extra[mesh.shoe_node_indices[1]] += mass
    return replace(mesh, node_inertia_extra=extra, tow_drag_area=drag_area)


def stability_dt_max(mesh: BodyMesh, contact_stiffness: float | None = None) -> float:
    """Explicit-integration bound 2/omega_max over all elements.

    Per-element frequencies come from the stiffness times the
    mass-weighted squared force-distribution row; the factor 2 on the
    squared frequency covers mode coupling along the chain.
    """
    m = mesh.inertial_masses
    w2_axial = mesh.axial_stiffness * (1.0 / m[mesh.axial_i] + 1.0 / m[mesh.axial_j])
    la = mesh.axial_rest_length[mesh.bend_center - 1]
    lb = mesh.axial_rest_length[mesh.bend_center]
    g2 = (
        1.0 / (la**2 * m[mesh.bend_center - 1])
        + (1.0 / la + 1.0 / lb) ** 2 / m[mesh.bend_center]
        + 1.0 / (lb**2 * m[mesh.bend_center + 1])
    )
    w2 = 2.0 * max(float(w2_axial.max()), float((mesh.bend_stiffness * g2).max()))
    if contact_stiffness is not None:
        w2 = max(w2, contact_stiffness / float(m.min()))
    return 2.0 / np.sqrt(w2)


def settle_pinned(
    mesh: BodyMesh,
    slope_deg: float = 0.0,
    pinned: tuple[int, ...] | None = None,
    tol: float = 1e-6,
    max_steps: int = 400_000,
) -> NDArray[np.float64]:
    """Static equilibrium under gravity with the given nodes pinned.

    Dynamic relaxation with kinetic damping from the rest shape: run
    undamped dynamics and quench all velocities at every kinetic-energy
    peak, which converges across the widely separated axial/bending
    stiffness scales.  Both shoe tips are pinned by default (the
    standing stance).  Converges when the largest residual force on a
    free node drops below ``tol`` newtons.
    """
    if pinned is None:
        pinned = mesh.shoe_node_indices
    pinned = tuple(pinned)
    free = np.ones(mesh.n_nodes, dtype=bool)
    free[list(pinned)] = False
    gravity = gravity_loads(mesh, slope_deg)
    state = rest_state(mesh)
    m = mesh.inertial_masses[:, None]
    dt = 0.5 * stability_dt_max(mesh)
    ke_prev = 0.0
    for _ in range(max_steps):
        f = elastic_forces(mesh, state, include_damping=False) + gravity
        state.velocities += (dt / m) * f
        state.velocities[~free] = 0.0
        ke = float((m * state.velocities**2).sum())
        if ke < ke_prev:
            state.velocities[:] = 0.0
            ke = 0.0
            resid = float(
                np.abs(
                    (elastic_forces(mesh, state, include_damping=False) + gravity)[free]
                ).max()
            )
            if resid < tol:
                break
        else:
            state.positions += dt * state.velocities
        ke_prev = ke
    return state.positions.copy()
