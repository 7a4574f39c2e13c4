"""Coupled time stepper: body + magnetics + environment + firmware.

Semi-implicit (symplectic) Euler at a fixed step: the firmware tick
produces the coil drive, the drive produces magnet wrenches on the leg
nodes, elastic/gravity/contact (or hydro) forces close the loop, then
velocities update before positions.  The world pose (top-down x, y,
heading) advances alongside from the forward speed and a reduced-order
yaw model, since the sagittal body model cannot resolve the twist that
physically causes turning.

One owner steps a ``Simulation``; emitted ``SimSnapshot`` values are
copies and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import body as body_mod
from .assembly import RobotModel, build_robot
from .body import BodyState, MaterialParams, gravity_loads
from . import environment
from .environment import (
    ContactAnchors,
    Payload,
    SurfaceModel,
    WaterModel,
    apply_payload,
    contact_forces_sticky,
    hydro_forces,
    surface_preset,
)
from . import engine_kernel
from .firmware import (
    FirmwareState,
    GaitConfig,
    Mode,
    ThermalBudgetParams,
    firmware_tick,
)
from .magnetics import MU_0, SINGULARITY_RADIUS
from .protocol import TelemetryFrame

# Any node moving faster than this has diverged; physical speeds are two
# orders of magnitude lower.
INSTABILITY_SPEED: float = 10.0

# The coil former is a rigid obstacle: legs curling toward a coil hit a
# hard stop at this fraction of the rest coil-magnet gap, modeled as a
# stiff one-sided penalty between the magnet node and the coil.
COIL_STOP_FRACTION: float = 0.5
COIL_STOP_STIFFNESS: float = 2e4  # N/m

# The coil-former stop is lossy too: approach damping over critical.
STOP_DAMPING_FACTOR: float = 3.0

# Twist induced by the shifted steering coil diverts stride into turning
# instead of translation.  The planar body cannot resolve the twist, so
# the reduced-order steering layer scales the path speed with offset
# magnitude, matching the measured turn geometry alongside the yaw law.
TURN_SPEED_LOSS: float = 0.35

# Bench forces/couples were measured at the assembled gap; closer in they
# physically exceed those values.  The stepping loop clamps each leg's
# wrench at this multiple of the bench value as the dipole-model trust
# bound.
WRENCH_CAP_SCALE: float = 2.0


class ConfigError(ValueError):
    """Invalid simulation or scenario configuration."""


class InstabilityError(RuntimeError):
    """Integration diverged; carries the sim time of detection."""

    def __init__(self, time: float):
        super().__init__(f"integration diverged at t = {time:.4f} s")
        self.time = time


@dataclass
class WorldPose:
    """Top-down planar pose; heading wraps to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def copy(self) -> "WorldPose":
        return WorldPose(self.x, self.y, self.heading)


def wrap_heading(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class SimConfig:
    duration: float = 10.0
    dt: float = 1e-4
    medium: str = "ground"
    surface: SurfaceModel | None = None
    water: WaterModel | None = None
    payload: Payload | None = None
    gait: GaitConfig = GaitConfig()
    coil_offset: float = 0.0
    k_turn: float = 0.087   # rad/s at full offset and 4 Hz, calibrated
    seed: int = 0
    output_rate_hz: float = 100.0
    n_nodes: int = 21
    material: MaterialParams = MaterialParams()
    thermal: ThermalBudgetParams = ThermalBudgetParams()
    gravity_enabled: bool = True
    start_mode: str = "auto"  # auto | idle


@dataclass(frozen=True)
class SimSnapshot:
    time: float
    world: WorldPose
    com_velocity: float
    front_leg_x: float
    back_leg_x: float
    body: BodyState
    mode: str
    thermal_budget: float
    coil_offset: float


def drive_schedule(
    fw: FirmwareState, n_steps: int, dt: float, params: ThermalBudgetParams
) -> tuple[FirmwareState, np.ndarray, np.ndarray]:
    """Vectorized equivalent of n_steps of ``firmware_tick``.

    Returns the firmware state after the chunk and the per-step signed
    duty arrays, with the same trip/recovery semantics as the tick loop
    (the step on which the budget empties already outputs zero drive).
    """
    duty_f = np.zeros(n_steps)
    duty_b = np.zeros(n_steps)
    mode = fw.mode
    budget = fw.thermal_budget
    gait = fw.gait

    if mode in (Mode.WALKING, Mode.SWIMMING):
        t = fw.uptime + dt * np.arange(n_steps)
        phase = (t * gait.freq_hz) % 1.0
        a = gait.amplitude
        if gait.phase_mode == "out_of_phase":
            s = np.where(phase < gait.duty, a, -a)
            duty_f[:] = s
            duty_b[:] = -s
        else:
            s = np.where(phase < gait.duty, a, 0.0)
            duty_f[:] = s
            duty_b[:] = s
        load = 0.5 * (duty_f**2 + duty_b**2)
        drain = dt / params.full_duty_runtime
        recover = dt / params.cooldown_time
        may_clamp = budget + n_steps * recover > 1.0 and bool((load == 0.0).any())
        may_trip = budget - float(load.sum()) * drain <= 0.0
        if may_clamp or may_trip:
            # Near a boundary: replay the exact per-tick bookkeeping.
            for k in range(n_steps):
                if mode is Mode.COOLDOWN:
                    duty_f[k] = 0.0
                    duty_b[k] = 0.0
                    budget = min(1.0, budget + recover)
                    continue
                if load[k] > 0.0:
                    budget -= load[k] * drain
                    if budget <= 0.0:
                        budget = 0.0
                        mode = Mode.COOLDOWN
                        duty_f[k] = 0.0
                        duty_b[k] = 0.0
                else:
                    budget = min(1.0, budget + recover)
        else:
            budget -= float(load.sum()) * drain
    else:
        budget = min(1.0, budget + n_steps * dt / params.cooldown_time)
        if mode is Mode.COOLDOWN and budget >= params.recovery_threshold:
            mode = Mode.IDLE

    out = replace(
        fw, mode=mode, thermal_budget=budget, uptime=fw.uptime + n_steps * dt
    )
    return out, duty_f, duty_b


def steering_yaw_rate(
    coil_offset: float, mode: Mode, freq_hz: float, k_turn: float = 0.087
) -> float:
    """Reduced-order yaw model of the coil-shift steering.

    Shifting the coil left (positive offset) turns the robot right, so
    the heading rate is -k_turn * offset scaled by gait frequency
    relative to the 4 Hz operating point.  Only walking turns.
    """
    if not -1.0 <= coil_offset <= 1.0:
        raise ValueError("coil offset outside [-1, 1]")
    if mode is not Mode.WALKING:
        return 0.0
    return -k_turn * coil_offset * (freq_hz / 4.0)


class Simulation:
    """Owns the coupled state and advances it at a fixed step."""

    def __init__(self, config: SimConfig, robot: RobotModel | None = None):
        if config.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if config.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if config.medium not in ("ground", "water"):
            raise ConfigError(f"unknown medium {config.medium!r}")
        if not -1.0 <= config.coil_offset <= 1.0:
            raise ConfigError("coil_offset outside [-1, 1]")
        self.config = config
        self.robot = robot or build_robot(config.material, config.n_nodes)
        mesh = self.robot.mesh
        if config.payload is not None:
            mesh = apply_payload(mesh, config.payload)
        self.mesh = mesh

        if config.medium == "ground":
            self.surface = config.surface or surface_preset("plastic_table")
            self.water = None
        else:
            self.water = config.water or WaterModel()
            self.surface = None
            if not self.water.supports(mesh.total_mass):
                raise ConfigError(
                    "buoyancy volume cannot float the robot "
                    f"({mesh.total_mass * 1e3:.1f} g)"
                )
            # Hydrodynamic added mass: a strip moving broadside entrains
            # roughly rho*pi*(w/2)^2 of water per unit length, several
            # times the structural mass; legs in water are sluggish and
            # their strokes inertially symmetric.
            strip_w = 35e-3
            seg = np.zeros(mesh.n_nodes)
            half = 0.5 * mesh.axial_rest_length
            seg[:-1] += half
            seg[1:] += half
            added = (
                self.water.fluid_density * np.pi * (strip_w / 2.0) ** 2 * seg
            )
            mesh = replace(
                mesh, node_inertia_extra=mesh.node_inertia_extra + added
            )
            self.mesh = mesh

        dt_max = self.stability_dt_max()
        if config.dt > dt_max:
            raise ConfigError(
                f"dt {config.dt:+.2e} exceeds the stability bound {dt_max:.2e} s"
            )

        slope = self.surface.slope_deg if self.surface else 0.0
        self._gravity = (
            gravity_loads(mesh, slope)
            if config.gravity_enabled
            else np.zeros_like(mesh.rest_positions)
        )
        self._masses = mesh.inertial_masses[:, None]

        self.state = self._initial_state()
        self.pose = WorldPose()
        self.anchors = ContactAnchors.fresh()
        mode = Mode.IDLE
        if config.start_mode == "auto":
            mode = Mode.WALKING if config.medium == "ground" else Mode.SWIMMING
        self.firmware = FirmwareState(
            mode=mode,
            gait=config.gait,
            coil_offset=config.coil_offset,
            medium=config.medium,
        )
        self._total_mass = float(mesh.inertial_masses.sum())
        # Per-leg actuation constants for the stepping loop: the magnet
        # remanence magnitude is folded together with the stack volume.
        self._legs = []
        stance = self.robot.standing_positions
        stance_origin = stance[mesh.chassis_node_indices].mean(axis=0)
        for coil, magnet in (
            (self.robot.coil_front, self.robot.magnet_front),
            (self.robot.coil_back, self.robot.magnet_back),
        ):
            rest_gap = float(
                np.linalg.norm(
                    coil.center_offset[:2]
                    - (stance[magnet.node_index] - stance_origin)
                )
            )
            trim = self.robot.drive_trim[coil.label]
            self._legs.append(
                (
                    coil.label,
                    magnet.node_index,
                    magnet.volume * float(np.linalg.norm(magnet.br)),
                    float(coil.center_offset[0]),
                    float(coil.center_offset[1]),
                    float(coil.axis[0]),
                    float(coil.axis[1]),
                    trim * coil.dipole_moment_max,
                    trim * WRENCH_CAP_SCALE * self.robot.force_caps[coil.label],
                    trim * WRENCH_CAP_SCALE * self.robot.torque_caps[coil.label],
                    self.robot.coil_z_travel if coil.label == "front" else 0.0,
                    COIL_STOP_FRACTION * rest_gap,
                )
            )
        self._deform_decay = float(
            np.exp(
                -2.0
                * mesh.damping_ratio
                * body_mod.DAMPING_REF_OMEGA
                * config.dt
            )
        )
        self._kernel_args = self._build_kernel_args()

    # ------------------------------------------------------------------

    def stability_dt_max(self) -> float:
        """2/omega of the stiffest spring/mass pairing in the model."""
        contact_k = self.surface.contact_stiffness if self.surface else None
        return body_mod.stability_dt_max(self.mesh, contact_k)

    def _build_kernel_args(self) -> dict:
        mesh = self.mesh
        m = mesh.inertial_masses
        if self.surface is not None:
            surf_on = True
            mu_f = self.surface.mu_forward
            mu_b = self.surface.mu_backward
            k_contact = self.surface.contact_stiffness
            if self.surface.contact_damping is None:
                # Bristled shoes squish on landing: overdamped approach.
                c_contact = (
                    environment.CONTACT_DAMPING_FACTOR * 2.0 * np.sqrt(k_contact * m)
                )
            else:
                c_contact = np.full(mesh.n_nodes, self.surface.contact_damping)
        else:
            surf_on = False
            mu_f = mu_b = k_contact = 0.0
            c_contact = np.zeros(mesh.n_nodes)
        if self.water is not None:
            w = self.water
            water_on = True
            k_heave = (
                w.fluid_density * body_mod.GRAVITY * w.buoyancy_volume / w.foam_height
            )
            water = dict(
                water_on=True,
                rho=w.fluid_density,
                cd=w.drag_coefficient,
                plate_area=w.leg_plate_area,
                strip_width=35e-3,
                buoy_volume=w.buoyancy_volume,
                foam_h=w.foam_height,
                waterline=w.waterline_height,
                buoy_node=mesh.buoyancy_node_index,
                c_heave=float(np.sqrt(k_heave * mesh.total_mass)),
                surge_drag=w.surge_drag,
                tow_area=mesh.tow_drag_area,
            )
        else:
            water = dict(
                water_on=False, rho=0.0, cd=0.0, plate_area=0.0,
                strip_width=0.0, buoy_volume=1.0, foam_h=1.0, waterline=0.0,
                buoy_node=0, c_heave=0.0, surge_drag=0.0, tow_area=0.0,
            )
        legs = self._legs
        return dict(
            minv=1.0 / m,
            minert=m.copy(),
            total_mass=self._total_mass,
            ax_k=mesh.axial_stiffness,
            ax_c=mesh.axial_damping,
            ax_l0=mesh.axial_rest_length,
            bend_k=mesh.bend_stiffness,
            bend_c=mesh.bend_damping,
            bend_th0=mesh.bend_rest_angle,
            gravity=self._gravity,
            surf_on=surf_on,
            mu_f=mu_f,
            mu_b=mu_b,
            k_contact=k_contact,
            c_contact=c_contact,
            shoe_front=mesh.shoe_node_indices[0],
            shoe_back=mesh.shoe_node_indices[1],
            **water,
            leg_node=np.array([legs[0][1], legs[1][1]], dtype=np.int64),
            leg_vbr=np.array([legs[0][2], legs[1][2]]),
            leg_cox=np.array([legs[0][3], legs[1][3]]),
            leg_coy=np.array([legs[0][4], legs[1][4]]),
            leg_cax=np.array([legs[0][5], legs[1][5]]),
            leg_cay=np.array([legs[0][6], legs[1][6]]),
            leg_mmax=np.array([legs[0][7], legs[1][7]]),
            leg_cap=np.array([legs[0][8], legs[1][8]]),
            leg_tcap=np.array([legs[0][9], legs[1][9]]),
            leg_ztravel=np.array([legs[0][10], legs[1][10]]),
            leg_rstop=np.array([legs[0][11], legs[1][11]]),
            chassis=mesh.chassis_node_indices.astype(np.int64),
        )

    def advance(self, n_steps: int) -> None:
        """Advance n_steps through the compiled chunk kernel."""
        if n_steps <= 0:
            return
        cfg = self.config
        fw0 = self.firmware
        fw1, duty_f, duty_b = drive_schedule(fw0, n_steps, cfg.dt, cfg.thermal)
        yaw = steering_yaw_rate(
            fw0.coil_offset, fw0.mode, fw0.gait.freq_hz, cfg.k_turn
        )
        pose_arr = np.array([self.pose.x, self.pose.y, self.pose.heading])
        status = engine_kernel.run_chunk(
            self.state.positions,
            self.state.velocities,
            cfg.dt,
            n_steps,
            anchor_x=self.anchors.anchor_x,
            engaged=self.anchors.engaged,
            grip=self.anchors.grip,
            grip_recovery=environment.GRIP_RECOVERY_TIME,
            grip_quiet=environment.GRIP_QUIET_SPEED,
            mu_tex_amp=environment.MU_TEXTURE_AMP,
            tex_seed=float(cfg.seed),
            coil_offset=fw0.coil_offset,
            duty_front=duty_f,
            duty_back=duty_b,
            pose=pose_arr,
            yaw_rate=yaw,
            path_speed_scale=self._path_speed_scale(),
            deform_decay=self._deform_decay,
            time0=self.state.time,
            **self._kernel_args,
        )
        self.pose.x = float(pose_arr[0])
        self.pose.y = float(pose_arr[1])
        self.pose.heading = float(pose_arr[2])
        if status >= 0:
            self.state.time += (status + 1) * cfg.dt
            raise InstabilityError(self.state.time)
        self.state.time += n_steps * cfg.dt
        self.firmware = fw1

    def _initial_state(self) -> BodyState:
        positions = self.robot.standing_positions.copy()
        if self.water is not None:
            # Start at the floating draft of the foam block.
            weight = self.mesh.total_mass * body_mod.GRAVITY
            lift_full = (
                self.water.fluid_density
                * body_mod.GRAVITY
                * self.water.buoyancy_volume
            )
            draft = (weight / lift_full) * self.water.foam_height
            node_y = positions[self.mesh.buoyancy_node_index, 1]
            positions[:, 1] += (self.water.waterline_height - draft) - node_y
        return BodyState(
            positions=positions,
            velocities=np.zeros_like(positions),
            time=0.0,
        )

    # ------------------------------------------------------------------

    def _magnetic_forces(self, drive, forces: np.ndarray) -> None:
        """Accumulate leg wrenches from the same-leg coil pairs.

        Cross-leg coupling (front coil on the back magnet and vice versa)
        is below 0.1% at the 8 cm leg separation and is skipped in the
        stepping loop.  Torques become force couples across the nodes
        adjacent to each magnet.
        """
        p = self.state.positions
        chassis = self.mesh.chassis_node_indices
        origin = p[chassis].mean(axis=0)
        ox0, oy0 = float(origin[0]), float(origin[1])
        first, last = chassis[0], chassis[-1]
        exx = float(p[last, 0] - p[first, 0])
        exy = float(p[last, 1] - p[first, 1])
        elen = math.hypot(exx, exy)
        exx /= elen
        exy /= elen
        offset = self.firmware.coil_offset

        for (label, node, vbr, cox, coy, cax, cay, mmax, cap, tcap, z_travel,
             r_stop) in self._legs:
            # Magnet position in the chassis frame.
            dx = p[node, 0] - ox0
            dy = p[node, 1] - oy0
            cx = dx * exx + dy * exy
            cy = -dx * exy + dy * exx
            rx = cx - cox
            ry = cy - coy
            rz = -z_travel * offset
            r2 = rx * rx + ry * ry + rz * rz
            r = math.sqrt(r2)
            if r < SINGULARITY_RADIUS:
                raise InstabilityError(self.state.time)
            nx, ny, nz = rx / r, ry / r, rz / r

            fx = fy = tz = 0.0
            duty = drive.for_coil(label)
            if duty != 0.0:
                # Outward shell normal carries the remanence direction.
                tx = p[node + 1, 0] - p[node - 1, 0]
                ty = p[node + 1, 1] - p[node - 1, 1]
                tlen = math.hypot(tx, ty)
                nx_w, ny_w = -ty / tlen, tx / tlen
                brx = vbr * (nx_w * exx + ny_w * exy)
                bry = vbr * (-nx_w * exy + ny_w * exx)
                m = duty * mmax
                an = cax * nx + cay * ny
                bra = brx * cax + bry * cay
                brn = brx * nx + bry * ny
                s3 = 3e-7 * m / (r2 * r2 * MU_0)
                fx = s3 * (bra * nx + brn * cax + an * (brx - 5.0 * brn * nx))
                fy = s3 * (bra * ny + brn * cay + an * (bry - 5.0 * brn * ny))
                fz = s3 * (bra * nz + an * (-5.0 * brn * nz))
                cb = 1e-7 * m / (r2 * r)
                bx = cb * (3.0 * an * nx - cax)
                by = cb * (3.0 * an * ny - cay)
                tz = (brx * by - bry * bx) / MU_0
                fmag = math.sqrt(fx * fx + fy * fy + fz * fz)
                if fmag > cap:
                    s = cap / fmag
                    fx *= s
                    fy *= s
                    tz *= s
                tz = min(tcap, max(-tcap, tz))

            if r < r_stop:
                # Coil former stop: stiff one-sided repulsion along the
                # gap, with approach damping; reaction on the chassis.
                v = self.state.velocities
                vrel_x = v[node, 0] - v[chassis, 0].mean()
                vrel_y = v[node, 1] - v[chassis, 1].mean()
                # Gap direction in world axes (z component dropped).
                gx = nx * exx - ny * exy
                gy = nx * exy + ny * exx
                approach = -(vrel_x * gx + vrel_y * gy)
                c_stop = 2.0 * STOP_DAMPING_FACTOR * math.sqrt(
                    COIL_STOP_STIFFNESS * self.mesh.inertial_masses[node]
                )
                fstop = COIL_STOP_STIFFNESS * (r_stop - r)
                fstop += c_stop * max(0.0, approach)
                fx += fstop * nx
                fy += fstop * ny
                forces[chassis, 0] -= fstop * gx / len(chassis)
                forces[chassis, 1] -= fstop * gy / len(chassis)

            if fx == 0.0 and fy == 0.0 and tz == 0.0:
                continue
            # Back to world axes.
            fwx = fx * exx - fy * exy
            fwy = fx * exy + fy * exx
            forces[node, 0] += fwx
            forces[node, 1] += fwy
            if tz != 0.0:
                ddx = p[node + 1, 0] - p[node - 1, 0]
                ddy = p[node + 1, 1] - p[node - 1, 1]
                d2 = ddx * ddx + ddy * ddy
                fpx = -tz * ddy / d2
                fpy = tz * ddx / d2
                forces[node + 1, 0] += fpx
                forces[node + 1, 1] += fpy
                forces[node - 1, 0] -= fpx
                forces[node - 1, 1] -= fpy

    def step(self) -> None:
        """Advance the coupled system by one dt.

        Reference Python path; ``advance``/``run`` go through the
        compiled kernel with identical math.
        """
        cfg = self.config
        dt = cfg.dt
        self.firmware, drive = firmware_tick(self.firmware, dt, cfg.thermal)

        forces = body_mod.elastic_forces(self.mesh, self.state, include_damping=False)
        forces += self._gravity
        if self.surface is not None:
            fc, self.anchors = contact_forces_sticky(
                self.state, self.mesh, self.surface, self.anchors, dt,
                seed=cfg.seed,
            )
            forces += fc
        else:
            forces += hydro_forces(self.state, self.mesh, self.water)
        self._magnetic_forces(drive, forces)

        v = self.state.velocities
        v += (dt / self._masses) * forces
        body_mod.apply_element_damping(self.mesh, self.state, dt)
        body_mod.apply_deformation_damping(self.mesh, self.state, dt)
        speed2 = float((v * v).sum(axis=1).max())
        if speed2 > INSTABILITY_SPEED**2:
            raise InstabilityError(self.state.time)
        self.state.positions += dt * v
        self.state.time += dt

        com_v = float(
            (self.mesh.inertial_masses * v[:, 0]).sum() / self._total_mass
        )
        com_v *= self._path_speed_scale()
        pose = self.pose
        pose.x += dt * com_v * math.cos(pose.heading)
        pose.y += dt * com_v * math.sin(pose.heading)
        rate = steering_yaw_rate(
            self.firmware.coil_offset,
            self.firmware.mode,
            self.firmware.gait.freq_hz,
            cfg.k_turn,
        )
        if rate != 0.0:
            pose.heading = wrap_heading(pose.heading + dt * rate)

    def _path_speed_scale(self) -> float:
        return 1.0 - TURN_SPEED_LOSS * abs(self.firmware.coil_offset)

    def snapshot(self) -> SimSnapshot:
        v = self.state.velocities
        com_v = float(
            (self.mesh.inertial_masses * v[:, 0]).sum() / self._total_mass
        ) * self._path_speed_scale()
        front, back = self.mesh.shoe_node_indices
        return SimSnapshot(
            time=self.state.time,
            world=self.pose.copy(),
            com_velocity=com_v,
            front_leg_x=float(self.state.positions[front, 0]),
            back_leg_x=float(self.state.positions[back, 0]),
            body=self.state.copy(),
            mode=self.firmware.mode.value,
            thermal_budget=self.firmware.thermal_budget,
            coil_offset=self.firmware.coil_offset,
        )

    def run(self) -> list[SimSnapshot]:
        """Fixed-step run over the configured duration.

        Snapshots are taken at the output rate, including the initial
        state; deterministic for a given (config, seed).
        """
        cfg = self.config
        every = max(1, round(1.0 / (cfg.output_rate_hz * cfg.dt)))
        steps = round(cfg.duration / cfg.dt)
        out = [self.snapshot()]
        done = 0
        while done < steps:
            chunk = min(every, steps - done)
            self.advance(chunk)
            done += chunk
            out.append(self.snapshot())
        return out

    def settle(self, max_time: float = 5.0, v_tol: float = 1e-5) -> None:
        """Relax to static equilibrium with the drive off.

        Runs idle dynamics until every node is slower than v_tol, then
        zeroes the velocities.  Contact anchors persist so the settled
        stance keeps its grip.
        """
        saved_mode = self.firmware.mode
        self.firmware = replace(self.firmware, mode=Mode.IDLE)
        steps = round(max_time / self.config.dt)
        for i in range(steps):
            self.step()
            if i % 200 == 199:
                vmax = float(np.abs(self.state.velocities).max())
                if vmax < v_tol:
                    break
        self.state.velocities[:] = 0.0
        self.firmware = replace(self.firmware, mode=saved_mode)


def run(config: SimConfig) -> list[SimSnapshot]:
    """Build and run a simulation; see ``Simulation.run``."""
    return Simulation(config).run()


def snapshot_telemetry(snap: SimSnapshot) -> TelemetryFrame:
    """Wire frame for one snapshot; metres become centimetres."""
    return TelemetryFrame(
        t=snap.time,
        x_cm=snap.world.x * 100.0,
        y_cm=snap.world.y * 100.0,
        heading_rad=snap.world.heading,
        v_cm_s=snap.com_velocity * 100.0,
        front_leg_x_cm=snap.front_leg_x * 100.0,
        back_leg_x_cm=snap.back_leg_x * 100.0,
        mode=snap.mode,
        thermal_budget=snap.thermal_budget,
    )
