"""Compiled inner loop of the simulation engine.

Mirrors, step for step, the force evaluations of ``body.elastic_forces``,
``environment.contact_forces_sticky`` / ``environment.hydro_forces`` and
the engine's magnet wrench path, fused into one numba kernel that
advances a whole output chunk per call.  The pure-NumPy module functions
remain the tested reference; ``tests/test_engine.py`` checks the two
paths agree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

V_EPS = 1e-3  # keep in sync with environment.V_EPS
MU_0 = 4.0 * np.pi * 1e-7
SINGULARITY_RADIUS = 1e-3
COIL_STOP_STIFFNESS = 2e3
INSTABILITY_SPEED = 10.0

# Per-step decay exponent clip: Rayleigh-style damping grows with element
# stiffness and would over-damp the stiffest modes into instability; the
# clip leaves every mode of physical interest untouched.
DAMPING_EXP_CAP = 1.0


@njit(cache=True)
def run_chunk(
    pos,
    vel,
    dt,
    n_sub,
    minv,
    minert,
    total_mass,
    # axial elements
    ax_k,
    ax_c,
    ax_l0,
    # bending elements (centers 1..n-2)
    bend_k,
    bend_c,
    bend_th0,
    gravity,
    # ground contact (surf_on) with bristle anchors
    surf_on,
    mu_f,
    mu_b,
    k_contact,
    c_contact,
    shoe_front,
    shoe_back,
    anchor_x,
    engaged,
    grip,
    grip_recovery,
    grip_quiet,
    mu_tex_amp,
    tex_seed,
    # water (water_on)
    water_on,
    rho,
    cd,
    plate_area,
    strip_width,
    buoy_volume,
    foam_h,
    waterline,
    buoy_node,
    c_heave,
    surge_drag,
    tow_area,
    # magnet legs
    leg_node,
    leg_vbr,
    leg_cox,
    leg_coy,
    leg_cax,
    leg_cay,
    leg_mmax,
    leg_cap,
    leg_tcap,
    leg_ztravel,
    leg_rstop,
    chassis,
    coil_offset,
    duty_front,
    duty_back,
    # world pose [x, y, heading], advanced in place
    pose,
    yaw_rate,
    path_speed_scale,
    deform_decay,
    time0,
):
    """Advance n_sub steps; returns -1 or the step index that diverged."""
    n = pos.shape[0]
    nc = chassis.shape[0]
    g_const = 9.81
    forces = np.empty((n, 2))

    for step in range(n_sub):
        for i in range(n):
            forces[i, 0] = gravity[i, 0]
            forces[i, 1] = gravity[i, 1]

        # Axial springs (damping handled by the decay pass below).
        for e in range(n - 1):
            sx = pos[e + 1, 0] - pos[e, 0]
            sy = pos[e + 1, 1] - pos[e, 1]
            ln = np.sqrt(sx * sx + sy * sy)
            dx = sx / ln
            dy = sy / ln
            tension = ax_k[e] * (ln - ax_l0[e])
            fx = tension * dx
            fy = tension * dy
            forces[e, 0] += fx
            forces[e, 1] += fy
            forces[e + 1, 0] -= fx
            forces[e + 1, 1] -= fy

        # Angular springs at interior nodes.
        for b in range(n - 2):
            c = b + 1
            a_x = pos[c, 0] - pos[c - 1, 0]
            a_y = pos[c, 1] - pos[c - 1, 1]
            b_x = pos[c + 1, 0] - pos[c, 0]
            b_y = pos[c + 1, 1] - pos[c, 1]
            a2 = a_x * a_x + a_y * a_y
            b2 = b_x * b_x + b_y * b_y
            gix = -a_y / a2
            giy = a_x / a2
            gkx = -b_y / b2
            gky = b_x / b2
            gjx = -gix - gkx
            gjy = -giy - gky
            theta = np.arctan2(a_x * b_y - a_y * b_x, a_x * b_x + a_y * b_y)
            dth = theta - bend_th0[b]
            if dth > np.pi:
                dth -= 2.0 * np.pi
            elif dth < -np.pi:
                dth += 2.0 * np.pi
            moment = bend_k[b] * dth
            forces[c - 1, 0] -= moment * gix
            forces[c - 1, 1] -= moment * giy
            forces[c, 0] -= moment * gjx
            forces[c, 1] -= moment * gjy
            forces[c + 1, 0] -= moment * gkx
            forces[c + 1, 1] -= moment * gky

        if surf_on:
            # Normal penalty on every node.
            for i in range(n):
                pen = -pos[i, 1]
                if pen > 0.0:
                    nf = k_contact * pen
                    if vel[i, 1] < 0.0:
                        nf -= c_contact[i] * vel[i, 1]
                    if nf > 0.0:
                        forces[i, 1] += nf
            # Bristle friction at the shoes, with grip recovery.
            for s in range(2):
                node = shoe_front if s == 0 else shoe_back
                pen = -pos[node, 1]
                nf = 0.0
                if pen > 0.0:
                    nf = k_contact * pen
                    if vel[node, 1] < 0.0:
                        nf -= c_contact[node] * vel[node, 1]
                if nf <= 0.0:
                    engaged[s] = 0.0
                    continue
                x = pos[node, 0]
                if engaged[s] == 0.0:
                    engaged[s] = 1.0
                    anchor_x[s] = x
                c_t = c_contact[node]
                raw = -k_contact * (x - anchor_x[s]) - c_t * vel[node, 0]
                if abs(vel[node, 0]) < grip_quiet:
                    grip[s] = min(1.0, grip[s] + dt / grip_recovery)
                mu_b_eff = mu_f + (mu_b - mu_f) * grip[s]
                tex = 1.0 + mu_tex_amp * (
                    np.sin(730.0 * x + 0.7 * tex_seed)
                    + np.sin(1170.0 * x + 2.1 + 0.7 * tex_seed)
                    + np.sin(1910.0 * x + 4.4 + 0.7 * tex_seed)
                ) / 3.0
                cap_f = mu_f * tex * nf
                cap_b = mu_b_eff * tex * nf
                if raw < -cap_f:
                    ft = -cap_f
                    anchor_x[s] = x + (ft + c_t * vel[node, 0]) / k_contact
                    grip[s] = 0.0
                elif raw > cap_b:
                    ft = cap_b
                    anchor_x[s] = x + (ft + c_t * vel[node, 0]) / k_contact
                else:
                    ft = raw
                forces[node, 0] += ft

        if water_on:
            depth = waterline - pos[buoy_node, 1]
            if depth < 0.0:
                depth = 0.0
            elif depth > foam_h:
                depth = foam_h
            forces[buoy_node, 1] += rho * g_const * buoy_volume * depth / foam_h
            forces[buoy_node, 1] -= c_heave * vel[buoy_node, 1]
            forces[buoy_node, 0] -= surge_drag * vel[buoy_node, 0]
            for e in range(n - 1):
                mid_y = 0.5 * (pos[e, 1] + pos[e + 1, 1])
                if mid_y >= waterline:
                    continue
                sx = pos[e + 1, 0] - pos[e, 0]
                sy = pos[e + 1, 1] - pos[e, 1]
                ln = np.sqrt(sx * sx + sy * sy)
                nx = -sy / ln
                ny = sx / ln
                vmx = 0.5 * (vel[e, 0] + vel[e + 1, 0])
                vmy = 0.5 * (vel[e, 1] + vel[e + 1, 1])
                vn = vmx * nx + vmy * ny
                fm = -0.5 * rho * cd * (ln * strip_width) * abs(vn) * vn
                forces[e, 0] += 0.5 * fm * nx
                forces[e, 1] += 0.5 * fm * ny
                forces[e + 1, 0] += 0.5 * fm * nx
                forces[e + 1, 1] += 0.5 * fm * ny
            for s in range(2):
                node = shoe_front if s == 0 else shoe_back
                if pos[node, 1] >= waterline:
                    continue
                lo = node - 1 if node > 0 else 0
                hi = node + 1 if node < n - 1 else n - 1
                tx = pos[hi, 0] - pos[lo, 0]
                ty = pos[hi, 1] - pos[lo, 1]
                tl = np.sqrt(tx * tx + ty * ty)
                nox = ty / tl
                noy = -tx / tl
                if node == 0:
                    nox = -nox
                    noy = -noy
                vn = vel[node, 0] * nox + vel[node, 1] * noy
                fp = -0.5 * rho * cd * plate_area * abs(vn) * vn
                forces[node, 0] += fp * nox
                forces[node, 1] += fp * noy
            if tow_area > 0.0:
                node = shoe_back
                if pos[node, 1] < waterline:
                    sp = np.sqrt(
                        vel[node, 0] * vel[node, 0] + vel[node, 1] * vel[node, 1]
                    )
                    forces[node, 0] -= 0.5 * rho * cd * tow_area * sp * vel[node, 0]
                    forces[node, 1] -= 0.5 * rho * cd * tow_area * sp * vel[node, 1]

        # Chassis frame for the coil geometry.
        ox0 = 0.0
        oy0 = 0.0
        for idx in range(nc):
            ox0 += pos[chassis[idx], 0]
            oy0 += pos[chassis[idx], 1]
        ox0 /= nc
        oy0 /= nc
        exx = pos[chassis[nc - 1], 0] - pos[chassis[0], 0]
        exy = pos[chassis[nc - 1], 1] - pos[chassis[0], 1]
        el = np.sqrt(exx * exx + exy * exy)
        exx /= el
        exy /= el

        df = duty_front[step]
        db = duty_back[step]
        for leg in range(2):
            node = leg_node[leg]
            dx = pos[node, 0] - ox0
            dy = pos[node, 1] - oy0
            cx = dx * exx + dy * exy
            cy = -dx * exy + dy * exx
            rx = cx - leg_cox[leg]
            ry = cy - leg_coy[leg]
            rz = -leg_ztravel[leg] * coil_offset
            r2 = rx * rx + ry * ry + rz * rz
            r = np.sqrt(r2)
            if r < SINGULARITY_RADIUS:
                return step
            nx = rx / r
            ny = ry / r
            nz = rz / r

            fx = 0.0
            fy = 0.0
            tz = 0.0
            duty = df if leg == 0 else db
            if duty != 0.0:
                tx = pos[node + 1, 0] - pos[node - 1, 0]
                ty = pos[node + 1, 1] - pos[node - 1, 1]
                tl = np.sqrt(tx * tx + ty * ty)
                nwx = -ty / tl
                nwy = tx / tl
                brx = leg_vbr[leg] * (nwx * exx + nwy * exy)
                bry = leg_vbr[leg] * (-nwx * exy + nwy * exx)
                m = duty * leg_mmax[leg]
                cax = leg_cax[leg]
                cay = leg_cay[leg]
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
                fmag = np.sqrt(fx * fx + fy * fy + fz * fz)
                if fmag > leg_cap[leg]:
                    s = leg_cap[leg] / fmag
                    fx *= s
                    fy *= s
                    tz *= s
                if tz > leg_tcap[leg]:
                    tz = leg_tcap[leg]
                elif tz < -leg_tcap[leg]:
                    tz = -leg_tcap[leg]

            if r < leg_rstop[leg]:
                vrx = 0.0
                vry = 0.0
                for idx in range(nc):
                    vrx += vel[chassis[idx], 0]
                    vry += vel[chassis[idx], 1]
                vrx = vel[node, 0] - vrx / nc
                vry = vel[node, 1] - vry / nc
                gx = nx * exx - ny * exy
                gy = nx * exy + ny * exx
                approach = -(vrx * gx + vry * gy)
                c_stop = 6.0 * np.sqrt(COIL_STOP_STIFFNESS / minv[node])
                fstop = COIL_STOP_STIFFNESS * (leg_rstop[leg] - r)
                if approach > 0.0:
                    fstop += c_stop * approach
                fx += fstop * nx
                fy += fstop * ny
                for idx in range(nc):
                    forces[chassis[idx], 0] -= fstop * gx / nc
                    forces[chassis[idx], 1] -= fstop * gy / nc

            if fx != 0.0 or fy != 0.0 or tz != 0.0:
                fwx = fx * exx - fy * exy
                fwy = fx * exy + fy * exx
                forces[node, 0] += fwx
                forces[node, 1] += fwy
                if tz != 0.0:
                    ddx = pos[node + 1, 0] - pos[node - 1, 0]
                    ddy = pos[node + 1, 1] - pos[node - 1, 1]
                    d2 = ddx * ddx + ddy * ddy
                    fpx = -tz * ddy / d2
                    fpy = tz * ddx / d2
                    forces[node + 1, 0] += fpx
                    forces[node + 1, 1] += fpy
                    forces[node - 1, 0] -= fpx
                    forces[node - 1, 1] -= fpy

        # Semi-implicit velocity update from conservative + external forces.
        for i in range(n):
            vel[i, 0] += dt * minv[i] * forces[i, 0]
            vel[i, 1] += dt * minv[i] * forces[i, 1]

        # Element damping as an exact relative-velocity decay: stable for
        # any damping level, conserves linear and angular momentum.
        for e in range(n - 1):
            sx = pos[e + 1, 0] - pos[e, 0]
            sy = pos[e + 1, 1] - pos[e, 1]
            ln = np.sqrt(sx * sx + sy * sy)
            dx = sx / ln
            dy = sy / ln
            u = (vel[e + 1, 0] - vel[e, 0]) * dx + (vel[e + 1, 1] - vel[e, 1]) * dy
            wsum = minv[e] + minv[e + 1]
            expo = ax_c[e] * dt * wsum
            if expo > DAMPING_EXP_CAP:
                expo = DAMPING_EXP_CAP
            du = u * (np.exp(-expo) - 1.0)
            vel[e + 1, 0] += du * minv[e + 1] / wsum * dx
            vel[e + 1, 1] += du * minv[e + 1] / wsum * dy
            vel[e, 0] -= du * minv[e] / wsum * dx
            vel[e, 1] -= du * minv[e] / wsum * dy
        for b in range(n - 2):
            c = b + 1
            a_x = pos[c, 0] - pos[c - 1, 0]
            a_y = pos[c, 1] - pos[c - 1, 1]
            b_x = pos[c + 1, 0] - pos[c, 0]
            b_y = pos[c + 1, 1] - pos[c, 1]
            a2 = a_x * a_x + a_y * a_y
            b2 = b_x * b_x + b_y * b_y
            gix = -a_y / a2
            giy = a_x / a2
            gkx = -b_y / b2
            gky = b_x / b2
            gjx = -gix - gkx
            gjy = -giy - gky
            trate = (
                gix * vel[c - 1, 0]
                + giy * vel[c - 1, 1]
                + gjx * vel[c, 0]
                + gjy * vel[c, 1]
                + gkx * vel[c + 1, 0]
                + gky * vel[c + 1, 1]
            )
            s_gen = (
                (gix * gix + giy * giy) * minv[c - 1]
                + (gjx * gjx + gjy * gjy) * minv[c]
                + (gkx * gkx + gky * gky) * minv[c + 1]
            )
            expo = bend_c[b] * dt * s_gen
            if expo > DAMPING_EXP_CAP:
                expo = DAMPING_EXP_CAP
            dth = trate * (np.exp(-expo) - 1.0) / s_gen
            vel[c - 1, 0] += dth * gix * minv[c - 1]
            vel[c - 1, 1] += dth * giy * minv[c - 1]
            vel[c, 0] += dth * gjx * minv[c]
            vel[c, 1] += dth * gjy * minv[c]
            vel[c + 1, 0] += dth * gkx * minv[c + 1]
            vel[c + 1, 1] += dth * gky * minv[c + 1]

        # Whole-body deformation damping: decay velocity deviations from
        # the rigid (translation + rotation) field.
        if deform_decay < 1.0:
            comx = 0.0
            comy = 0.0
            vbx = 0.0
            vby = 0.0
            for i in range(n):
                comx += minert[i] * pos[i, 0]
                comy += minert[i] * pos[i, 1]
                vbx += minert[i] * vel[i, 0]
                vby += minert[i] * vel[i, 1]
            comx /= total_mass
            comy /= total_mass
            vbx /= total_mass
            vby /= total_mass
            ang = 0.0
            inert = 0.0
            for i in range(n):
                rx = pos[i, 0] - comx
                ry = pos[i, 1] - comy
                ang += minert[i] * (rx * (vel[i, 1] - vby) - ry * (vel[i, 0] - vbx))
                inert += minert[i] * (rx * rx + ry * ry)
            om = ang / inert
            for i in range(n):
                rx = pos[i, 0] - comx
                ry = pos[i, 1] - comy
                rgx = vbx - om * ry
                rgy = vby + om * rx
                vel[i, 0] = rgx + (vel[i, 0] - rgx) * deform_decay
                vel[i, 1] = rgy + (vel[i, 1] - rgy) * deform_decay

        vmax2 = 0.0
        com_vx = 0.0
        for i in range(n):
            s2 = vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1]
            if s2 > vmax2:
                vmax2 = s2
            pos[i, 0] += dt * vel[i, 0]
            pos[i, 1] += dt * vel[i, 1]
            com_vx += minert[i] * vel[i, 0]
        if vmax2 > INSTABILITY_SPEED * INSTABILITY_SPEED:
            return step
        com_vx = com_vx / total_mass * path_speed_scale
        pose[0] += dt * com_vx * np.cos(pose[2])
        pose[1] += dt * com_vx * np.sin(pose[2])
        if yaw_rate != 0.0:
            h = pose[2] + dt * yaw_rate
            if h > np.pi:
                h -= 2.0 * np.pi
            elif h <= -np.pi:
                h += 2.0 * np.pi
            pose[2] = h

    return -1
