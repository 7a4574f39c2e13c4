"""Tests for the discretized shell body."""

from __future__ import annotations

import numpy as np
import pytest

from inchtwin.body import (
    BodyState,
    GRAVITY,
    LEG_SPAN,
    MaterialParams,
    TOTAL_ROBOT_MASS,
    apply_element_damping,
    build_body,
    elastic_energy,
    elastic_forces,
    gravity_loads,
    rest_state,
    settle_pinned,
    stability_dt_max,
)

RNG = np.random.default_rng(7)


@pytest.fixture(scope="module")
def mesh():
    return build_body(MaterialParams(), 21)


def _perturbed(mesh, scale=1e-3, seed=0):
    rng = np.random.default_rng(seed)
    st = rest_state(mesh)
    st.positions = st.positions + rng.normal(0.0, scale, st.positions.shape)
    return st


class TestBuild:
    def test_total_mass_exact(self, mesh):
        assert mesh.total_mass == pytest.approx(TOTAL_ROBOT_MASS, abs=1e-8)

    def test_leg_span(self, mesh):
        span = mesh.rest_positions[-1, 0] - mesh.rest_positions[0, 0]
        assert span == pytest.approx(LEG_SPAN, abs=1e-4)

    def test_minimal_mesh_keeps_invariants(self):
        small = build_body(MaterialParams(), 7)
        assert small.total_mass == pytest.approx(TOTAL_ROBOT_MASS, abs=1e-8)
        span = small.rest_positions[-1, 0] - small.rest_positions[0, 0]
        assert span == pytest.approx(LEG_SPAN, abs=1e-4)

    @pytest.mark.parametrize("n", [6, 5, 8, 20])
    def test_rejects_bad_node_counts(self, n):
        with pytest.raises(ValueError):
            build_body(MaterialParams(), n)

    def test_uniform_natural_curvature(self, mesh):
        angles = mesh.bend_rest_angle
        assert np.allclose(angles, angles[0], atol=1e-12)
        # Half circle split over n-1 segments.
        assert abs(angles.sum() + angles[0]) == pytest.approx(np.pi, rel=1e-9)

    def test_special_nodes(self, mesh):
        front, back = mesh.shoe_node_indices
        assert (front, back) == (mesh.n_nodes - 1, 0)
        mf, mb = mesh.magnet_node_indices
        assert 0 < mb < mesh.chassis_node_indices[0]
        assert mesh.chassis_node_indices[-1] < mf < mesh.n_nodes - 1

    def test_pinned_tip_reactions_carry_weight(self, mesh):
        """Static equilibrium: tip reactions sum to m g within 1e-6 N."""
        positions = settle_pinned(mesh, tol=1e-8)
        state = BodyState(positions, np.zeros_like(positions))
        residual = elastic_forces(mesh, state) + gravity_loads(mesh, 0.0)
        reactions = -residual[[0, -1]].sum(axis=0)
        weight = mesh.total_mass * GRAVITY
        assert reactions[1] == pytest.approx(weight, abs=1e-6)
        assert reactions[0] == pytest.approx(0.0, abs=1e-6)


class TestElastic:
    def test_rest_is_force_free(self, mesh):
        f = elastic_forces(mesh, rest_state(mesh))
        assert np.abs(f).max() < 1e-9

    def test_rest_energy_zero(self, mesh):
        assert elastic_energy(mesh, rest_state(mesh)) == 0.0

    def test_translation_invariance(self, mesh):
        st = rest_state(mesh)
        st.positions = st.positions + np.array([0.37, -0.12])
        assert np.abs(elastic_forces(mesh, st)).max() < 1e-9
        assert elastic_energy(mesh, st) == pytest.approx(0.0, abs=1e-12)

    def test_rotation_invariance(self, mesh):
        st = _perturbed(mesh, 2e-3, seed=3)
        e0 = elastic_energy(mesh, st)
        c, s = np.cos(0.7), np.sin(0.7)
        rot = np.array([[c, -s], [s, c]])
        st2 = BodyState(st.positions @ rot.T, st.velocities.copy())
        assert elastic_energy(mesh, st2) == pytest.approx(e0, rel=1e-10)

    def test_forces_match_energy_gradient(self, mesh):
        """Conservative forces = -dE/dx by central differences, 50 states."""
        h = 1e-8
        for seed in range(50):
            st = _perturbed(mesh, 1e-3, seed=seed)
            f = elastic_forces(mesh, st)  # zero velocities: conservative
            fd = np.zeros_like(f)
            for i in range(mesh.n_nodes):
                for d in range(2):
                    up = BodyState(st.positions.copy(), st.velocities)
                    dn = BodyState(st.positions.copy(), st.velocities)
                    up.positions[i, d] += h
                    dn.positions[i, d] -= h
                    fd[i, d] = -(
                        elastic_energy(mesh, up) - elastic_energy(mesh, dn)
                    ) / (2.0 * h)
            assert np.abs(f - fd).max() <= 1e-4 * max(np.abs(fd).max(), 1e-9)

    def test_uniform_stretch_energy_closed_form(self, mesh):
        st = rest_state(mesh)
        st.positions = st.positions * 1.01  # scaling preserves all angles
        expected = 0.5 * (
            mesh.axial_stiffness * (0.01 * mesh.axial_rest_length) ** 2
        ).sum()
        assert elastic_energy(mesh, st) == pytest.approx(expected, rel=1e-9)

    def test_rest_is_strict_local_minimum(self, mesh):
        for seed in range(50):
            st = _perturbed(mesh, 1e-4, seed=seed + 100)
            assert elastic_energy(mesh, st) > 0.0

    def test_internal_forces_are_momentum_neutral(self, mesh):
        for seed in range(25):
            st = _perturbed(mesh, 2e-3, seed=seed)
            st.velocities = RNG.normal(0.0, 0.05, st.velocities.shape)
            f = elastic_forces(mesh, st)
            assert np.abs(f.sum(axis=0)).max() < 1e-9
            r = st.positions - st.positions.mean(axis=0)
            torque = (r[:, 0] * f[:, 1] - r[:, 1] * f[:, 0]).sum()
            assert abs(torque) < 1e-9


class TestDamping:
    def test_damping_conserves_momentum(self, mesh):
        st = _perturbed(mesh, 1e-3, seed=5)
        st.velocities = RNG.normal(0.0, 0.1, st.velocities.shape)
        m = mesh.inertial_masses[:, None]
        p0 = (m * st.velocities).sum(axis=0)
        r = st.positions - (m * st.positions).sum(axis=0) / m.sum()
        l0 = (m[:, 0] * (r[:, 0] * st.velocities[:, 1] - r[:, 1] * st.velocities[:, 0])).sum()
        apply_element_damping(mesh, st, 1e-4)
        p1 = (m * st.velocities).sum(axis=0)
        l1 = (m[:, 0] * (r[:, 0] * st.velocities[:, 1] - r[:, 1] * st.velocities[:, 0])).sum()
        np.testing.assert_allclose(p1, p0, rtol=0, atol=1e-12)
        assert l1 == pytest.approx(l0, abs=1e-12)

    def test_damping_dissipates(self, mesh):
        st = _perturbed(mesh, 1e-3, seed=6)
        st.velocities = RNG.normal(0.0, 0.1, st.velocities.shape)
        m = mesh.inertial_masses[:, None]
        ke0 = 0.5 * float((m * st.velocities**2).sum())
        apply_element_damping(mesh, st, 1e-3)
        ke1 = 0.5 * float((m * st.velocities**2).sum())
        assert ke1 <= ke0 + 1e-15

    def test_rigid_motion_unaffected(self, mesh):
        st = rest_state(mesh)
        st.velocities = st.velocities + np.array([0.3, -0.1])
        before = st.velocities.copy()
        apply_element_damping(mesh, st, 1e-3)
        np.testing.assert_allclose(st.velocities, before, atol=1e-15)


class TestGravity:
    def test_flat_total_weight(self, mesh):
        g = gravity_loads(mesh, 0.0)
        assert g[:, 0].sum() == pytest.approx(0.0, abs=1e-12)
        assert -g[:, 1].sum() == pytest.approx(
            TOTAL_ROBOT_MASS * GRAVITY, rel=1e-9
        )
        assert -g[:, 1].sum() == pytest.approx(1.0068, abs=2e-4)

    def test_slope_components(self, mesh):
        g = gravity_loads(mesh, 7.0)
        w = TOTAL_ROBOT_MASS * GRAVITY
        assert -g[:, 0].sum() == pytest.approx(w * np.sin(np.radians(7.0)), rel=1e-9)
        assert -g[:, 1].sum() == pytest.approx(w * np.cos(np.radians(7.0)), rel=1e-9)

    def test_negative_slope_mirrors(self, mesh):
        gp = gravity_loads(mesh, 7.0)
        gm = gravity_loads(mesh, -7.0)
        np.testing.assert_allclose(gp[:, 0], -gm[:, 0], rtol=1e-12)
        np.testing.assert_allclose(gp[:, 1], gm[:, 1], rtol=1e-12)

    def test_rejects_steep_slopes(self, mesh):
        with pytest.raises(ValueError):
            gravity_loads(mesh, 31.0)


def test_stability_bound_scales_with_stiffness():
    soft = build_body(MaterialParams(youngs_modulus=100e3), 15)
    stiff = build_body(MaterialParams(youngs_modulus=900e3), 15)
    assert stability_dt_max(stiff) < stability_dt_max(soft)
    assert stability_dt_max(soft, contact_stiffness=1e9) < 1e-4
