import math

import numpy as np
import pytest

from holodrive.core import frobenius
from holodrive.gates import (
    B0,
    B1,
    BA,
    BE,
    COMPUTATIONAL_2Q,
    IDX_10,
    IDX_AE,
    ORANGE_ALLOWED,
    SPECTATORS_2Q,
    TRIANGLE_ALLOWED,
    TripodParams,
    dark_frame,
    gate_u2,
    gate_ub,
    gate_up,
    lambda_dark_state,
    lambda_family,
    lambda_hamiltonian,
    structure_check,
    tripod_family,
    tripod_hamiltonian,
    two_qubit_family,
)
from holodrive.paths import geodesic_triangle_schedule, orange_slice_schedule, solid_angle


def wrapped_phase_difference(a, b):
    return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


class TestTripodParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            TripodParams(0.0, 0.1, 0.2)
        with pytest.raises(ValueError):
            TripodParams(1.0, -0.1, 0.0)
        with pytest.raises(ValueError):
            TripodParams(1.0, 3.5, 0.0)


class TestLambdaHamiltonian:
    def test_pole_decouples_the_qubit_level(self):
        h = lambda_hamiltonian(TripodParams(1.0, 0.0, 0.0))
        assert abs(h[BE, B1]) == 0.0
        assert h[BE, BA] == pytest.approx(1.0)
        assert np.allclose(h[B0, :], 0.0) and np.allclose(h[:, B0], 0.0)

    def test_dark_state_annihilated_everywhere(self, rng):
        for _ in range(200):
            p = TripodParams(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.0, math.pi)),
                             float(rng.uniform(-math.pi, math.pi)))
            d = lambda_dark_state(p)
            assert np.linalg.norm(lambda_hamiltonian(p) @ d) < 1e-12
            assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)

    def test_spectrum_is_bright_pair_and_double_zero(self, rng):
        for _ in range(25):
            p = TripodParams(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.0, math.pi)),
                             float(rng.uniform(-math.pi, math.pi)))
            w = np.linalg.eigvalsh(lambda_hamiltonian(p))
            assert np.allclose(w, [-p.omega, 0.0, 0.0, p.omega], atol=1e-10)

    def test_zero_row_for_decoupled_state(self, rng):
        p = TripodParams(1.4, 1.0, 0.3)
        h = lambda_hamiltonian(p)
        assert np.allclose(h[B0, :], 0.0)


class TestTripodHamiltonian:
    def test_pole_dark_states_are_bare_qubit(self):
        p = TripodParams(1.0, 0.0, 0.0)
        frame = dark_frame(p)
        assert np.allclose(frame[:, 0], [1.0, 0.0, 0.0, 0.0])
        assert np.allclose(frame[:, 1], [0.0, 1.0, 0.0, 0.0])

    def test_d2_annihilated_for_all_angles(self, rng):
        for _ in range(50):
            theta = float(rng.uniform(0.0, math.pi))
            phi = float(rng.uniform(-math.pi, math.pi))
            p = TripodParams(1.0, theta, phi)
            d2 = np.zeros(4, dtype=complex)
            d2[B0] = -math.sin(phi)
            d2[B1] = math.cos(phi)
            assert np.linalg.norm(tripod_hamiltonian(p) @ d2) < 1e-12

    def test_equator_first_dark_state_is_auxiliary(self):
        frame = dark_frame(TripodParams(1.0, math.pi / 2, 0.7))
        assert np.allclose(frame[:, 0], [0.0, 0.0, -1.0, 0.0], atol=1e-12)

    def test_dark_frame_orthonormal_and_dark(self, rng):
        for _ in range(100):
            p = TripodParams(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.0, math.pi)),
                             float(rng.uniform(-math.pi, math.pi)))
            frame = dark_frame(p)
            assert frobenius(frame.conj().T @ frame - np.eye(2)) < 1e-12
            assert np.linalg.norm(tripod_hamiltonian(p) @ frame) < 1e-12

    def test_bright_energies(self, rng):
        for _ in range(25):
            p = TripodParams(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.0, math.pi)),
                             float(rng.uniform(-math.pi, math.pi)))
            w = np.linalg.eigvalsh(tripod_hamiltonian(p))
            assert np.allclose(w, [-p.omega, 0.0, 0.0, p.omega], atol=1e-10)

    def test_family_gradients_match_central_differences(self, rng):
        for family in (lambda_family(1.3), tripod_family(0.8), two_qubit_family(1.1)):
            point = np.array([1.1, 0.4])
            grads = family.analytic_gradient(point)
            h = 1e-6
            for axis in range(2):
                step = np.zeros(2)
                step[axis] = h
                fd = (family(point + step) - family(point - step)) / (2.0 * h)
                assert frobenius(fd - grads[axis]) < 1e-6


class TestGateUP:
    def test_identity_at_zero_opening(self):
        report = gate_up(0.0, 2.0, grid=512)
        assert report.fidelity >= 1.0 - 1e-8
        assert wrapped_phase_difference(report.gamma, 0.0) < 1e-6

    def test_phase_tracks_minus_opening(self):
        report = gate_up(math.pi / 2, 5.0, grid=1024)
        assert report.fidelity >= 1.0 - 1e-6
        assert wrapped_phase_difference(report.gamma, -math.pi / 2) < 1e-6
        assert report.leakage <= 1e-6

    def test_rate_independence(self):
        fidelities = [gate_up(math.pi / 3, horizon, grid=1024).fidelity for horizon in (1.0, 5.0, 25.0)]
        assert max(fidelities) - min(fidelities) < 1e-5

    def test_phase_additivity(self):
        phi_a, phi_b = 0.6, 0.9
        u_a = gate_up(phi_a, 3.0, grid=1024).qubit_unitary
        u_b = gate_up(phi_b, 3.0, grid=1024).qubit_unitary
        u_ab = gate_up(phi_a + phi_b, 3.0, grid=1024).qubit_unitary
        assert frobenius(u_b @ u_a - u_ab) < 1e-5

    def test_bare_mode_approaches_the_holonomy(self):
        infidelities = [1.0 - gate_up(math.pi / 2, horizon, grid=1024, mode="bare").fidelity
                        for horizon in (10.0, 100.0)]
        assert infidelities[1] <= infidelities[0]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            gate_up(0.3, 1.0, grid=64, mode="sideways")

    def test_extracted_phase_equals_minus_half_solid_angle(self):
        for phi1 in (math.pi / 6, math.pi / 4, math.pi / 2, math.pi):
            loop = orange_slice_schedule(phi1, 5.0)
            report = gate_up(phi1, 5.0, grid=1024)
            assert wrapped_phase_difference(report.gamma, -solid_angle(loop) / 2.0) < 1e-6


class TestGateUB:
    def test_identity_at_zero_opening(self):
        report = gate_ub(0.0, 2.0, grid=512)
        assert report.fidelity >= 1.0 - 1e-8

    def test_rotation_by_the_opening(self):
        report = gate_ub(math.pi / 4, 5.0, grid=1024)
        assert report.fidelity >= 1.0 - 1e-6
        assert abs(report.gamma - math.pi / 4) < 1e-5
        assert report.leakage <= 1e-6

    def test_composition_does_not_commute_with_phase_gates(self):
        # U_B(pi/4) U_P(pi/2) U_B(-pi/4) is unitary but far from every U_P
        u = (gate_ub(math.pi / 4, 3.0, grid=1024).qubit_unitary
             @ gate_up(math.pi / 2, 3.0, grid=1024).qubit_unitary
             @ gate_ub(-math.pi / 4, 3.0, grid=1024).qubit_unitary)
        assert frobenius(u.conj().T @ u - np.eye(2)) < 1e-5
        # fidelity against diag(1, e^{i a}) maximized over a stays below 0.99
        alphas = np.linspace(-math.pi, math.pi, 721)
        fidelities = [abs(u[0, 0] + np.exp(-1j * a) * u[1, 1]) / 2.0 for a in alphas]
        assert max(fidelities) < 0.99


class TestTwoQubitFamily:
    def test_spectator_basis_states_are_exact_zero_modes(self, rng):
        family = two_qubit_family(1.0)
        for _ in range(20):
            point = np.array([rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi)])
            h = family(point)
            for idx in SPECTATORS_2Q:
                assert np.all(h[idx, :] == 0.0) and np.all(h[:, idx] == 0.0)

    def test_embedded_dark_state(self, rng):
        family = two_qubit_family(1.0)
        for _ in range(20):
            theta = rng.uniform(0, math.pi)
            phi = rng.uniform(-math.pi, math.pi)
            h = family(np.array([theta, phi]))
            dark = np.zeros(16, dtype=complex)
            dark[IDX_10] = math.cos(theta / 2.0)
            dark[IDX_AE] = math.sin(theta / 2.0) * np.exp(1j * phi)
            assert np.linalg.norm(h @ dark) < 1e-12

    def test_hermitian(self, rng):
        family = two_qubit_family(1.4)
        point = np.array([0.8, -0.5])
        h = family(point)
        assert frobenius(h - h.conj().T) < 1e-12


class TestGateU2:
    def test_controlled_phase_of_pi(self):
        report = gate_u2(math.pi, 5.0, grid=1024)
        assert report.fidelity >= 1.0 - 1e-6
        assert report.spectator_deviation <= 1e-10
        assert report.leakage <= 1e-6
        assert wrapped_phase_difference(report.gamma, -math.pi) < 1e-6

    def test_identity_at_zero_opening(self):
        report = gate_u2(0.0, 2.0, grid=512)
        assert report.fidelity >= 1.0 - 1e-8
        assert report.spectator_deviation <= 1e-10


class TestStructureCheck:
    @pytest.mark.parametrize("segment", range(4))
    def test_orange_slice_steps_within_allowed_transitions(self, segment):
        loop = orange_slice_schedule(math.pi / 2, 5.0)
        report = structure_check(loop, lambda_family(1.0), segment, allowed=ORANGE_ALLOWED[segment])
        assert report.passed, (segment, sorted(report.observed))

    @pytest.mark.parametrize("segment", range(4))
    def test_geodesic_triangle_steps_within_allowed_transitions(self, segment):
        loop = geodesic_triangle_schedule(math.pi / 4, 5.0)
        report = structure_check(loop, tripod_family(1.0), segment, allowed=TRIANGLE_ALLOWED[segment])
        assert report.passed, (segment, sorted(report.observed))

    def test_equator_stage_of_triangle_avoids_auxiliary_level(self):
        loop = geodesic_triangle_schedule(math.pi / 4, 5.0)
        report = structure_check(loop, tripod_family(1.0), 1)
        assert ("a", "e") not in report.observed
        assert ("0", "a") not in report.observed
        assert ("1", "a") not in report.observed

    def test_segment_out_of_range(self):
        loop = orange_slice_schedule(1.0, 5.0)
        with pytest.raises(ValueError):
            structure_check(loop, lambda_family(1.0), 4)