import math

import numpy as np
import pytest

from hedgehog import boundary
from hedgehog.boundary import HermitianBlockParams
from hedgehog.geometry import Torus
from hedgehog.numerics import EnergyPoint, solve
from hedgehog.scattering import (
    INFINITE,
    SMatrix,
    UnitarityError,
    WrongChannelCount,
    amplitudes,
    conductance,
    delta_prime_limit_sigma,
    smatrix,
    smatrix_hermitian,
    smatrix_mixed,
    smatrix_neumann,
    smatrix_vertex,
    two_horn_dirichlet_elements,
    zero_resistance_sigma,
)

from conftest import random_complex, random_hermitian


def params(rng, n, scale=1.0):
    return HermitianBlockParams(random_hermitian(rng, n, scale),
                                random_complex(rng, n, scale),
                                random_hermitian(rng, n, scale))


def max_diff(a, b):
    return np.max(np.abs(np.asarray(a) - np.asarray(b)))


class TestSMatrixInvariant:
    def test_rejects_non_unitary(self):
        with pytest.raises(UnitarityError):
            SMatrix(1.0, np.array([[0.5]]))

    def test_accepts_phase(self):
        s = SMatrix(2.0, np.array([[1j]]))
        assert s.unitarity_residual < 1e-15


class TestGeneralForm:
    def test_decoupled_neumann_is_identity(self, ring2, sphere3_2, torus2):
        bc = boundary.decoupled_neumann(np.zeros((2, 2)))
        for provider in (ring2, sphere3_2, torus2):
            for k in (0.7, 1.3, 2.4):
                s = smatrix(bc, provider, k)
                assert max_diff(s.matrix, np.eye(2)) < 1e-12

    def test_decoupled_dirichlet_is_minus_identity(self, ring2, sphere3_2, torus2):
        bc = boundary.decoupled_dirichlet(np.zeros((2, 2)))
        for provider in (ring2, sphere3_2, torus2):
            s = smatrix(bc, provider, 1.3)
            assert max_diff(s.matrix, -np.eye(2)) < 1e-12

    def test_neumann_type_cross_check_on_torus(self, rng, torus2):
        p = params(rng, 2)
        bc = boundary.neumann_type(p)
        s1 = smatrix(bc, torus2, 1.0)
        s2 = smatrix_neumann(p, torus2, 1.0)
        assert max_diff(s1.matrix, s2.matrix) < 1e-9

    def test_dirichlet_type_cross_check(self, rng, ring2):
        p = params(rng, 2)
        s1 = smatrix(boundary.dirichlet_type(p), ring2, 1.35)
        s2 = smatrix_hermitian(p, ring2, 1.35)
        assert max_diff(s1.matrix, s2.matrix) < 1e-9

    def test_mixed_cross_checks(self, rng, ring2):
        p = params(rng, 2)
        s1 = smatrix(boundary.mixed_eta_empty(p), ring2, 0.9)
        s2 = smatrix_mixed(p, ring2, 0.9, "eta_empty")
        assert max_diff(s1.matrix, s2.matrix) < 1e-9
        s3 = smatrix(boundary.mixed_eta_lower(p), ring2, 0.9)
        s4 = smatrix_mixed(p, ring2, 0.9, "eta_lower")
        assert max_diff(s3.matrix, s4.matrix) < 1e-9

    def test_vertex_cross_check(self, rng, ring2):
        z = random_hermitian(rng, 2)
        bc = boundary.vertex(np.eye(2), z)
        s1 = smatrix(bc, ring2, 1.1)
        s2 = smatrix_vertex(np.eye(2), z, 1.1)
        assert max_diff(s1.matrix, s2.matrix) < 1e-12

    def test_transmission_moduli_match_for_two_leads(self, rng, ring2):
        p = params(rng, 2)
        s = smatrix_neumann(p, ring2, 1.7)
        assert abs(s.matrix[0, 1]) == pytest.approx(abs(s.matrix[1, 0]), abs=1e-10)


class TestHermitian:
    def test_one_horn_reflection_modulus_one(self, sphere3_1, rng):
        beta, gamma = 0.4, -0.7
        alpha = 0.9 + 0.3j
        p = HermitianBlockParams(np.array([[beta]]), np.array([[alpha]]),
                                 np.array([[gamma]]))
        for k in np.linspace(0.2, 3.0, 29):
            if min(abs(k * k - e) for e in (0.0, 3.0, 8.0, 15.0)) < 1e-3:
                continue
            s = smatrix_hermitian(p, sphere3_1, float(k))
            q0 = sphere3_1.q0(EnergyPoint.from_momentum(float(k)))[0, 0]
            expected = ((1j * gamma * k - 1) * (q0 - beta) + 1j * abs(alpha) ** 2 * k) \
                / ((1j * gamma * k + 1) * (q0 - beta) + 1j * abs(alpha) ** 2 * k)
            assert s.matrix[0, 0] == pytest.approx(expected, abs=1e-10)
            assert abs(s.matrix[0, 0]) == pytest.approx(1.0, abs=1e-10)

    def test_product_form_invertible_a(self, rng, ring2):
        # [ik A A* + (ik g - 1)(Q0 - B)] [ik A A* + (ik g + 1)(Q0 - B)]^-1
        gamma = 0.6
        a = random_complex(rng, 2) + 2 * np.eye(2)
        b = random_hermitian(rng, 2)
        k = 1.45
        p = HermitianBlockParams(b, a, gamma * np.eye(2))
        s = smatrix_hermitian(p, ring2, k)
        q0 = ring2.q0(EnergyPoint.from_momentum(k))
        qt = q0 - b
        aa = a @ a.conj().T
        product = solve(a, 1j * k * aa + (1j * k * gamma - 1) * qt) @ \
            np.linalg.inv(1j * k * aa + (1j * k * gamma + 1) * qt) @ a
        assert max_diff(s.matrix, product) < 1e-9

    def test_matches_two_horn_elements(self, rng, ring2):
        a = random_complex(rng, 2) + 2 * np.eye(2)
        b = random_hermitian(rng, 2)
        gamma = -0.4
        p = HermitianBlockParams(b, a, gamma * np.eye(2))
        k = 0.85
        s1 = smatrix_hermitian(p, ring2, k)
        s2 = two_horn_dirichlet_elements(a, b, gamma, ring2, k)
        assert max_diff(s1.matrix, s2.matrix) < 1e-9


class TestNeumann:
    def test_sigma_minus_one_at_point_level(self, sphere3_1):
        # Q0(1.25) = 0 on the unit three-sphere, so (4.3) gives 1/(-1)
        p = HermitianBlockParams(np.zeros((1, 1)), np.eye(1), np.zeros((1, 1)))
        s = smatrix_neumann(p, sphere3_1, math.sqrt(1.25))
        assert s.matrix[0, 0] == pytest.approx(-1.0, abs=1e-10)

    def test_kiselev_transmission(self, rng, torus2):
        alpha = 1.1
        p = HermitianBlockParams(np.zeros((2, 2)), alpha * np.eye(2), np.zeros((2, 2)))
        k = 1.0
        s = smatrix_neumann(p, torus2, k)
        q0 = torus2.q0(EnergyPoint.from_momentum(k))
        den = (k ** 2 * np.linalg.det(q0) + 1j * k * alpha ** 2 * (q0[0, 0] + q0[1, 1])
               - alpha ** 4)
        expected = 2j * k * alpha ** 2 * q0[1, 0] / den
        assert s.matrix[1, 0] == pytest.approx(expected, abs=1e-9)

    def test_explicit_elements_diagonal_a(self, rng, ring2):
        a1, a2, gamma = 0.8, -1.3, 0.35
        p = HermitianBlockParams(random_hermitian(rng, 2), np.diag([a1, a2]),
                                 gamma * np.eye(2))
        k = 1.15
        s = smatrix_neumann(p, ring2, k)
        qt = ring2.q0(EnergyPoint.from_momentum(k)) - p.B
        det_qt = np.linalg.det(qt)
        dn = (-(a1 * a2) ** 2 + (1j * k - gamma) * (a2 ** 2 * qt[0, 0] + a1 ** 2 * qt[1, 1])
              - (1j * k - gamma) ** 2 * det_qt)
        s11 = ((a1 * a2) ** 2 + (1j * k + gamma) * a2 ** 2 * qt[0, 0]
               - (1j * k - gamma) * a1 ** 2 * qt[1, 1] + (k ** 2 + gamma ** 2) * det_qt) / dn
        s22 = ((a1 * a2) ** 2 + (1j * k + gamma) * a1 ** 2 * qt[1, 1]
               - (1j * k - gamma) * a2 ** 2 * qt[0, 0] + (k ** 2 + gamma ** 2) * det_qt) / dn
        s12 = 2j * k * a1 * a2 * qt[0, 1] / dn
        s21 = 2j * k * a1 * a2 * qt[1, 0] / dn
        expected = np.array([[s11, s12], [s21, s22]])
        assert max_diff(s.matrix, expected) < 1e-9


class TestMixed:
    def test_eta_empty_trivial(self, ring2):
        p = HermitianBlockParams(random_hermitian(np.random.default_rng(3), 2),
                                 np.zeros((2, 2)), np.zeros((2, 2)))
        s = smatrix_mixed(p, ring2, 1.2, "eta_empty")
        assert max_diff(s.matrix, np.eye(2)) < 1e-12

    def test_eta_lower_trivial(self, ring2):
        p = HermitianBlockParams(random_hermitian(np.random.default_rng(4), 2),
                                 np.zeros((2, 2)), np.zeros((2, 2)))
        s = smatrix_mixed(p, ring2, 1.2, "eta_lower")
        assert max_diff(s.matrix, -np.eye(2)) < 1e-12

    def test_unknown_variant(self, ring2, rng):
        with pytest.raises(ValueError):
            smatrix_mixed(params(rng, 2), ring2, 1.0, "bogus")


class TestVertex:
    def test_trivial_cases(self):
        assert max_diff(smatrix_vertex(np.eye(2), np.zeros((2, 2)), 1.7).matrix,
                        np.eye(2)) < 1e-14
        assert max_diff(smatrix_vertex(np.zeros((2, 2)), np.eye(2), 1.7).matrix,
                        -np.eye(2)) < 1e-14

    def test_scalar_value(self):
        s = smatrix_vertex(np.eye(1), np.eye(1), 1.0)
        assert s.matrix[0, 0] == pytest.approx(1j, abs=1e-14)


class TestDeltaPrime:
    def test_symmetric_coupler_values(self):
        gamma = 2.0
        c = np.array([[gamma, -gamma], [-gamma, gamma]])
        s = delta_prime_limit_sigma(c, 1.0)
        expected_diag = (-0.5j) / (2 - 0.5j)
        expected_off = 2.0 / (2 - 0.5j)
        assert s.matrix[0, 0] == pytest.approx(expected_diag, abs=1e-12)
        assert s.matrix[1, 1] == pytest.approx(expected_diag, abs=1e-12)
        assert s.matrix[0, 1] == pytest.approx(expected_off, abs=1e-12)
        assert s.matrix[1, 0] == pytest.approx(expected_off, abs=1e-12)
        assert abs(s.matrix[0, 0]) ** 2 + abs(s.matrix[0, 1]) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_zero_coupler_is_identity(self):
        s = delta_prime_limit_sigma(np.zeros((2, 2)), 1.3)
        assert max_diff(s.matrix, np.eye(2)) < 1e-14

    def test_matches_matrix_form(self, rng):
        c = random_hermitian(rng, 2)
        k = 0.8
        s = delta_prime_limit_sigma(c, k)
        expected = np.linalg.solve(1j * k * np.eye(2) - c, (1j * k * np.eye(2) + c).T.conj().T)
        expected = (1j * k * np.eye(2) + c) @ np.linalg.inv(1j * k * np.eye(2) - c)
        assert max_diff(s.matrix, expected) < 1e-12


class TestZeroResistance:
    def test_generic_transmission_below_one(self, torus2):
        s = zero_resistance_sigma(1.0, 1.3, np.zeros((2, 2)), torus2, 1.0)
        assert abs(s.matrix[0, 1]) < 1.0 - 1e-6
        assert s.matrix[0, 0] == s.matrix[1, 1]
        assert s.matrix[0, 1] == s.matrix[1, 0]

    def test_superconducting_near_eigenvalue(self):
        t = Torus(np.eye(2), [[0.11, 0.23], [0.55, 0.81]], margin=1e-12)
        e0 = 4 * math.pi ** 2
        s = zero_resistance_sigma(1.0, 1.3, np.zeros((2, 2)), t, math.sqrt(e0 + 1e-8))
        assert abs(s.matrix[0, 1]) > 1.0 - 1e-6
        assert abs(s.matrix[0, 0]) < 1e-3

    def test_matches_general_formula(self, rng, torus2):
        b = random_hermitian(rng, 2)
        a1, a2 = 0.7 + 0.2j, -1.1 + 0.4j
        bc = boundary.zero_resistance(a1, a2, b, gamma=0.8, zeta=1.2 - 0.5j)
        for k in (0.8, 1.6):
            s1 = smatrix(bc, torus2, k)
            s2 = zero_resistance_sigma(a1, a2, b, torus2, k)
            assert max_diff(s1.matrix, s2.matrix) < 1e-9

    def test_unitarity_over_sweep(self, torus2):
        for k in np.linspace(0.5, 3.0, 12):
            s = zero_resistance_sigma(0.9, 1.2, np.zeros((2, 2)), torus2, float(k))
            assert s.unitarity_residual < 1e-8


class TestTwoHorn:
    def test_column_swap_permutes_elements(self, rng, ring2):
        a = random_complex(rng, 2) + 2 * np.eye(2)
        b = random_hermitian(rng, 2)
        k, gamma = 1.05, 0.3
        s = two_horn_dirichlet_elements(a, b, gamma, ring2, k).matrix
        a_swapped = a[:, ::-1].copy()
        # swapping A's columns re-attaches lead 1 to point 2 and vice versa,
        # but the Qt entries of the swapped system must be relabeled too
        ring_swapped = type(ring2)(ring2.radius, ring2.angles[::-1])
        s2 = two_horn_dirichlet_elements(a_swapped[::-1, :], b[::-1, :][:, ::-1],
                                         gamma, ring_swapped, k).matrix
        assert s2[0, 0] == pytest.approx(s[1, 1], abs=1e-9)
        assert s2[1, 1] == pytest.approx(s[0, 0], abs=1e-9)
        assert s2[0, 1] == pytest.approx(s[1, 0], abs=1e-9)
        assert s2[1, 0] == pytest.approx(s[0, 1], abs=1e-9)

    def test_unitarity(self, rng, ring2):
        a = random_complex(rng, 2) + 2 * np.eye(2)
        b = random_hermitian(rng, 2)
        s = two_horn_dirichlet_elements(a, b, 0.0, ring2, 1.3)
        assert s.unitarity_residual < 1e-8


class TestAmplitudesConductance:
    def test_identity(self):
        s = SMatrix(1.0, np.eye(2))
        c = amplitudes(s)
        assert np.allclose(c.reflection, 1.0)
        assert c.transmission[0, 1] == 0.0
        assert conductance(s) == 0.0

    def test_swap(self):
        s = SMatrix(1.0, np.array([[0.0, 1.0], [1.0, 0.0]]))
        c = amplitudes(s)
        assert np.allclose(c.reflection, 0.0)
        assert c.transmission[0, 1] == 1.0 and c.transmission[1, 0] == 1.0
        assert conductance(s) == INFINITE

    def test_delta_prime_ratio(self):
        gamma = 2.0
        c = np.array([[gamma, -gamma], [-gamma, gamma]])
        s = delta_prime_limit_sigma(c, 1.0)
        coeff = amplitudes(s)
        assert coeff.transmission[0, 1] == pytest.approx(16.0 / 17.0, abs=1e-12)
        assert conductance(s, prefactor=1.0) == pytest.approx(16.0, rel=1e-10)

    def test_wrong_channel_count(self, unit_ring):
        s = SMatrix(1.0, np.array([[1.0]]))
        with pytest.raises(WrongChannelCount):
            conductance(s)
