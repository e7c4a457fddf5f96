"""On-shell scattering matrices, channel coefficients, and conductance.

The general route assembles Sigma(k) from an arbitrary valid (L, M) boundary
condition and Q0(k^2 + i0); the specialized routes implement the closed forms
for the named families and must agree with the general one on their domains
(this is enforced by the test suite).  All evaluations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .boundary import BoundaryCondition, HermitianBlockParams
from .geometry import QProvider, SingularAtEnergy
from .numerics import EnergyPoint, lu_factor, max_abs, sqrt_neg

#: condition-estimate threshold signalling k^2 in the exceptional set Z_H
COND_LIMIT = 1e12

#: distinguished conductance value for a superconducting channel
INFINITE = math.inf


class UnitarityError(Exception):
    """The assembled matrix failed the unitarity invariant."""


class WrongChannelCount(Exception):
    pass


@dataclass(frozen=True)
class SMatrix:
    """Unitary n x n scattering matrix at momentum k > 0.

    Diagonal entries are reflection amplitudes r_j, off-diagonal entries
    transmission amplitudes t_lj.  Construction fails unless
    ||Sigma Sigma* - I||_inf < unitarity_tol.
    """

    k: float
    matrix: np.ndarray
    unitarity_tol: float = 1e-8

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("scattering matrix must be square")
        if self.k <= 0:
            raise ValueError("momentum must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        res = self.unitarity_residual
        if not res < self.unitarity_tol:
            raise UnitarityError(
                f"||Sigma Sigma* - I|| = {res:.3e} at k = {self.k:g}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def unitarity_residual(self) -> float:
        m = self.matrix
        return max_abs(m @ m.conj().T - np.eye(m.shape[0]))

    def reflection_amplitude(self, j: int = 0) -> complex:
        return complex(self.matrix[j, j])

    def transmission_amplitude(self, l: int, j: int) -> complex:
        return complex(self.matrix[l, j])


@dataclass(frozen=True)
class ChannelCoefficients:
    """Reflection probabilities R_j and transmission probabilities T_lj."""

    reflection: np.ndarray
    transmission: np.ndarray


def _solve_checked(a, b, k):
    fac = lu_factor(a)
    if fac.condition > COND_LIMIT:
        raise SingularAtEnergy(
            f"condition estimate {fac.condition:.2e} at k = {k:g} (k^2 in Z_H)")
    return fac.solve(b)


def _energy(k: float, eps_imag: float = 0.0) -> EnergyPoint:
    if k <= 0:
        raise ValueError("momentum must be positive")
    if eps_imag:
        return EnergyPoint(k * k + 1j * eps_imag)
    return EnergyPoint.from_momentum(k)


def smatrix(bc: BoundaryCondition, provider: QProvider, k: float, *,
            tol: float = 1e-10, eps_imag: float = 0.0,
            unitarity_tol: float = 1e-8) -> SMatrix:
    """Scattering matrix for an arbitrary valid (L, M) boundary condition.

    Sigma(k) = [ikC + Z - (X2 Q0 - A2)(Y Q0 - B)^-1 (ikA1 + X1)]^-1
             . [ikC - Z - (X2 Q0 - A2)(Y Q0 - B)^-1 (ikA1 - X1)]

    with Q0 = Q0(k^2 + i0).  A solve whose condition estimate exceeds
    COND_LIMIT raises SingularAtEnergy (the energy lies in the exceptional
    set Z_H).  ``eps_imag`` moves the evaluation to k^2 + i*eps for
    diagnostics; unitarity then degrades accordingly.
    """
    p = _energy(k, eps_imag)
    ik = -sqrt_neg(p)  # equals ik at the boundary limit
    q0 = provider.q0(p, tol)
    w = _solve_checked((bc.Y @ q0 - bc.B).T, (bc.X2 @ q0 - bc.A2).T, k).T
    plus = ik * bc.C + bc.Z - w @ (ik * bc.A1 + bc.X1)
    minus = ik * bc.C - bc.Z - w @ (ik * bc.A1 - bc.X1)
    sigma = _solve_checked(plus, minus, k)
    return SMatrix(k, sigma, unitarity_tol)


def smatrix_hermitian(params: HermitianBlockParams, provider: QProvider, k: float, *,
                      tol: float = 1e-10, eps_imag: float = 0.0,
                      unitarity_tol: float = 1e-8) -> SMatrix:
    """Dirichlet-type closed form: Cayley transform of C + A*(Q0-B)^-1 A."""
    p = _energy(k, eps_imag)
    lead = 1.0 / sqrt_neg(p)  # equals i/k at the boundary limit
    q0 = provider.q0(p, tol)
    x = params.C + params.A.conj().T @ _solve_checked(q0 - params.B, params.A, k)
    eye = np.eye(params.n)
    sigma = _solve_checked((x - lead * eye).T, (x + lead * eye).T, k).T
    return SMatrix(k, sigma, unitarity_tol)


def smatrix_neumann(params: HermitianBlockParams, provider: QProvider, k: float, *,
                    tol: float = 1e-10, eps_imag: float = 0.0,
                    unitarity_tol: float = 1e-8) -> SMatrix:
    """Neumann-type closed form: [ik + X][ik - X]^-1, X = C + A*(Q0-B)^-1 A."""
    p = _energy(k, eps_imag)
    ik = -sqrt_neg(p)
    q0 = provider.q0(p, tol)
    x = params.C + params.A.conj().T @ _solve_checked(q0 - params.B, params.A, k)
    eye = np.eye(params.n)
    sigma = _solve_checked((ik * eye - x).T, (ik * eye + x).T, k).T
    return SMatrix(k, sigma, unitarity_tol)


def smatrix_mixed(params: HermitianBlockParams, provider: QProvider, k: float,
                  variant: str, *, tol: float = 1e-10, eps_imag: float = 0.0,
                  unitarity_tol: float = 1e-8) -> SMatrix:
    """The two inverse-Q families.

    variant "eta_empty":  [ik + C - A*(Q0^-1+B)^-1 A][ik - C + A*(Q0^-1+B)^-1 A]^-1
    variant "eta_lower":  [C + 1/(ik) ... ] with the Dirichlet lead block; see
    the mixed_* builders in :mod:`hedgehog.boundary` for the matching (L, M).
    """
    if variant not in ("eta_empty", "eta_lower"):
        raise ValueError(f"unknown variant {variant!r}")
    p = _energy(k, eps_imag)
    ik = -sqrt_neg(p)
    lead = 1.0 / sqrt_neg(p)
    q0 = provider.q0(p, tol)
    eye = np.eye(params.n)
    q0_inv = _solve_checked(q0, eye, k)
    x = params.A.conj().T @ _solve_checked(q0_inv + params.B, params.A, k)
    if variant == "eta_empty":
        plus = ik * eye + params.C - x
        minus = ik * eye - params.C + x
    else:
        plus = params.C + lead * eye - x
        minus = params.C - lead * eye - x
    sigma = _solve_checked(minus.T, plus.T, k).T
    return SMatrix(k, sigma, unitarity_tol)


def smatrix_vertex(C, Z, k: float, *, unitarity_tol: float = 1e-8) -> SMatrix:
    """Single-vertex wire system: Sigma = [ikC + Z]^-1 [ikC - Z]."""
    C = np.asarray(C, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    sigma = _solve_checked(1j * k * C + Z, 1j * k * C - Z, k)
    return SMatrix(k, sigma, unitarity_tol)


def delta_prime_limit_sigma(C, k: float, *, unitarity_tol: float = 1e-8) -> SMatrix:
    """Two-lead coincidence limit of the Neumann-type family.

    Element form of (ik + C)(ik - C)^-1 for Hermitian 2x2 C; for
    C = [[g, -g], [-g, g]] this is the scattering matrix of the
    delta'-interaction on the line.
    """
    C = np.asarray(C, dtype=complex)
    if C.shape != (2, 2):
        raise WrongChannelCount("the coincidence limit is a two-lead formula")
    if not numerics.is_hermitian(C, 1e-10):
        raise ValueError("C must be Hermitian")
    tr = C[0, 0] + C[1, 1]
    det = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    den = k * k + 1j * k * tr - det
    sigma = np.array([
        [(k * k - 1j * k * (C[0, 0] - C[1, 1]) + det) / den,
         -2j * k * C[0, 1] / den],
        [-2j * k * C[1, 0] / den,
         (k * k - 1j * k * (C[1, 1] - C[0, 0]) + det) / den],
    ])
    return SMatrix(k, sigma, unitarity_tol)


def zero_resistance_sigma(alpha1, alpha2, B, provider: QProvider, k: float, *,
                          tol: float = 1e-10,
                          unitarity_tol: float = 1e-8) -> SMatrix:
    """Element form of the zero-ballistic-resistance family (independent of
    the remaining blocks).

    With Qt = Q0 - B and the coupling form
    c = |a2|^2 Qt11 + |a1|^2 Qt22 - conj(a1) a2 Qt12 - conj(a2) a1 Qt21:
    s11 = s22 = c / (c - 2i det(Qt)/k),  s12 = s21 = 1 - s11.
    """
    p = _energy(k)
    q0 = provider.q0(p, tol)
    if q0.shape != (2, 2):
        raise WrongChannelCount("zero-resistance is a two-lead formula")
    B = np.asarray(B, dtype=complex)
    qt = q0 - B
    a1, a2 = complex(alpha1), complex(alpha2)
    combo = (abs(a2) ** 2 * qt[0, 0] + abs(a1) ** 2 * qt[1, 1]
             - a1.conjugate() * a2 * qt[0, 1] - a2.conjugate() * a1 * qt[1, 0])
    d = 2j / k * (qt[0, 0] * qt[1, 1] - qt[0, 1] * qt[1, 0])
    s11 = combo / (combo - d)
    s12 = d / (d - combo)
    return SMatrix(k, np.array([[s11, s12], [s12, s11]]), unitarity_tol)


def two_horn_dirichlet_elements(A, B, gamma: float, provider: QProvider, k: float, *,
                                tol: float = 1e-10,
                                unitarity_tol: float = 1e-8) -> SMatrix:
    """Explicit two-lead Dirichlet-type elements (invertible A, C = gamma I).

    Builds the polynomial pieces Delta(k) and M_jl(k) in the entries of
    Qt = Q0 - B and returns Delta^-1 A^-1 M A; agrees with
    :func:`smatrix_hermitian` on its domain.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != (2, 2):
        raise WrongChannelCount("explicit elements are a two-lead formula")
    p = _energy(k)
    qt = provider.q0(p, tol) - B
    nu = A @ A.conj().T
    det_qt = qt[0, 0] * qt[1, 1] - qt[0, 1] * qt[1, 0]
    det_a2 = abs(np.linalg.det(A)) ** 2
    k2 = k * k
    cross = (nu[0, 1] * qt[1, 0] + nu[1, 0] * qt[0, 1]
             - nu[0, 0] * qt[1, 1] - nu[1, 1] * qt[0, 0])
    delta = ((k2 * gamma - 1j * k) * cross
             + (1j * k * gamma + 1.0) ** 2 * det_qt - k2 * det_a2)
    m11 = ((k2 * gamma + 1j * k) * (nu[1, 0] * qt[0, 1] - nu[1, 1] * qt[0, 0])
           + (k2 * gamma - 1j * k) * (nu[0, 1] * qt[1, 0] - nu[0, 0] * qt[1, 1])
           - (k2 * gamma ** 2 + 1.0) * det_qt - k2 * det_a2)
    m22 = ((k2 * gamma + 1j * k) * (nu[0, 1] * qt[1, 0] - nu[0, 0] * qt[1, 1])
           + (k2 * gamma - 1j * k) * (nu[1, 0] * qt[0, 1] - nu[1, 1] * qt[0, 0])
           - (k2 * gamma ** 2 + 1.0) * det_qt - k2 * det_a2)
    m12 = 2j * k * (nu[0, 1] * qt[0, 0] - nu[0, 0] * qt[0, 1])
    m21 = 2j * k * (nu[1, 0] * qt[1, 1] - nu[1, 1] * qt[1, 0])
    m = np.array([[m11, m12], [m21, m22]])
    sigma = _solve_checked(A, m, k) @ A / delta
    return SMatrix(k, sigma, unitarity_tol)


def amplitudes(s: SMatrix) -> ChannelCoefficients:
    """R_j = |s_jj|^2 and T_lj = |s_lj|^2."""
    prob = np.abs(np.asarray(s.matrix)) ** 2
    return ChannelCoefficients(reflection=np.diag(prob).copy(), transmission=prob)


def conductance(s: SMatrix, prefactor: float = 1.0):
    """Landauer two-lead conductance prefactor * T12 / R1.

    Returns INFINITE when the reflection probability vanishes while
    transmission does not (the superconducting signature); the physical
    prefactor e^2 / (pi hbar) is the caller's choice.
    """
    if s.n != 2:
        raise WrongChannelCount(f"conductance needs exactly 2 leads, got {s.n}")
    c = amplitudes(s)
    r1 = float(c.reflection[0])
    t12 = float(c.transmission[0, 1])
    if r1 < 1e-14:
        return INFINITE if t12 > 1e-14 else 0.0
    return prefactor * t12 / r1
