"""Complex scalar and small dense matrix kernel.

Branch-aware square roots of the spectral parameter, the special functions
needed by the closed-form Q-matrices (digamma, Macdonald K0), and an LU
solver/determinant with a condition estimate.  Everything here is pure and
safe to call concurrently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Named constants, 18 significant digits.
EULER_GAMMA = 0.577215664901532861
LN_2 = 0.693147180559945310


class NumericsError(Exception):
    pass


class SingularMatrix(NumericsError):
    """A pivot fell below the absolute floor during LU factorization."""


class DomainError(NumericsError):
    pass


class PoleAtNonPositiveInteger(NumericsError):
    pass


# ---------------------------------------------------------------------------
# Spectral parameter

@dataclass(frozen=True)
class EnergyPoint:
    """Spectral parameter z, optionally marking the limit E + i0 from above.

    When ``boundary_limit`` is set, z must be real and every branch-dependent
    quantity is evaluated as the upper-half-plane limit (so sqrt(-z) -> -ik
    for z = k^2 > 0).
    """

    z: complex
    boundary_limit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.boundary_limit and self.z.imag != 0.0:
            raise ValueError("boundary_limit requires a real energy")

    @classmethod
    def from_momentum(cls, k: float) -> "EnergyPoint":
        """The on-shell point z = k^2 + i0."""
        return cls(k * k, boundary_limit=True)


def sqrt_neg(p: EnergyPoint) -> complex:
    """sqrt(-z) on the branch with Re > 0 off the positive real axis.

    For a boundary-limit point z = E + i0 with E > 0 this returns -i*sqrt(E).
    """
    z = p.z
    if p.boundary_limit and z.real > 0.0:
        return -1j * math.sqrt(z.real)
    return cmath.sqrt(-z)


def sqrt_energy(p: EnergyPoint) -> complex:
    """sqrt(z) continued from the upper half-plane (Im >= 0; equals k at k^2+i0)."""
    return 1j * sqrt_neg(p)


# ---------------------------------------------------------------------------
# Special functions

# B_{2n}/(2n) for the asymptotic series of psi.
_PSI_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _cot(w: complex) -> complex:
    if abs(w.imag) > 20.0:
        # exp form, stable for large |Im|
        if w.imag > 0:
            q = cmath.exp(2j * w)
            return 1j * (q + 1.0) / (q - 1.0)
        q = cmath.exp(-2j * w)
        return -1j * (q + 1.0) / (q - 1.0)
    return cmath.cos(w) / cmath.sin(w)


def digamma(x) -> complex:
    """psi(x) for complex x away from the poles at 0, -1, -2, ...

    Recurrence shift to Re x >= 8 followed by the asymptotic series; the
    reflection formula handles Re x < 1/2.
    """
    x = complex(x)
    if x.imag == 0.0 and x.real <= 0.0 and x.real == round(x.real):
        raise PoleAtNonPositiveInteger(f"digamma pole at {x.real:g}")
    if x.real < 0.5:
        return digamma(1.0 - x) - math.pi * _cot(math.pi * x)
    acc = 0.0 + 0.0j
    while x.real < 8.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0 + 0.0j
    p = inv2
    for c in _PSI_ASYMP:
        series += c * p
        p *= inv2
    return acc + cmath.log(x) - 0.5 / x - series


_GL_T, _GL_W = np.polynomial.legendre.leggauss(96)
_K0_V = 3.25 * (_GL_T + 1.0)  # nodes on [0, 6.5]
_K0_W = 3.25 * _GL_W


def bessel_k0(x):
    """Macdonald function K0(x) for x > 0 (scalars or arrays).

    Ascending series for x <= 2, Gauss-Legendre quadrature of the integral
    representation for x > 2.  Relative error well below 1e-10 on
    [1e-3, 30].
    """
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0):
        raise DomainError("bessel_k0 requires x > 0")
    out = np.empty_like(x)
    small = x <= 2.0
    if np.any(small):
        xs = x[small]
        t = 0.25 * xs * xs
        i0 = np.ones_like(xs)
        s = np.zeros_like(xs)
        term = np.ones_like(xs)
        h = 0.0
        for k in range(1, 26):
            term = term * t / (k * k)
            h += 1.0 / k
            i0 += term
            s += term * h
        out[small] = -(np.log(0.5 * xs) + EULER_GAMMA) * i0 + s
    if np.any(~small):
        xl = x[~small]
        # K0(x) = 2 e^{-x} (2x)^{-1/2} int_0^inf e^{-v^2} (1+v^2/2x)^{-1/2} dv
        v2 = _K0_V * _K0_V
        integ = np.exp(-v2)[None, :] / np.sqrt(1.0 + v2[None, :] / (2.0 * xl[:, None]))
        out[~small] = 2.0 * np.exp(-xl) / np.sqrt(2.0 * xl) * (integ @ _K0_W)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Dense complex LU (matrices here never exceed ~20x20)

def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermitian_defect(a) -> float:
    a = np.asarray(a)
    return max_abs(a - a.conj().T)


def is_hermitian(a, tol: float = 1e-10) -> bool:
    return hermitian_defect(a) < tol


class LUFactorization:
    """Partially pivoted LU of a square complex matrix."""

    def __init__(self, lu, perm, sign, norm_inf):
        self._lu = lu
        self._perm = perm
        self._sign = sign
        self.norm_inf = norm_inf

    @property
    def n(self) -> int:
        return self._lu.shape[0]

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        vector = b.ndim == 1
        x = b.reshape(self.n, -1)[self._perm].copy()
        lu = self._lu
        for j in range(self.n):
            x[j + 1:] -= np.outer(lu[j + 1:, j], x[j])
        for j in range(self.n - 1, -1, -1):
            x[j] /= lu[j, j]
            x[:j] -= np.outer(lu[:j, j], x[j])
        return x[:, 0] if vector else x

    @property
    def det(self) -> complex:
        return self._sign * complex(np.prod(np.diag(self._lu)))

    @cached_property
    def condition(self) -> float:
        """Infinity-norm condition estimate ||A||_inf * ||A^-1||_inf."""
        inv = self.solve(np.eye(self.n, dtype=complex))
        return self.norm_inf * float(np.max(np.sum(np.abs(inv), axis=1)))


def lu_factor(a, pivot_floor: float = 1e-300) -> LUFactorization:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    n = a.shape[0]
    norm_inf = float(np.max(np.sum(np.abs(a), axis=1))) if n else 0.0
    lu = a.copy()
    perm = np.arange(n)
    sign = 1.0
    for j in range(n):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        if abs(lu[p, j]) < pivot_floor:
            raise SingularMatrix(f"pivot {abs(lu[p, j]):.3e} below floor at column {j}")
        if p != j:
            lu[[j, p]] = lu[[p, j]]
            perm[[j, p]] = perm[[p, j]]
            sign = -sign
        lu[j + 1:, j] /= lu[j, j]
        lu[j + 1:, j + 1:] -= np.outer(lu[j + 1:, j], lu[j, j + 1:])
    return LUFactorization(lu, perm, sign, norm_inf)


def solve(a, b):
    """Solve A X = B by dense LU with partial pivoting."""
    return lu_factor(a).solve(b)


def det(a) -> complex:
    """Determinant via the same factorization as :func:`solve`."""
    try:
        return lu_factor(a).det
    except SingularMatrix:
        return 0.0 + 0.0j
