"""Closed-form and lattice-sum Krein Q-matrices for the supported manifolds.

Each provider evaluates the n x n matrix Q0(z) of regularized Green-function
values at the attachment points (off-diagonal: the Green function itself,
diagonal: the finite part after removing the z-independent singularity), plus
analytic spectrum hints.  ``q_full`` appends the half-line lead blocks.

Providers are immutable after construction; evaluation is pure, so concurrent
calls across energies are fine (the torus keeps internal caches of
z-independent lattice sums, rebuilt monotonically).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .numerics import (
    EULER_GAMMA,
    LN_2,
    EnergyPoint,
    bessel_k0,
    digamma,
    sqrt_energy,
    sqrt_neg,
)


class SingularAtEnergy(Exception):
    """z is within the configured margin of the operator's spectrum."""


class ToleranceNotReached(Exception):
    """The truncation radius needed for tol exceeds the configured term cap."""


class UnsupportedLeads(Exception):
    pass


class QProvider(Protocol):
    n: int

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray: ...

    def spectrum_hint(self, e_max: float) -> list: ...


def _check_margin(z: complex, eigenvalues, margin: float):
    eigenvalues = np.asarray(eigenvalues)
    if eigenvalues.size and np.min(np.abs(eigenvalues - z)) < margin:
        worst = eigenvalues[np.argmin(np.abs(eigenvalues - z))]
        raise SingularAtEnergy(f"z = {z} within {margin:g} of eigenvalue {worst:g}")


# ---------------------------------------------------------------------------
# Ring and Aharonov-Bohm ring

def _ring_sign(dphi: float) -> float:
    # "plus" branch when phi >= phi'; entries use phi = phi_l (row), phi' = phi_m
    return math.pi if dphi >= 0.0 else -math.pi


@dataclass(frozen=True)
class Ring:
    """Circle of radius a; H0 = -(1/a^2) d^2/dphi^2 at angles phi_j."""

    radius: float
    angles: tuple
    margin: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(v) for v in self.angles))
        if len(set(self.angles)) != len(self.angles):
            raise ValueError("attachment angles must be pairwise distinct")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def n(self) -> int:
        return len(self.angles)

    def spectrum_hint(self, e_max: float) -> list:
        out = []
        m = 0
        while (m / self.radius) ** 2 <= e_max:
            out.append((m / self.radius) ** 2)
            m += 1
        return out

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray:
        a = self.radius
        _check_margin(p.z, self.spectrum_hint(abs(p.z) + 1.0), self.margin)
        sz = sqrt_energy(p)
        q = np.empty((self.n, self.n), dtype=complex)
        sin_pi = cmath.sin(math.pi * a * sz)
        for l, pl in enumerate(self.angles):
            for m, pm in enumerate(self.angles):
                d = pm - pl + _ring_sign(pl - pm)
                q[l, m] = -cmath.cos(a * sz * d) / (2.0 * sz * sin_pi)
        return q


@dataclass(frozen=True)
class FluxRing:
    """Ring threaded by flux; flux is the dimensionless ratio Phi/Phi_0."""

    radius: float
    angles: tuple
    flux: float
    margin: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(v) for v in self.angles))
        if len(set(self.angles)) != len(self.angles):
            raise ValueError("attachment angles must be pairwise distinct")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def n(self) -> int:
        return len(self.angles)

    def spectrum_hint(self, e_max: float) -> list:
        a, th = self.radius, self.flux
        out = set()
        m = 0
        while True:
            vals = [((m + th) / a) ** 2, ((-m + th) / a) ** 2]
            hits = [v for v in vals if v <= e_max]
            if not hits and m > abs(th) + 1:
                break
            out.update(hits)
            m += 1
        uniq = []
        for v in sorted(out):
            if not uniq or v - uniq[-1] > 1e-12:
                uniq.append(v)
        return uniq

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray:
        a, th = self.radius, self.flux
        _check_margin(p.z, self.spectrum_hint(abs(p.z) + 1.0), self.margin)
        sz = sqrt_energy(p)
        q = np.empty((self.n, self.n), dtype=complex)
        sin_m = cmath.sin(math.pi * (th - a * sz))
        sin_p = cmath.sin(math.pi * (th + a * sz))
        for l, pl in enumerate(self.angles):
            for m, pm in enumerate(self.angles):
                d = pm - pl + _ring_sign(pl - pm)
                q[l, m] = (cmath.exp(1j * d * (th - a * sz)) / sin_m
                           - cmath.exp(1j * d * (th + a * sz)) / sin_p) / (4.0 * sz)
        return q


# ---------------------------------------------------------------------------
# Flat torus, d = 2 or 3, optionally with Aharonov-Bohm fluxes

_TERM_CAP = 10_000_000
# Kummer subtraction masses; three levels make the reciprocal remainder decay
# like |gamma|^-(6+d) instead of the bare |gamma|^-4.
_MASS_SQ = (1.0, 2.0, 3.0)


def _lattice_points(gens, radius, center):
    """Integer combinations n with |center + n @ gens| <= radius."""
    gens = np.asarray(gens, dtype=float)
    d = gens.shape[0]
    inv = np.linalg.inv(gens)
    reach = radius + float(np.linalg.norm(center))
    bounds = [int(np.ceil(reach * np.linalg.norm(inv[:, i]))) + 1 for i in range(d)]
    count = np.prod([2 * b + 1 for b in bounds])
    if count > _TERM_CAP:
        raise ToleranceNotReached(
            f"lattice enumeration needs {count:.2e} candidate terms (cap {_TERM_CAP:.0e})")
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
    ns = np.stack([g.ravel() for g in grids], axis=-1)
    pts = center + ns @ gens
    r = np.linalg.norm(pts, axis=1)
    keep = r <= radius
    return ns[keep], pts[keep], r[keep]


def _free_kernel(d: int, kappa: float, r: np.ndarray) -> np.ndarray:
    """Kernel of (-Laplace + kappa^2)^-1 on R^d at distances r > 0."""
    if d == 2:
        return bessel_k0(kappa * r) / (2.0 * math.pi)
    return np.exp(-kappa * r) / (4.0 * math.pi * r)


def _free_kernel_regularized(d: int, kappa: float) -> float:
    """Finite part of the free kernel at r = 0 after removing F0."""
    if d == 2:
        return (LN_2 - EULER_GAMMA - math.log(kappa)) / (2.0 * math.pi)
    return -kappa / (4.0 * math.pi)


def _direct_radius(d: int, kappa: float, v: float, tol: float) -> float:
    # solve exp(-kappa R) * poly(R) <= tol by fixed point
    r = (math.log(1.0 / tol) + 5.0) / kappa
    for _ in range(4):
        poly = (2.0 * math.pi / v) * (1.0 + r) ** d / kappa
        r = (math.log(1.0 / tol) + math.log(max(1.0, poly)) + 2.0) / kappa
    return r


class Torus:
    """Flat torus R^d / lattice, d in {2, 3}, H0 = (-i grad + flux-shift)^2.

    ``generators`` are the lattice generators (rows), ``points`` the
    attachment points inside the cell, ``flux`` the optional dimensionless
    flux vector (one Aharonov-Bohm flux per generator).

    The Q-matrix is evaluated as an absolutely convergent split: a few
    direct-lattice kernel sums (exponentially convergent, cached per point
    pair since they do not depend on z) plus a reciprocal-lattice remainder
    whose terms decay like |gamma|^-(2 * len(_MASS_SQ) + 2).
    """

    def __init__(self, generators, points, flux=None, margin: float = 1e-8):
        gens = np.asarray(generators, dtype=float)
        if gens.ndim != 2 or gens.shape[0] != gens.shape[1] or gens.shape[0] not in (2, 3):
            raise ValueError("generators must be a d x d matrix with d in {2, 3}")
        if abs(np.linalg.det(gens)) < 1e-14:
            raise ValueError("generators must be linearly independent")
        self.d = gens.shape[0]
        self.generators = gens
        self.points = np.asarray(points, dtype=float).reshape(-1, self.d)
        self.flux = None if flux is None else np.asarray(flux, dtype=float)
        if self.flux is not None and self.flux.shape != (self.d,):
            raise ValueError("flux must have one entry per generator")
        self.margin = margin
        self.dual = 2.0 * math.pi * np.linalg.inv(gens).T  # rows b_k, a_j.b_k = 2 pi
        assert np.allclose(gens @ self.dual.T, 2.0 * math.pi * np.eye(self.d), atol=1e-12)
        self.volume = abs(np.linalg.det(gens))
        self.dual_volume = abs(np.linalg.det(self.dual))
        inv = np.linalg.inv(gens)
        frac = self.points @ inv
        for j in range(len(self.points)):
            for l in range(j):
                if np.max(np.abs((frac[j] - frac[l]) - np.round(frac[j] - frac[l]))) < 1e-12:
                    raise ValueError(f"points {l} and {j} coincide modulo the lattice")
        # flux shift in the dual basis; phases on the direct lattice are
        # exp(-2 pi i n . flux)
        self._shift = np.zeros(self.d) if self.flux is None else self.flux @ self.dual
        self._kernel_cache = {}
        self._recip = None

    @property
    def n(self) -> int:
        return len(self.points)

    def spectrum_hint(self, e_max: float) -> list:
        if e_max < 0:
            return []
        _, _, r = _lattice_points(self.dual, math.sqrt(e_max) + 1e-12, self._shift)
        vals = np.sort(r) ** 2
        out = []
        for v in vals:
            if v <= e_max and (not out or v - out[-1] > 1e-9):
                out.append(float(v))
        return out

    # -- z-independent direct-lattice kernel sums, cached per (tol, pair) --
    def _kernels(self, tol: float) -> np.ndarray:
        cached = self._kernel_cache.get(tol)
        if cached is not None:
            return cached
        nmass = len(_MASS_SQ)
        out = np.empty((self.n, self.n, nmass), dtype=complex)
        for j in range(self.n):
            for l in range(j + 1):
                x = self.points[j] - self.points[l]
                for i, msq in enumerate(_MASS_SQ):
                    out[j, l, i] = self._kernel_sum(x, math.sqrt(msq), tol, at_origin=(j == l))
                    out[l, j, i] = out[j, l, i].conjugate()
        self._kernel_cache[tol] = out
        return out

    def _kernel_sum(self, x, kappa, tol, at_origin):
        radius = _direct_radius(self.d, kappa, self.volume, 0.1 * tol)
        ns, _, r = _lattice_points(self.generators, radius, np.asarray(x, float))
        if at_origin:
            keep = r > 1e-12
            ns, r = ns[keep], r[keep]
        vals = _free_kernel(self.d, kappa, r).astype(complex)
        if self.flux is not None:
            vals = vals * np.exp(-2j * math.pi * (ns @ self.flux))
        s = complex(np.sum(vals))
        if at_origin:
            s += _free_kernel_regularized(self.d, kappa)
        return s

    # -- reciprocal-lattice remainder --
    def _recip_radius(self, remfac: float, z_abs: float, tol: float) -> float:
        p = 2 * len(_MASS_SQ) + 2  # remainder decay exponent
        c = 4.0 * math.pi * remfac / (self.volume * self.dual_volume * tol)
        radius = c ** (1.0 / (p - self.d)) if c > 0 else 1.0
        return max(radius, 2.0 * math.sqrt(z_abs + 1.0) + 3.0 * np.max(
            np.linalg.norm(self.dual, axis=1)))

    def _recip_points(self, radius: float):
        if self._recip is None or self._recip[0] < radius:
            ns, pts, r = _lattice_points(self.dual, radius, self._shift)
            phases = np.exp(1j * (pts @ self.points.T))  # (#pts, n)
            self._recip = (radius, r * r, phases)
        return self._recip

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray:
        z = p.z
        _check_margin(z, self.spectrum_hint(abs(z) + 1.0), self.margin)
        m1, m2, m3 = _MASS_SQ
        # partial fractions of 1/(E - z) against (E + m1)(E + m2)(E + m3)
        f1, f2, f3 = m1 + z, m2 + z, m3 + z
        coef = np.array([
            1.0 + f1 / (m2 - m1) + f1 * f2 / ((m2 - m1) * (m3 - m1)),
            -f1 / (m2 - m1) + f1 * f2 / ((m1 - m2) * (m3 - m2)),
            f1 * f2 / ((m1 - m3) * (m2 - m3)),
        ])
        remfac = f1 * f2 * f3
        kernels = self._kernels(tol)
        q = kernels @ coef
        radius = self._recip_radius(abs(remfac), abs(z), tol)
        _, e, phases = self._recip_points(radius)
        den = (e - z) * (e + m1) * (e + m2) * (e + m3)
        weights = remfac / (self.volume * den)
        # entry (j, l) accumulates sum_g w_g e^{i (g + shift).(q_j - q_l)}
        q += (phases * weights[:, None]).T @ phases.conj()
        return q


# ---------------------------------------------------------------------------
# Spheres

@dataclass(frozen=True)
class Sphere3:
    """Three-sphere of radius a with pairwise geodesic distances between points."""

    radius: float
    distances: np.ndarray = field(default=None)
    margin: float = 1e-8

    def __post_init__(self):
        d = np.zeros((1, 1)) if self.distances is None else np.asarray(self.distances, float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distances must be a square matrix")
        if not np.allclose(d, d.T, atol=1e-12):
            raise ValueError("distances must be symmetric")
        off = d[~np.eye(d.shape[0], dtype=bool)]
        if off.size and (np.any(off <= 0) or np.any(off > math.pi * self.radius + 1e-12)):
            raise ValueError("off-diagonal distances must lie in (0, pi a]")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    def spectrum_hint(self, e_max: float) -> list:
        a2 = self.radius * self.radius
        out = []
        m = 1
        while (m * m - 1.0) / a2 <= e_max:
            out.append((m * m - 1.0) / a2)
            m += 1
        return out

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray:
        a = self.radius
        _check_margin(p.z, self.spectrum_hint(abs(p.z) + 1.0), self.margin)
        s = cmath.sqrt(a * a * p.z + 1.0)  # branch irrelevant: entries even in s
        small = abs(s) < 1e-4  # removable point s = 0 (z = -1/a^2): use series
        if small:
            s_cot = (1.0 - (math.pi * s) ** 2 / 3.0) / math.pi  # s cot(pi s)
            s_csc = (1.0 + (math.pi * s) ** 2 / 6.0) / math.pi  # s / sin(pi s)
        else:
            s_cot = s * cmath.cos(math.pi * s) / cmath.sin(math.pi * s)
            s_csc = s / cmath.sin(math.pi * s)
        q = np.empty((self.n, self.n), dtype=complex)
        for j in range(self.n):
            for l in range(self.n):
                if j == l:
                    q[j, l] = -s_cot / (4.0 * math.pi * a)
                    continue
                r = self.distances[j, l]
                if abs(r - math.pi * a) < 1e-9 * a:
                    q[j, l] = s_csc / (4.0 * math.pi * a)
                    continue
                if small:
                    sinc = (r / a) * (1.0 - (r * s / a) ** 2 / 6.0)
                else:
                    sinc = cmath.sin(r * s / a) / s
                q[j, l] = (cmath.cos(r * s / a) - sinc * s_cot) \
                    / (4.0 * math.pi * a * math.sin(r / a))
        return q


@dataclass(frozen=True)
class Sphere2:
    """Two-sphere of radius a; only the single-lead diagonal is available."""

    radius: float
    n: int = 1
    margin: float = 1e-8

    def __post_init__(self):
        if self.n != 1:
            raise UnsupportedLeads(
                "the two-sphere provider supports n = 1 only (off-diagonal "
                "entries need the complex-degree Legendre function)")

    def spectrum_hint(self, e_max: float) -> list:
        a2 = self.radius * self.radius
        out = []
        el = 0
        while el * (el + 1.0) / a2 <= e_max:
            out.append(el * (el + 1.0) / a2)
            el += 1
        return out

    def q0(self, p: EnergyPoint, tol: float = 1e-10) -> np.ndarray:
        a = self.radius
        _check_margin(p.z, self.spectrum_hint(abs(p.z) + 1.0), self.margin)
        t = 0.5 * cmath.sqrt(1.0 + 4.0 * a * a * p.z)
        val = -(digamma(0.5 + t) - 0.5 * math.pi * cmath.tan(math.pi * t)
                - math.log(2.0 * a) + EULER_GAMMA) / (2.0 * math.pi)
        return np.array([[val]], dtype=complex)


# ---------------------------------------------------------------------------
# Lead-augmented Q

def q_full(provider: QProvider, p: EnergyPoint, flavor: str = "standard",
           tol: float = 1e-10) -> np.ndarray:
    """Block-diagonal Q(z): Q0(z) plus one scalar block per lead.

    flavor "standard" uses the Neumann-lead value 1/sqrt(-z), "dirichlet"
    uses -sqrt(-z); at a boundary-limit point z = k^2 these are i/k and ik.
    """
    n = provider.n
    q = np.zeros((2 * n, 2 * n), dtype=complex)
    q[:n, :n] = provider.q0(p, tol)
    root = sqrt_neg(p)
    if flavor == "standard":
        lead = 1.0 / root
    elif flavor == "dirichlet":
        lead = -root
    else:
        raise ValueError(f"unknown lead flavor {flavor!r}")
    q[n:, n:] = lead * np.eye(n)
    return q
