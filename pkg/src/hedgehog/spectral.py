"""Real-axis scans: poles of Q0 (the audible spectrum), point levels, and the
negative discrete spectrum of the coupled operator.

Pole detection brackets sign changes of 1/Q0 rather than thresholding |Q0|:
the diagonal of Q0 is strictly increasing between consecutive poles, so its
reciprocal crosses zero transversally there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .boundary import BoundaryCondition
from .geometry import QProvider, SingularAtEnergy, q_full
from .numerics import EnergyPoint


class GridTooCoarse(Exception):
    """Two candidate locations landed in a single grid cell."""


class NonRealDeterminant(Exception):
    """The phase-normalized determinant kept a large imaginary part."""


@dataclass(frozen=True)
class ScanConfig:
    e_min: float
    e_max: float
    grid_points: int = 512
    refine_tol: float = 1e-9

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError("e_min must be below e_max")
        if self.grid_points < 16:
            raise ValueError("at least 16 grid points required")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be positive")

    def grid(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.grid_points)


@dataclass(frozen=True)
class ScanResult:
    locations: tuple
    kinds: tuple  # "pole" | "root" per entry
    residuals: tuple
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def count(self) -> int:
        return len(self.locations)


def _bisect(f, a, b, fa, fb, tol):
    """Refine a sign change of f to width tol; f may return None exactly at a
    singular energy, which is then taken as the location."""
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm is None:
            return mid, None
        if fm == 0.0:
            return mid, 0.0
        if (fa < 0.0) != (fm < 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b), f(0.5 * (a + b))


def _dedupe_check(locations, cell, cfg):
    for x, y in zip(locations, locations[1:]):
        if y - x < cell:
            raise GridTooCoarse(
                f"locations {x:g} and {y:g} closer than one grid cell "
                f"({cell:g}); increase grid_points")


def scan_q_poles(provider: QProvider, cfg: ScanConfig, *, tol: float = 1e-10,
                 entry: int = 0) -> ScanResult:
    """Locate poles of [Q0(E)]_entry,entry on the interval.

    These are the eigenvalues of the manifold operator whose eigenfunctions
    do not vanish at the attachment point.
    """

    def recip(e):
        try:
            q = provider.q0(EnergyPoint(e), tol)[entry, entry]
        except SingularAtEnergy:
            return None
        return float((1.0 / q).real)

    grid = cfg.grid()
    cell = grid[1] - grid[0]
    vals = []
    for e in grid:
        v = recip(e)
        if v is None:
            v = recip(e + 1e-3 * cell)
        vals.append(v)
    locations, residuals = [], []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa is None or fb is None or (fa < 0.0) == (fb < 0.0):
            continue
        loc, fl = _bisect(recip, a, b, fa, fb, cfg.refine_tol)
        resid = 0.0 if fl is None else abs(fl)
        if resid < 1e-6:  # otherwise the sign change was a root of Q0, not a pole
            locations.append(loc)
            residuals.append(resid)
    _dedupe_check(locations, cell, cfg)
    return ScanResult(tuple(locations), ("pole",) * len(locations), tuple(residuals))


def point_levels(provider: QProvider, beta: float, cfg: ScanConfig, *,
                 tol: float = 1e-10) -> ScanResult:
    """Roots of [Q0(E)]_11 - beta, bracketed between consecutive poles.

    Q0 is increasing between poles, so each inter-pole segment holds at most
    one root.
    """
    if provider.n != 1:
        raise ValueError("point levels are a single-lead scan")

    def g(e):
        try:
            q = provider.q0(EnergyPoint(e), tol)[0, 0]
        except SingularAtEnergy:
            return None
        return float(q.real) - beta

    poles = scan_q_poles(provider, cfg, tol=tol).locations
    grid = cfg.grid()
    cell = grid[1] - grid[0]
    edges = [cfg.e_min] + [p for p in poles] + [cfg.e_max]
    inset = max(1e-7, 10.0 * cfg.refine_tol)
    locations, residuals = [], []
    for lo, hi in zip(edges, edges[1:]):
        a, b = lo + inset, hi - inset
        if b - a <= 0:
            continue
        fa, fb = g(a), g(b)
        if fa is None or fb is None or (fa < 0.0) == (fb < 0.0):
            continue
        loc, fl = _bisect(g, a, b, fa, fb, cfg.refine_tol)
        locations.append(loc)
        residuals.append(0.0 if fl is None else abs(fl))
    _dedupe_check(locations, cell, cfg)
    return ScanResult(tuple(locations), ("root",) * len(locations), tuple(residuals))


def negative_spectrum(bc: BoundaryCondition, provider: QProvider,
                      cfg: ScanConfig, *, tol: float = 1e-10) -> ScanResult:
    """Roots of det(M Q(E) - L) on an interval strictly below zero.

    The determinant of a Lagrangian pair is real on the real axis only up to
    a constant phase (replacing (L, M) by (UL, UM) rescales it by det U), so
    the scan first normalizes by the phase of the largest sample; the
    remaining imaginary residue is asserted small.
    """
    if cfg.e_max >= 0:
        raise ValueError("negative_spectrum scans strictly below E = 0")

    grid = cfg.grid()
    cell = grid[1] - grid[0]
    raw = np.array([numerics.det(bc.M @ q_full(provider, EnergyPoint(e), tol=tol) - bc.L)
                    for e in grid])
    scale = np.max(np.abs(raw))
    if scale == 0.0:
        return ScanResult((), (), (), {"imag_residual": 0.0})
    phase = raw[int(np.argmax(np.abs(raw)))]
    phase /= abs(phase)
    imag_residual = float(np.max(np.abs((raw / phase).imag)) / scale)
    if imag_residual > 1e-6:
        raise NonRealDeterminant(
            f"imaginary residual {imag_residual:.3e} after phase normalization")

    def d(e):
        v = numerics.det(bc.M @ q_full(provider, EnergyPoint(e), tol=tol) - bc.L)
        return float((v / phase).real)

    vals = (raw / phase).real
    locations, residuals = [], []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if (fa < 0.0) == (fb < 0.0):
            continue
        loc, fl = _bisect(d, a, b, fa, fb, cfg.refine_tol)
        locations.append(loc)
        residuals.append(abs(fl) / scale if fl is not None else 0.0)
    _dedupe_check(locations, cell, cfg)
    return ScanResult(tuple(locations), ("root",) * len(locations),
                      tuple(residuals), {"imag_residual": imag_residual})


@dataclass(frozen=True)
class StethoscopeReport:
    kind: str
    k: float
    sigma: complex
    at_point_level: bool
    at_spectrum: bool


def stethoscope_verify(provider: QProvider, params, kind: str, k: float, *,
                       tol: float = 1e-6, q_tol: float = 1e-10) -> StethoscopeReport:
    """Single-lead phase probe.

    Dirichlet type: sigma = +1 exactly at the point levels of the perturbed
    manifold operator, and (for gamma = 0) sigma = -1 on the audible
    spectrum.  Neumann type: the roles of +1 and -1 swap.  ``at_spectrum``
    is only meaningful when gamma = 0.
    """
    if provider.n != 1:
        raise ValueError("the stethoscope needs a single lead")
    beta = complex(params.B[0, 0]).real
    alpha2 = abs(complex(params.A[0, 0])) ** 2
    gamma = complex(params.C[0, 0]).real
    q = complex(provider.q0(EnergyPoint.from_momentum(k), q_tol)[0, 0])
    qb = q - beta
    if kind == "dirichlet":
        sigma = ((1j * gamma * k - 1.0) * qb + 1j * alpha2 * k) \
            / ((1j * gamma * k + 1.0) * qb + 1j * alpha2 * k)
        level_target, spectrum_target = 1.0, -1.0
    elif kind == "neumann":
        sigma = ((1j * k + gamma) * qb + alpha2) / ((1j * k - gamma) * qb - alpha2)
        level_target, spectrum_target = -1.0, 1.0
    else:
        raise ValueError(f"unknown stethoscope kind {kind!r}")
    return StethoscopeReport(
        kind=kind, k=k, sigma=sigma,
        at_point_level=abs(sigma - level_target) < tol,
        at_spectrum=abs(sigma - spectrum_target) < tol,
    )
