"""Self-adjoint boundary conditions L Gamma1 f = M Gamma2 f at the gluing points.

A condition is stored as the raw pair (L, M) of 2n x 2n matrices exactly as
provided (no canonicalization).  Validation checks the two Lagrangian-subspace
conditions: L M* = M L* and full row rank of [L | -M].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import numerics
from .numerics import is_hermitian, max_abs


class ValidationError(Exception):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotSkewCompatible(ValidationError):
    """Condition (a) fails: L M* != M L*."""


class RankDeficient(ValidationError):
    """Condition (b) fails: [L | -M] is not of full row rank."""


class InvalidParams(ValueError):
    pass


def _as_matrix(a, n, name):
    a = np.asarray(a, dtype=complex)
    if a.shape != (n, n):
        raise InvalidParams(f"{name} must be {n}x{n}, got {a.shape}")
    return a


@dataclass(frozen=True)
class HermitianBlockParams:
    """Blocks (B, A, C) of a Hermitian 2n x 2n matrix [[B, A], [A*, C]]."""

    B: np.ndarray
    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.B).shape[0]
        for name in ("B", "A", "C"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), n, name))
        for name in ("B", "C"):
            if not is_hermitian(getattr(self, name), 1e-12):
                raise InvalidParams(f"block {name} must be Hermitian")

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def full(self) -> np.ndarray:
        return np.block([[self.B, self.A], [self.A.conj().T, self.C]])


@dataclass(frozen=True)
class BoundaryCondition:
    """A pair (L, M) defining the condition L Gamma1 f = M Gamma2 f."""

    n: int
    L: np.ndarray
    M: np.ndarray
    kind: str = field(default="general", compare=False)

    def __post_init__(self):
        two_n = 2 * self.n
        for name in ("L", "M"):
            a = _as_matrix(getattr(self, name), two_n, name)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    # named n x n views of the (n3.40a) block structure
    @property
    def B(self):
        return self.L[: self.n, : self.n]

    @property
    def A1(self):
        return self.L[: self.n, self.n:]

    @property
    def A2(self):
        return self.L[self.n:, : self.n]

    @property
    def C(self):
        return self.L[self.n:, self.n:]

    @property
    def Y(self):
        return self.M[: self.n, : self.n]

    @property
    def X1(self):
        return self.M[: self.n, self.n:]

    @property
    def X2(self):
        return self.M[self.n:, : self.n]

    @property
    def Z(self):
        return self.M[self.n:, self.n:]


def skew_residual(bc: BoundaryCondition) -> float:
    return max_abs(bc.L @ bc.M.conj().T - bc.M @ bc.L.conj().T)


def _rank_gap(bc: BoundaryCondition):
    """(rank, smallest kept pivot ratio) of [L | -M] via column-pivoted QR."""
    a = np.hstack([bc.L, -bc.M])
    r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(r))
    scale = d[0] if d.size and d[0] > 0 else 1.0
    rank = int(np.sum(d > 1e-10 * scale))
    return rank, (d.min() / scale if d.size else 0.0)


def validate(bc: BoundaryCondition) -> None:
    """Raise NotSkewCompatible or RankDeficient if (L, M) is not Lagrangian."""
    res = skew_residual(bc)
    if res > 1e-10:
        raise NotSkewCompatible("L M* != M L*", res)
    rank, gap = _rank_gap(bc)
    if rank < 2 * bc.n:
        raise RankDeficient(f"[L | -M] has numerical rank {rank} < {2 * bc.n}", gap)


def is_valid(bc: BoundaryCondition) -> bool:
    try:
        validate(bc)
    except ValidationError:
        return False
    return True


def cayley_unitary(bc: BoundaryCondition) -> np.ndarray:
    """The unique unitary U with i(I + U) x1 = (I - U) x2 on the subspace.

    Uses the parametrization {(M* u, L* u)} of the subspace, which gives
    U (i M* + L*) = L* - i M*.  Unitarity and membership are verified
    numerically and a failure raises.
    """
    validate(bc)
    two_n = 2 * bc.n
    lh = bc.L.conj().T
    mh = bc.M.conj().T
    u = numerics.solve((lh + 1j * mh).T, (lh - 1j * mh).T).T
    scale = max(1.0, max_abs(u))
    unit_res = max_abs(u @ u.conj().T - np.eye(two_n)) / scale
    if unit_res > 1e-10:
        raise ValidationError("Cayley transform failed unitarity check", unit_res)
    # membership check on a null-space basis of [L | -M]
    vh = np.linalg.svd(np.hstack([bc.L, -bc.M]))[2]
    basis = vh[two_n:].conj()
    for vec in basis:
        x1, x2 = vec[:two_n], vec[two_n:]
        res = max_abs(1j * (np.eye(two_n) + u) @ x1 - (np.eye(two_n) - u) @ x2)
        if res > 1e-10:
            raise ValidationError("Cayley transform failed membership check", res)
    return u


# ---------------------------------------------------------------------------
# Named families

def dirichlet_type(params: HermitianBlockParams) -> BoundaryCondition:
    """Graph of the Hermitian matrix [[B, A], [A*, C]]:  L = that matrix, M = I."""
    n = params.n
    bc = BoundaryCondition(n, params.full(), np.eye(2 * n), kind="dirichlet_type")
    validate(bc)
    return bc


def neumann_type(params: HermitianBlockParams) -> BoundaryCondition:
    """L = [[B, 0], [-A*, -I]], M = [[I, -A], [0, C]]."""
    n = params.n
    zero = np.zeros((n, n))
    eye = np.eye(n)
    lm = np.block([[params.B, zero], [-params.A.conj().T, -eye]])
    mm = np.block([[eye, -params.A], [zero, params.C]])
    bc = BoundaryCondition(n, lm, mm, kind="neumann_type")
    validate(bc)
    return bc


def decoupled_neumann(B) -> BoundaryCondition:
    """Manifold point perturbation B, Neumann leads: L = I, M = [[-B, 0], [0, 0]]."""
    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    if not is_hermitian(B, 1e-12):
        raise InvalidParams("B must be Hermitian")
    zero = np.zeros((n, n))
    mm = np.block([[-B, zero], [zero, zero]])
    bc = BoundaryCondition(n, np.eye(2 * n), mm, kind="decoupled_neumann")
    validate(bc)
    return bc


def decoupled_dirichlet(B) -> BoundaryCondition:
    """Manifold point perturbation B, Dirichlet leads."""
    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    if not is_hermitian(B, 1e-12):
        raise InvalidParams("B must be Hermitian")
    zero = np.zeros((n, n))
    eye = np.eye(n)
    lm = np.block([[-eye, zero], [zero, zero]])
    mm = np.block([[B, zero], [zero, eye]])
    bc = BoundaryCondition(n, lm, mm, kind="decoupled_dirichlet")
    validate(bc)
    return bc


def mixed_eta_empty(params: HermitianBlockParams) -> BoundaryCondition:
    """L = I, M = [[-B, A], [A*, -C]] (inverse-Q family, Neumann leads)."""
    n = params.n
    mm = np.block([[-params.B, params.A], [params.A.conj().T, -params.C]])
    bc = BoundaryCondition(n, np.eye(2 * n), mm, kind="mixed_eta_empty")
    validate(bc)
    return bc


def mixed_eta_lower(params: HermitianBlockParams) -> BoundaryCondition:
    """L = [[-I, A], [0, C]], M = [[B, 0], [A*, I]] (inverse-Q family, Dirichlet leads)."""
    n = params.n
    zero = np.zeros((n, n))
    eye = np.eye(n)
    lm = np.block([[-eye, params.A], [zero, params.C]])
    mm = np.block([[params.B, zero], [params.A.conj().T, eye]])
    bc = BoundaryCondition(n, lm, mm, kind="mixed_eta_lower")
    validate(bc)
    return bc


def vertex(C, Z) -> BoundaryCondition:
    """Pure-lead vertex condition: manifold decoupled, leads tied by (C, Z).

    Requires C Z* = Z C* (the only surviving skew-compatibility relation).
    """
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    Z = _as_matrix(Z, n, "Z")
    res = max_abs(C @ Z.conj().T - Z @ C.conj().T)
    if res > 1e-10:
        raise InvalidParams(f"C Z* = Z C* violated (residual {res:.3e})")
    zero = np.zeros((n, n))
    lm = np.block([[np.eye(n), zero], [zero, C]])
    mm = np.block([[zero, zero], [zero, Z]])
    bc = BoundaryCondition(n, lm, mm, kind="vertex")
    validate(bc)
    return bc


def zero_resistance(alpha1, alpha2, B, gamma, zeta) -> BoundaryCondition:
    """Two-lead blocks with A2 tied to A1 by hat-alpha_j = zeta * conj(alpha_j).

    The skew-compatibility relations hold for any parameters; the rank
    condition additionally needs gamma != 0 and zeta != 0, which validate()
    reports.
    """
    B = _as_matrix(B, 2, "B")
    if not is_hermitian(B, 1e-12):
        raise InvalidParams("B must be Hermitian")
    a1, a2, g, zt = complex(alpha1), complex(alpha2), complex(gamma), complex(zeta)
    A1 = np.array([[a1, 0.0], [a2, 0.0]])
    A2 = np.array([[0.0, 0.0], [zt * a1.conjugate(), zt * a2.conjugate()]])
    C = np.array([[g, g], [0.0, 0.0]])
    Z = np.array([[0.0, 0.0], [zt, -zt]])
    zero = np.zeros((2, 2))
    lm = np.block([[B, A1], [A2, C]])
    mm = np.block([[np.eye(2), zero], [zero, Z]])
    bc = BoundaryCondition(2, lm, mm, kind="zero_resistance")
    validate(bc)
    return bc


def general(L, M) -> BoundaryCondition:
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] % 2:
        raise InvalidParams("L must be square of even size")
    n = L.shape[0] // 2
    bc = BoundaryCondition(n, L, _as_matrix(M, 2 * n, "M"), kind="general")
    validate(bc)
    return bc


_KINDS = {
    "dirichlet_type": lambda p: dirichlet_type(HermitianBlockParams(p["B"], p["A"], p["C"])),
    "neumann_type": lambda p: neumann_type(HermitianBlockParams(p["B"], p["A"], p["C"])),
    "decoupled_neumann": lambda p: decoupled_neumann(p["B"]),
    "decoupled_dirichlet": lambda p: decoupled_dirichlet(p["B"]),
    "mixed_eta_empty": lambda p: mixed_eta_empty(HermitianBlockParams(p["B"], p["A"], p["C"])),
    "mixed_eta_lower": lambda p: mixed_eta_lower(HermitianBlockParams(p["B"], p["A"], p["C"])),
    "vertex": lambda p: vertex(p["C"], p["Z"]),
    "zero_resistance": lambda p: zero_resistance(
        p["alpha1"], p["alpha2"], p["B"], p["gamma"], p["zeta"]),
    "general": lambda p: general(p["L"], p["M"]),
}


def make(kind: str, params: dict) -> BoundaryCondition:
    """Build a named boundary-condition family; the result passes validate()."""
    try:
        builder = _KINDS[kind]
    except KeyError:
        raise InvalidParams(f"unknown boundary kind {kind!r}; known: {sorted(_KINDS)}")
    try:
        return builder(params)
    except KeyError as exc:
        raise InvalidParams(f"missing parameter {exc} for kind {kind!r}")
