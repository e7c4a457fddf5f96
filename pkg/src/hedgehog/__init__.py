"""Scattering matrices and Krein Q-functions for compact manifolds with leads."""

from .boundary import (
    BoundaryCondition,
    HermitianBlockParams,
    cayley_unitary,
    decoupled_dirichlet,
    decoupled_neumann,
    dirichlet_type,
    general,
    make,
    mixed_eta_empty,
    mixed_eta_lower,
    neumann_type,
    validate,
    vertex,
    zero_resistance,
)
from .geometry import FluxRing, Ring, SingularAtEnergy, Sphere2, Sphere3, Torus, q_full
from .numerics import EnergyPoint, bessel_k0, digamma, sqrt_energy, sqrt_neg
from .scattering import (
    INFINITE,
    ChannelCoefficients,
    SMatrix,
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
from .spectral import (
    ScanConfig,
    ScanResult,
    negative_spectrum,
    point_levels,
    scan_q_poles,
    stethoscope_verify,
)

__version__ = "0.1.0"
