from services.kernels.base_kernel import BaseKernel
from services.kernels.graph import GraphKernel
from services.kernels.lattice import LatticeKernel, make_lattice_kernel
from services.kernels.nearest_neighbor import (
    Domain,
    DriftProfile,
    NearestNeighborKernel,
    make_drift_kernel,
    make_drift_profile,
)
from services.kernels.orbit import OrbitKernel, make_orbit_kernel

__all__ = [
    "BaseKernel",
    "Domain",
    "DriftProfile",
    "GraphKernel",
    "LatticeKernel",
    "NearestNeighborKernel",
    "OrbitKernel",
    "make_drift_kernel",
    "make_drift_profile",
    "make_lattice_kernel",
    "make_orbit_kernel",
]
