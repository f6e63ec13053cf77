"""Germanium heavy-hole spin qubit: exact diagonalization and bichromatic-drive analytics."""

from .constants import CONST, PhysicalConstants
from .hamiltonian import DotGeometry, FieldConfig, MaterialParams, assemble_total, basis_for
from .operators import BasisSpec
from .spectrum import QubitSubspace, WorkingPoint, solve_working_point

__all__ = [
    "CONST",
    "PhysicalConstants",
    "MaterialParams",
    "DotGeometry",
    "FieldConfig",
    "BasisSpec",
    "basis_for",
    "assemble_total",
    "QubitSubspace",
    "WorkingPoint",
    "solve_working_point",
]
