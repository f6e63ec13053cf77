"""Exact diagonalization and qubit-subspace extraction."""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constants import CONST
from .errors import EigensolverError, GapTooSmall
from .operators import spin_matrices
from .hamiltonian import assemble_total, basis_for, position_operator, working_point_hash

RESIDUAL_TOL = 1e-9
ORTHO_TOL = 1e-10
GAP_FACTOR = 10.0


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray  # meV, ascending
    states: np.ndarray  # columns are eigenvectors

    def __len__(self):
        return len(self.energies)


@dataclass(frozen=True)
class QubitSubspace:
    """Qubit doublet plus the dipole rows <1|x|n> and <2|x|n> (nm).

    ``energies`` holds every retained level (meV) so that Delta_mn can be formed
    for the higher-state sums.
    """

    energies: np.ndarray
    dipoles: np.ndarray  # shape (2, n_levels), complex
    const: object = CONST

    @property
    def E1(self):
        return float(self.energies[0])

    @property
    def E2(self):
        return float(self.energies[1])

    @property
    def omega0(self):
        return self.const.meV_to_rad_s(self.E2 - self.E1)

    @property
    def x12(self):
        return complex(self.dipoles[0, 1])

    @property
    def theta12(self):
        return float(np.angle(self.dipoles[0, 1]))

    @property
    def gap3(self):
        return float(self.energies[2] - self.energies[1])

    def scaled(self, factor):
        """Copy with every dipole multiplied by ``factor``."""
        return QubitSubspace(self.energies, self.dipoles * factor, self.const)


def diagonalize(H, k=None, check=True):
    """Lowest ``k`` eigenpairs of a dense Hermitian matrix (all when k is None)."""
    dim = H.shape[0]
    if k is not None and not 1 <= k <= dim:
        raise ValueError(f"cannot return {k} eigenpairs of a {dim}x{dim} matrix")
    subset = None if k is None or k == dim else (0, k - 1)
    try:
        w, v = scipy.linalg.eigh(H, subset_by_index=subset, driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"dense eigensolver failed on {dim}x{dim} matrix: {exc}") from exc
    if check:
        norm = np.abs(H).max()
        res = np.abs(H @ v - v * w).max(axis=0)
        if res.max() > RESIDUAL_TOL * norm * np.sqrt(dim):
            raise EigensolverError(f"eigenpair residual {res.max():.3e} exceeds bound (||H|| = {norm:.3e})")
        ortho = np.abs(v.conj().T @ v - np.eye(v.shape[1])).max()
        if ortho > ORTHO_TOL:
            raise EigensolverError(f"eigenvectors not orthonormal: {ortho:.3e}")
    return Spectrum(w, v)


def mirror_x_spin_basis():
    """Eigenvectors (columns) of exp(-i pi Jx) and their eigenvalues (+-i)."""
    jx = spin_matrices()[0]
    m, w = np.linalg.eigh(jx)
    return w, np.exp(-1j * np.pi * m)


def mirror_x_blocks(basis):
    """Index sets of the two eigenspaces of the x-mirror (x -> -x with exp(-i pi Jx)).

    Indices refer to the product basis with the spin slot rotated into the Jx
    eigenbasis returned by :func:`mirror_x_spin_basis`.
    """
    _, s = mirror_x_spin_basis()
    nx = np.arange(basis.Nx)
    parity = np.kron(np.kron((-1.0) ** nx, np.ones(basis.Ny * basis.Nz)), s)
    plus = np.flatnonzero(np.isclose(parity, 1j))
    minus = np.flatnonzero(np.isclose(parity, -1j))
    return plus, minus


def diagonalize_mirror_x(H, basis, check=True):
    """Full diagonalization exploiting the x-mirror symmetry (valid when B is along x).

    Results are identical to :func:`diagonalize` up to eigenvector phases and
    rotations inside degenerate subspaces.
    """
    w_spin, _ = mirror_x_spin_basis()
    n = basis.orbital_dim
    # H' = (1 (x) W)^H H (1 (x) W), done blockwise on the 4x4 spin slot
    Hr = H.reshape(n, 4, n, 4)
    Hr = np.einsum("ai,manb,bj->minj", w_spin.conj(), Hr, w_spin, optimize=True).reshape(4 * n, 4 * n)
    plus, minus = mirror_x_blocks(basis)
    leak = max(np.abs(Hr[np.ix_(plus, minus)]).max(), 0.0)
    if leak > 1e-12 * np.abs(H).max():
        raise ValueError(f"Hamiltonian is not x-mirror symmetric (block leak {leak:.3e})")
    energies, vecs = [], []
    for idx in (plus, minus):
        spec = diagonalize(Hr[np.ix_(idx, idx)], check=check)
        v = np.zeros((4 * n, len(idx)), dtype=complex)
        v[idx] = spec.states
        energies.append(spec.energies)
        vecs.append(v)
    w = np.concatenate(energies)
    v = np.concatenate(vecs, axis=1)
    order = np.argsort(w, kind="stable")
    v = v[:, order].reshape(n, 4, -1)
    v = np.einsum("ai,nik->nak", w_spin, v).reshape(4 * n, -1)
    return Spectrum(w[order], v)


def extract_qubit_subspace(spec, x_op, gap_factor=GAP_FACTOR, const=CONST):
    if len(spec) < 3:
        raise ValueError("need at least three eigenpairs")
    v = spec.states
    dipoles = v[:, :2].conj().T @ (x_op @ v)
    qs = QubitSubspace(np.array(spec.energies), dipoles, const)
    if gap_factor is not None:
        zeeman = qs.E2 - qs.E1
        if zeeman > 0 and qs.gap3 <= gap_factor * zeeman:
            raise GapTooSmall(qs.gap3 / zeeman)
    return qs


@dataclass(frozen=True)
class WorkingPoint:
    """Everything derived from one diagonalization."""

    params: object
    geometry: object
    field: object
    basis: object
    spectrum: Spectrum
    qubit: QubitSubspace
    hash: str
    seconds: float


def solve_working_point(params, geometry, field, basis=None, gap_factor=GAP_FACTOR, const=CONST):
    basis = basis or basis_for(geometry)
    t0 = time.perf_counter()
    H = assemble_total(params, geometry, field, basis, const)
    bx, by, bz = field.B
    spec = diagonalize_mirror_x(H, basis) if by == 0 and bz == 0 else diagonalize(H)
    qs = extract_qubit_subspace(spec, position_operator("x", basis), gap_factor, const)
    return WorkingPoint(
        params, geometry, field, basis, spec, qs,
        working_point_hash(params, geometry, field, basis), time.perf_counter() - t0,
    )


def convergence_scan(params, geometry, field, ladder, rtol=1e-3, const=CONST):
    """Track omega0, |x12| and gap3 along a ladder of basis sizes.

    ``ladder`` is a sequence of (Nx, Ny, Nz).  The scan is converged when the
    last two omega0 values differ by less than ``rtol`` (relative).
    """
    sizes = [tuple(s) for s in ladder]
    if any(any(b < a for a, b in zip(s0, s1)) for s0, s1 in zip(sizes, sizes[1:])):
        raise ValueError("basis ladder must be monotone")
    rows = []
    for nx, ny, nz in sizes:
        wp = solve_working_point(params, geometry, field, basis_for(geometry, nx, ny, nz), gap_factor=None, const=const)
        qs = wp.qubit
        rows.append({
            "Nx": nx, "Ny": ny, "Nz": nz, "dim": wp.basis.dim,
            "omega0_GHz": qs.omega0 / (2 * np.pi) / 1e9,
            "x12_nm": abs(qs.x12),
            "gap3_meV": qs.gap3,
            "seconds": wp.seconds,
        })
    drifts = [abs(b["omega0_GHz"] - a["omega0_GHz"]) / abs(b["omega0_GHz"]) for a, b in zip(rows, rows[1:])]
    monotone = all(
        np.sign(b["omega0_GHz"] - a["omega0_GHz"]) == np.sign(rows[1]["omega0_GHz"] - rows[0]["omega0_GHz"])
        for a, b in zip(rows, rows[1:])
    ) if len(rows) > 1 else True
    return {
        "rows": rows,
        "drift": drifts[-1] if drifts else None,
        "converged": bool(drifts) and drifts[-1] < rtol,
        "monotone": monotone,
    }
