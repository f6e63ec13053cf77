"""Assembly of H_total = H_LK + H_BP + H_conf + H_Zeeman on the product basis.

Energies are in meV.  Holes are described in the hole picture (kinetic
energy positive), with the Peierls substitution k -> k + eA/hbar in the
symmetric gauge A = -r x B / 2.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .constants import CONST
from .operators import (
    BasisSpec,
    check_hermitian,
    kron_slots,
    one_dimensional_blocks,
    spin_matrices,
    symmetrized_product,
)

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class MaterialParams:
    gamma1: float = 13.14
    gamma2: float = 4.59
    gamma3: float = 5.13
    kappa: float = 3.14
    q: float = 0.07
    a_v: float = 2.0  # eV
    b_v: float = -2.3  # eV
    eps_xx: float = -0.006
    eps_yy: float = -0.006
    eps_zz: float = 0.0042

    @property
    def gamma_bar(self):
        return 0.5 * (self.gamma3 + self.gamma2)

    @property
    def delta(self):
        return 0.5 * (self.gamma3 - self.gamma2)

    @property
    def m_inplane(self):
        """Heavy-hole in-plane mass in units of m0."""
        return 1.0 / (self.gamma1 + self.gamma2)


@dataclass(frozen=True)
class DotGeometry:
    a_x: float = 50.0  # nm
    a_y: float = 50.0  # nm
    L: float = 15.0  # nm
    E_gate: float = 10e6  # V/m

    def __post_init__(self):
        for name in ("a_x", "a_y", "L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.E_gate < 0:
            raise ValueError(f"E_gate must be non-negative, got {self.E_gate}")

    def confinement_energies(self, params, const=CONST):
        """hbar*omega_{0,x}, hbar*omega_{0,y} in meV, using omega_0i = hbar/(m_HP a_i^2)."""
        c = const.kinetic_prefactor * 2 / params.m_inplane
        return c / self.a_x**2, c / self.a_y**2


@dataclass(frozen=True)
class FieldConfig:
    B: tuple = (1.0, 0.0, 0.0)  # T

    def __post_init__(self):
        b = tuple(float(v) for v in self.B)
        if len(b) != 3:
            raise ValueError("B must be a 3-vector")
        if np.linalg.norm(b) > 10.0:
            raise ValueError("|B| above the 10 T sanity bound")
        object.__setattr__(self, "B", b)


def basis_for(geometry, Nx=12, Ny=6, Nz=10):
    """Oscillator lengths equal the dot sizes a_x, a_y."""
    return BasisSpec(Nx=Nx, Ny=Ny, Nz=Nz, lx=geometry.a_x, ly=geometry.a_y, L=geometry.L)


def working_point_hash(params, geometry, field, basis):
    payload = json.dumps(
        {"params": asdict(params), "geometry": asdict(geometry), "field": asdict(field), "basis": asdict(basis)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- kinetic wave vectors -----------------------------------------------------
#
# Each K_i is kept as a list of (coefficient, slot, kind) terms with kind "k"
# (wave vector) or "r" (position), so that quadratic forms can be evaluated
# from exact one-dimensional blocks instead of truncated matrix products.


def kinetic_terms(field, const=CONST):
    """Symbolic K_i = k_i + (e/hbar) A_i for A = (B x r)/2."""
    bx, by, bz = field.B
    c = 0.5 * const.e_over_hbar
    a = {
        "x": [(c * by, "z"), (-c * bz, "y")],
        "y": [(c * bz, "x"), (-c * bx, "z")],
        "z": [(c * bx, "y"), (-c * by, "x")],
    }
    return {i: [(1.0, i, "k")] + [(coef, s, "r") for coef, s in a[i] if coef != 0.0] for i in AXES}


def _pair_block(t1, t2, basis):
    c1, s1, k1 = t1
    c2, s2, k2 = t2
    if s1 == s2:
        blocks = one_dimensional_blocks(s1, basis)
        key = {("k", "k"): "k2", ("r", "r"): "r2"}.get((k1, k2), "rk")
        return c1 * c2 * kron_slots({s1: blocks[key]}, basis, AXES)
    f1 = one_dimensional_blocks(s1, basis)[k1]
    f2 = one_dimensional_blocks(s2, basis)[k2]
    return c1 * c2 * kron_slots({s1: f1, s2: f2}, basis, AXES)


def orbital_symmetrized(terms_i, terms_j, basis):
    """Orbital matrix of {K_i, K_j}/2, built from exact 1-D blocks."""
    out = np.zeros((basis.orbital_dim,) * 2, dtype=complex)
    for t1 in terms_i:
        for t2 in terms_j:
            out += _pair_block(t1, t2, basis)
    # Hermitian part of sum_ab c_a c_b sym(T_a, T_b) equals the symmetrized product.
    return 0.5 * (out + out.conj().T)


def orbital_linear(terms, basis):
    out = np.zeros((basis.orbital_dim,) * 2, dtype=complex)
    for coef, slot, kind in terms:
        out += coef * kron_slots({slot: one_dimensional_blocks(slot, basis)[kind]}, basis, AXES)
    return out


def kinetic_wavevectors(geometry, field, basis, const=CONST):
    """Full-space matrices (Kx, Ky, Kz) in nm^-1."""
    terms = kinetic_terms(field, const)
    eye4 = np.eye(4)
    return tuple(np.kron(orbital_linear(terms[i], basis), eye4) for i in AXES)


# -- the four Hamiltonian parts -----------------------------------------------


def luttinger_kohn_form(params, quadratic, const=CONST, include_gamma3=True):
    """LK operator from the symmetrized orbital quadratics ``quadratic(i, j)`` = {K_i, K_j}/2."""
    jx, jy, jz = spin_matrices()[:3]
    J = {"x": jx, "y": jy, "z": jz}
    K2 = {i: quadratic(i, i) for i in AXES}
    eye4 = np.eye(4)
    h = np.kron((params.gamma1 + 2.5 * params.gamma2) * (K2["x"] + K2["y"] + K2["z"]), eye4)
    for i in AXES:
        h = h - 2 * params.gamma2 * np.kron(K2[i], J[i] @ J[i])
    if include_gamma3:
        for i, j in combinations(AXES, 2):
            h = h - 4 * params.gamma3 * np.kron(quadratic(i, j), symmetrized_product(J[i], J[j]))
    return const.kinetic_prefactor * h


def bulk_luttinger_kohn(params, k, const=CONST):
    """4x4 bulk LK matrix (meV) at a c-number wave vector k (nm^-1)."""
    kv = dict(zip(AXES, np.asarray(k, dtype=float)))
    return luttinger_kohn_form(params, lambda i, j: np.array([[kv[i] * kv[j]]]), const)


def assemble_luttinger_kohn(params, geometry, field, basis, const=CONST, include_gamma3=True):
    terms = kinetic_terms(field, const)
    h = luttinger_kohn_form(params, lambda i, j: orbital_symmetrized(terms[i], terms[j], basis), const, include_gamma3)
    return check_hermitian(h, "H_LK")


def strain_energies(params):
    """(P_eps, Q_eps) in meV."""
    p = -params.a_v * (params.eps_xx + params.eps_yy + params.eps_zz)
    q = -params.b_v * (params.eps_xx + params.eps_yy - 2 * params.eps_zz) / 2
    return 1e3 * p, 1e3 * q


def bir_pikus_spin(params):
    p, q = strain_energies(params)
    # heavy holes (+-3/2) get P+Q, light holes (+-1/2) get P-Q
    return np.diag([p + q, p - q, p - q, p + q]).astype(complex)


def assemble_bir_pikus(params, basis):
    return np.kron(np.eye(basis.orbital_dim), bir_pikus_spin(params))


def orbital_confinement(params, geometry, basis, const=CONST):
    c = const.kinetic_prefactor / params.m_inplane
    bx = one_dimensional_blocks("x", basis)
    by = one_dimensional_blocks("y", basis)
    bz = one_dimensional_blocks("z", basis)
    v = kron_slots({"x": c * bx["r2"] / geometry.a_x**4}, basis, AXES)
    v = v + kron_slots({"y": c * by["r2"] / geometry.a_y**4}, basis, AXES)
    v = v + kron_slots({"z": const.field_energy(geometry.E_gate, bz["r"])}, basis, AXES)
    return v


def assemble_confinement(params, geometry, basis, const=CONST):
    return np.kron(orbital_confinement(params, geometry, basis, const), np.eye(4))


def zeeman_spin(params, field, const=CONST):
    jx, jy, jz, jx3, jy3, jz3 = spin_matrices()
    bx, by, bz = field.B
    h = params.kappa * (bx * jx + by * jy + bz * jz) + params.q * (bx * jx3 + by * jy3 + bz * jz3)
    return 2 * const.muB_meV * h


def assemble_zeeman(params, field, basis, const=CONST):
    return np.kron(np.eye(basis.orbital_dim), zeeman_spin(params, field, const))


def assemble_total(params, geometry, field, basis, const=CONST):
    h = assemble_luttinger_kohn(params, geometry, field, basis, const)
    h += assemble_bir_pikus(params, basis)
    h += assemble_confinement(params, geometry, basis, const)
    h += assemble_zeeman(params, field, basis, const)
    return check_hermitian(h, "H_total")


def position_operator(axis, basis):
    """Full-space position matrix (nm) along a Cartesian axis."""
    r = one_dimensional_blocks(axis, basis)["r"]
    return kron_slots({axis: r}, basis)


def dump_matrix(path, matrix):
    """Write a dimension header (int64) followed by row-major complex128 entries."""
    m = np.ascontiguousarray(matrix, dtype=np.complex128)
    with open(path, "wb") as fh:
        np.array([m.shape[0]], dtype="<i8").tofile(fh)
        m.astype("<c16").tofile(fh)


def load_matrix(path):
    with open(path, "rb") as fh:
        n = int(np.fromfile(fh, dtype="<i8", count=1)[0])
        data = np.fromfile(fh, dtype="<c16", count=n * n)
    return data.reshape(n, n)
