"""Matrix representations on the truncated product basis.

The product basis is |nx, ny, nz, j> with harmonic-oscillator states along
x and y, infinite-square-well states along z (well centred at z = 0) and the
spin-3/2 projection j in the order (+3/2, +1/2, -1/2, -3/2).  The flattened
index runs with j fastest, then nz, ny, nx, which is the Kronecker order
x (x) y (x) z (x) spin.

All one-dimensional matrix elements are closed forms, so every operator is
exact inside the truncation.  Lengths are in nm, wave vectors in nm^-1.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import HermiticityError

SLOTS = ("x", "y", "z", "spin")
SPIN_PROJECTIONS = (1.5, 0.5, -0.5, -1.5)
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    Nx: int = 12
    Ny: int = 6
    Nz: int = 10
    lx: float = 50.0
    ly: float = 50.0
    L: float = 15.0

    def __post_init__(self):
        if self.Nx < 4 or self.Ny < 4:
            raise ValueError("need at least 4 oscillator levels per in-plane axis")
        if self.Nz < 2:
            raise ValueError("need at least 2 well levels")
        if min(self.lx, self.ly, self.L) <= 0:
            raise ValueError("basis lengths must be positive")

    @property
    def orbital_dim(self):
        return self.Nx * self.Ny * self.Nz

    @property
    def dim(self):
        return 4 * self.orbital_dim

    def slot_dim(self, slot):
        return {"x": self.Nx, "y": self.Ny, "z": self.Nz, "spin": 4}[slot]


@dataclass(frozen=True)
class BasisState:
    nx: int
    ny: int
    nz: int
    j: float

    def flatten(self, basis):
        if not (0 <= self.nx < basis.Nx and 0 <= self.ny < basis.Ny and 1 <= self.nz <= basis.Nz):
            raise ValueError(f"{self} outside {basis}")
        ji = SPIN_PROJECTIONS.index(self.j)
        return ((self.nx * basis.Ny + self.ny) * basis.Nz + (self.nz - 1)) * 4 + ji

    @classmethod
    def unflatten(cls, index, basis):
        if not 0 <= index < basis.dim:
            raise ValueError(f"index {index} outside basis of dimension {basis.dim}")
        rest, ji = divmod(index, 4)
        rest, iz = divmod(rest, basis.Nz)
        nx, ny = divmod(rest, basis.Ny)
        return cls(nx, ny, iz + 1, SPIN_PROJECTIONS[ji])


def check_hermitian(matrix, name="operator", rtol=HERMITIAN_RTOL):
    """Raise HermiticityError when ||M - M^H||_max exceeds rtol * ||M||_max."""
    diff = np.abs(matrix - matrix.conj().T)
    worst = diff.max() if diff.size else 0.0
    scale = np.abs(matrix).max() if matrix.size else 0.0
    if worst > rtol * max(scale, np.finfo(float).tiny):
        i, j = np.unravel_index(np.argmax(diff), diff.shape)
        raise HermiticityError(
            f"{name} not Hermitian: worst |M - M^H| = {worst:.3e} at ({i}, {j}), "
            f"max |M| = {scale:.3e}"
        )
    return matrix


# -- harmonic oscillator ------------------------------------------------------


def _ladder(n):
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


@lru_cache(maxsize=32)
def _ho_blocks(n, length):
    # Build in an enlarged space so that quadratic products are exact after truncation.
    a = _ladder(n + 2)
    ad = a.T
    x = length / np.sqrt(2) * (a + ad)
    k = 1j / (length * np.sqrt(2)) * (ad - a)
    blocks = {
        "r": x,
        "k": k,
        "r2": x @ x,
        "k2": (k @ k).real,
        "rk": 0.5 * (x @ k + k @ x),
    }
    out = {}
    for key, m in blocks.items():
        m = np.ascontiguousarray(m[:n, :n])
        m.setflags(write=False)
        out[key] = m
    return out


def ho_position_and_momentum(axis, basis):
    """Position and wave-vector matrices of the oscillator along ``axis``."""
    if axis not in ("x", "y"):
        raise ValueError(f"invalid oscillator axis {axis!r}")
    n, length = (basis.Nx, basis.lx) if axis == "x" else (basis.Ny, basis.ly)
    if length <= 0:
        raise ValueError("oscillator length must be positive")
    b = _ho_blocks(n, float(length))
    return b["r"], b["k"]


# -- infinite square well -----------------------------------------------------


@lru_cache(maxsize=32)
def _well_blocks(nz, L):
    n = np.arange(1, nz + 1)
    N, M = np.meshgrid(n, n, indexing="ij")
    kn2 = (n * np.pi / L) ** 2
    dk2 = kn2[:, None] - kn2[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.pi**2 * (N**2 - M**2) ** 2
        z = np.where((N + M) % 2 == 1, -8 * L * N * M / denom, 0.0)
        z2 = np.where(((N + M) % 2 == 0) & (N != M), 8 * L**2 * N * M / denom, 0.0)
    z2[n - 1, n - 1] = L**2 * (1 / 12 - 1 / (2 * n**2 * np.pi**2))
    blocks = {
        "r": z,
        "r2": z2,
        # kz = (i/2)[kz^2, z] and {z, kz}/2 = (i/4)[kz^2, z^2]; both hold because
        # z*phi_n and z^2*phi_n vanish on the hard walls.
        "k": 0.5j * dk2 * z,
        "k2": np.diag(kn2).astype(float),
        "rk": 0.25j * dk2 * z2,
    }
    for m in blocks.values():
        m.setflags(write=False)
    return blocks


def well_position_and_momentum(basis):
    """Position, wave vector and position-squared of the centred hard-wall well."""
    b = _well_blocks(basis.Nz, float(basis.L))
    return b["r"], b["k"], b["r2"]


def one_dimensional_blocks(slot, basis):
    """Dict of exact 1-D matrices r, k, r2, k2 and rk = {r, k}/2 for a spatial slot."""
    if slot == "x":
        return _ho_blocks(basis.Nx, float(basis.lx))
    if slot == "y":
        return _ho_blocks(basis.Ny, float(basis.ly))
    if slot == "z":
        return _well_blocks(basis.Nz, float(basis.L))
    raise ValueError(f"invalid spatial slot {slot!r}")


def well_wavefunction(n, z, L):
    """Normalised hard-wall eigenfunction phi_n(z), zero outside [-L/2, L/2]."""
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) <= L / 2
    return np.where(inside, np.sqrt(2 / L) * np.sin(n * np.pi * (z / L + 0.5)), 0.0)


# -- spin 3/2 -----------------------------------------------------------------


@lru_cache(maxsize=1)
def spin_matrices():
    """(Jx, Jy, Jz, Jx^3, Jy^3, Jz^3) in the order (+3/2, +1/2, -1/2, -3/2)."""
    m = np.array(SPIN_PROJECTIONS)
    jp = np.zeros((4, 4))
    for i in range(1, 4):
        jp[i - 1, i] = np.sqrt(1.5 * 2.5 - m[i] * (m[i] + 1))
    jx = (0.5 * (jp + jp.T)).astype(complex)
    jy = -0.5j * (jp - jp.T)
    jz = np.diag(m).astype(complex)
    mats = (jx, jy, jz, jx @ jx @ jx, jy @ jy @ jy, jz @ jz @ jz)
    for mat in mats:
        mat.setflags(write=False)
    return mats


# -- products and embeddings --------------------------------------------------


def symmetrized_product(a, b):
    """{A, B}/2 = (AB + BA)/2."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    return 0.5 * (a @ b + b @ a)


def kron_slots(factors, basis, slots=SLOTS):
    """Kronecker product over ``slots`` with identities where no factor is given."""
    out = np.ones((1, 1))
    for slot in slots:
        n = basis.slot_dim(slot)
        f = factors.get(slot)
        if f is None:
            f = np.eye(n)
        elif f.shape != (n, n):
            raise ValueError(f"factor for slot {slot!r} has shape {f.shape}, expected {(n, n)}")
        out = np.kron(out, f)
    return out


def lift_to_product(op_1d, slot, basis):
    """Embed a single-slot operator into the full 4*Nx*Ny*Nz space."""
    if slot not in SLOTS:
        raise ValueError(f"invalid slot {slot!r}")
    return kron_slots({slot: np.asarray(op_1d)}, basis)


def lift_orbital(op_orb, basis):
    """Embed an orbital (Nx*Ny*Nz) operator as op (x) 1_spin."""
    if op_orb.shape != (basis.orbital_dim,) * 2:
        raise ValueError("orbital operator has wrong dimension")
    return np.kron(op_orb, np.eye(4))
