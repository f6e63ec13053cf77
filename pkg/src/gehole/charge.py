"""Single quasi-static charge defect and the residual qubit detuning.

The defect is a Yukawa (Thomas-Fermi screened) Coulomb centre.  Its qubit
shift hbar*delta_omega_c = <2|V|2> - <1|V|1> is evaluated by tensor
Gauss-Legendre quadrature of the two qubit densities.  The in-plane
quadrature uses composite panels refined around the defect, because the
potential varies on the screening length, which is much shorter than the dot.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy.optimize import minimize_scalar

from .drive import bichromatic_shift, primary_response, ratio_R0
from .errors import EmptyBandAfterMask, NoCancellation, PoleProximity, QuadratureError

log = logging.getLogger(__name__)

# e^2 / (4 pi eps0) in meV nm
COULOMB_MEV_NM = sc.e / (4 * np.pi * sc.epsilon_0) * 1e9 * 1e3


@dataclass(frozen=True)
class DefectConfig:
    position: tuple = (30.0, 0.0, -12.5)  # nm; 30 nm lateral, 5 nm below a 15 nm well
    charge_sign: int = 1
    screening_length: float = 5.0  # nm
    epsilon_r: float = 15.36
    allow_inside_well: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 3:
            raise ValueError("defect position must be a 3-vector")
        if self.charge_sign not in (1, -1):
            raise ValueError("charge_sign must be +1 or -1")
        if not self.screening_length > 0:
            raise ValueError("screening length must be positive")
        if not self.epsilon_r > 0:
            raise ValueError("epsilon_r must be positive")

    def check_outside(self, L):
        if not self.allow_inside_well and abs(self.position[2]) <= L / 2:
            raise ValueError(f"defect at z = {self.position[2]} nm lies inside the well |z| <= {L / 2} nm")


def tf_potential(r, defect):
    """Screened Coulomb energy (meV) of a hole at r (nm, shape (..., 3))."""
    d = np.linalg.norm(np.asarray(r, dtype=float) - np.asarray(defect.position), axis=-1)
    if np.any(d == 0):
        raise ValueError("potential evaluated at the defect position")
    return defect.charge_sign * COULOMB_MEV_NM / (defect.epsilon_r * d) * np.exp(-d / defect.screening_length)


# -- basis functions on quadrature grids --------------------------------------


def ho_wavefunctions(n, x, length):
    """Normalised oscillator functions psi_0..psi_{n-1} at x; shape (len(x), n)."""
    xi = np.asarray(x, dtype=float) / length
    out = np.empty((xi.size, n))
    out[:, 0] = np.pi**-0.25 / np.sqrt(length) * np.exp(-0.5 * xi**2)
    if n > 1:
        out[:, 1] = np.sqrt(2) * xi * out[:, 0]
    for k in range(1, n - 1):
        out[:, k + 1] = np.sqrt(2 / (k + 1)) * xi * out[:, k] - np.sqrt(k / (k + 1)) * out[:, k - 1]
    return out


def well_wavefunctions(n, z, L):
    k = np.arange(1, n + 1)
    return np.sqrt(2 / L) * np.sin(np.pi * np.outer(z / L + 0.5, k))


def _composite_gl(edges, order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    pts, wts = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        pts.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * wg)
    return np.concatenate(pts), np.concatenate(wts)


def _inplane_edges(centre, length, x_d, lam, extent=7.0):
    lo = min(-extent * length, x_d - 12 * lam)
    hi = max(extent * length, x_d + 12 * lam)
    cuts = [x_d + s * lam for s in (-12, -4, -1.5, -0.5, 0.5, 1.5, 4, 12)]
    cuts += [centre + s * length for s in (-3, -1, 0, 1, 3)]
    edges = sorted({lo, hi, *[c for c in cuts if lo < c < hi]})
    return np.array(edges)


def _grid(basis, defect, order):
    defect.check_outside(basis.L)
    lam = defect.screening_length
    xd, yd, _ = defect.position
    gx, wx = _composite_gl(_inplane_edges(0.0, basis.lx, xd, lam), order)
    gy, wy = _composite_gl(_inplane_edges(0.0, basis.ly, yd, lam), order)
    gz, wz = _composite_gl(np.linspace(-basis.L / 2, basis.L / 2, 3), order)
    X, Y, Z = np.meshgrid(gx, gy, gz, indexing="ij")
    V = tf_potential(np.stack([X, Y, Z], axis=-1), defect)
    VW = V * (wx[:, None, None] * wy[None, :, None] * wz[None, None, :])
    funcs = (
        ho_wavefunctions(basis.Nx, gx, basis.lx),
        ho_wavefunctions(basis.Ny, gy, basis.ly),
        well_wavefunctions(basis.Nz, gz, basis.L),
    )
    return VW, funcs


def defect_expectations(wp, defect, order=16, states=(0, 1)):
    """<m|V|m> (meV) for the requested eigenstates at a fixed quadrature order.

    The eigenstates are rebuilt on the quadrature grid and their densities
    integrated against V directly.
    """
    basis = wp.basis
    VW, (fx, fy, fz) = _grid(basis, defect, order)
    out = []
    for m in states:
        c = wp.spectrum.states[:, m].reshape(basis.Nx, basis.Ny, basis.Nz, 4)
        psi = np.einsum("abcs,kc->abks", c, fz)
        psi = np.einsum("abks,jb->ajks", psi, fy)
        psi = np.einsum("ajks,ia->ijks", psi, fx)
        rho = np.sum(np.abs(psi) ** 2, axis=-1)
        out.append(float(np.sum(rho * VW)))
    return tuple(out)


def defect_matrix(basis, defect, order=16):
    """Orbital matrix of V (meV) on the product basis, spin-diagonal."""
    VW, (fx, fy, fz) = _grid(basis, defect, order)
    m = np.einsum("ijk,kc,kd->ijcd", VW, fz, fz, optimize=True)
    m = np.einsum("ijcd,jb,je->ibecd", m, fy, fy, optimize=True)
    m = np.einsum("ibecd,ia,if->abcfed", m, fx, fx, optimize=True)
    n = basis.orbital_dim
    # rows (a, b, c), columns (f, e, d)
    return m.reshape(n, n)


@dataclass(frozen=True)
class ChargeShift:
    delta_omega_c: float  # rad/s
    order: int
    history: tuple  # (order, delta_omega_c) pairs


def charge_shift(wp, defect, order=12, rtol=0.01, max_order=96):
    """delta_omega_c with quadrature order doubled until stable to ``rtol``."""
    const = wp.qubit.const
    history = []
    prev = None
    while order <= max_order:
        v1, v2 = defect_expectations(wp, defect, order)
        val = const.meV_to_rad_s(v2 - v1)
        history.append((order, val))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            log.debug("charge shift converged at order %d: %s", order, history)
            return ChargeShift(val, order, tuple(history))
        prev = val
        order *= 2
    raise QuadratureError(f"defect quadrature did not converge to {rtol}: {history}")


# -- residual detuning --------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    delta_omega_c: float
    delta_omega2: float
    delta_omega_res: float
    omega2_star: float
    baseline_mono: float

    @property
    def reduction(self):
        """|baseline| / |delta_omega_res|."""
        return abs(self.baseline_mono) / abs(self.delta_omega_res) if self.delta_omega_res else np.inf


def baseline_residual(qs, delta_omega_c, E1):
    """Single-tone residual: primary at omega0 with E1, no auxiliary tone."""
    return delta_omega_c + primary_response(qs, qs.omega0) * E1**2


def auxiliary_amplitude(qs, E1, omega2, policy="fixed"):
    if policy == "fixed":
        return E1
    if policy == "cancel":
        R0 = ratio_R0(qs, qs.omega0, omega2)
        if not R0 < 0:
            raise NoCancellation(f"R0 = {R0:.4g} at omega2 = {omega2:.6g}")
        return E1 / np.sqrt(-R0)
    raise ValueError(f"unknown E2 policy {policy!r}")


def residual_detuning(qs, delta_omega_c, E1, omega2=None, E2=0.0):
    """delta_omega_res = delta_omega_c + delta_omega2 with the primary at omega0."""
    if omega2 is None or E2 == 0:
        d2 = primary_response(qs, qs.omega0) * E1**2
        omega2 = np.nan
    else:
        d2 = bichromatic_shift(qs, E1, E2, omega2)
    return ResidualReport(
        delta_omega_c=delta_omega_c,
        delta_omega2=d2,
        delta_omega_res=delta_omega_c + d2,
        omega2_star=omega2,
        baseline_mono=baseline_residual(qs, delta_omega_c, E1),
    )


def residual_scan(qs, delta_omega_c, E1, grid, policy="fixed", mask=None):
    """|delta_omega_res| over a grid of omega2; masked or invalid points are NaN."""
    vals = np.full(len(grid), np.nan)
    for i, w in enumerate(grid):
        if mask is not None and mask(w):
            continue
        try:
            E2 = auxiliary_amplitude(qs, E1, w, policy)
            vals[i] = residual_detuning(qs, delta_omega_c, E1, w, E2).delta_omega_res
        except (NoCancellation, PoleProximity):
            continue
    return vals


def minimize_residual(qs, delta_omega_c, E1, band, policy="fixed", mask=None, n_scan=400):
    """Dense scan of |delta_omega_res|(omega2) refined by bounded golden-section/Brent search.

    ``mask`` is a callable omega2 -> bool (True = excluded).
    """
    grid = np.linspace(band[0], band[1], n_scan)
    vals = residual_scan(qs, delta_omega_c, E1, grid, policy, mask)
    ok = np.isfinite(vals)
    if not ok.any():
        raise EmptyBandAfterMask(f"no admissible omega2 in [{band[0]:.6g}, {band[1]:.6g}]")
    i = int(np.nanargmin(np.abs(vals)))
    w_star = grid[i]
    if 0 < i < len(grid) - 1 and ok[i - 1] and ok[i + 1]:
        def objective(w):
            if mask is not None and mask(w):
                return np.inf
            try:
                E2 = auxiliary_amplitude(qs, E1, w, policy)
                return abs(residual_detuning(qs, delta_omega_c, E1, w, E2).delta_omega_res)
            except (NoCancellation, PoleProximity):
                return np.inf

        res = minimize_scalar(
            objective, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
            options={"xatol": 1e-9 * grid[i]},
        )
        if grid[i - 1] <= res.x <= grid[i + 1] and res.fun <= abs(vals[i]):
            w_star = float(res.x)
    E2 = auxiliary_amplitude(qs, E1, w_star, policy)
    return residual_detuning(qs, delta_omega_c, E1, w_star, E2)
