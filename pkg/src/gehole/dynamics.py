"""Direct time evolution of the driven qubit, used as an oracle for the perturbative shifts.

Units: angular frequencies in rad/s, time in s, hbar = 1 inside this module.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import FMValidityViolated, UnitarityError

UNITARITY_TOL = 1e-8
MIN_STEPS_PER_PERIOD = 40
_GAUSS = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6


@dataclass(frozen=True)
class Propagator:
    U: np.ndarray
    t_final: float
    step: float

    def __post_init__(self):
        check_unitary(self.U)


@dataclass(frozen=True)
class Drive:
    """One tone of the time-dependent coupling Omega * cos(omega t + phi)."""

    Omega: float
    omega: float
    phi: float = 0.0


def check_unitary(U, tol=UNITARITY_TOL):
    U = np.asarray(U)
    err = np.abs(np.swapaxes(U, -1, -2).conj() @ U - np.eye(U.shape[-1])).max()
    if err > tol:
        raise UnitarityError(f"||U^H U - 1||_max = {err:.3e} exceeds {tol:.0e}")
    return U


def _polar(U):
    """Nearest unitary (batched)."""
    w, _, vh = np.linalg.svd(U)
    return w @ vh


def _ordered_product(steps):
    """U_N ... U_2 U_1 for steps in time order, by pairwise reduction."""
    while len(steps) > 1:
        odd = steps[-1:] if len(steps) % 2 else None
        steps = _polar(steps[1::2][: len(steps) // 2] @ steps[0::2][: len(steps) // 2])
        if odd is not None:
            steps = np.concatenate([steps, odd])
    return steps[0]


def magnus4(hamiltonian, t0, t1, n_steps):
    """Fourth-order Magnus propagator of i dU/dt = H(t) U.

    ``hamiltonian`` maps an array of times (n,) to matrices (n, d, d).
    """
    if n_steps < 1:
        raise ValueError("need at least one step")
    dt = (t1 - t0) / n_steps
    starts = t0 + dt * np.arange(n_steps)
    h1 = hamiltonian(starts + _GAUSS[0] * dt)
    h2 = hamiltonian(starts + _GAUSS[1] * dt)
    comm = h1 @ h2 - h2 @ h1
    # with A = -iH: Omega_4 = dt/2 (A1 + A2) - (sqrt3/12) dt^2 [A1, A2]
    gen = -0.5j * dt * (h1 + h2) + np.sqrt(3) / 12 * dt**2 * comm
    steps = _polar(scipy.linalg.expm(gen))
    return Propagator(_ordered_product(steps), t1 - t0, dt)


# -- two-level model ----------------------------------------------------------


def qubit_hamiltonian(omega0, drives, theta=0.0):
    """H(t) = (omega0/2) diag(-1, 1) + sum Omega cos(omega t + phi) [[0, e^-i theta], [e^i theta, 0]]."""
    drives = tuple(drives)
    coupling = np.array([[0, np.exp(-1j * theta)], [np.exp(1j * theta), 0]])
    static = 0.5 * omega0 * np.diag([-1.0, 1.0]).astype(complex)

    def h(t):
        t = np.atleast_1d(t)
        amp = sum(d.Omega * np.cos(d.omega * t + d.phi) for d in drives) if drives else np.zeros_like(t)
        return static[None] + np.asarray(amp)[:, None, None] * coupling[None]

    return h


def _min_period(omega0, drives):
    freqs = [abs(omega0)] + [d.omega for d in drives]
    freqs = [f for f in freqs if f > 0]
    return 2 * np.pi / max(freqs) if freqs else np.inf


def evolve_driven_qubit(omega0, drives, T, step=None, theta=0.0):
    """Propagator over [0, T] with counter-rotating terms kept."""
    drives = tuple(drives)
    limit = _min_period(omega0, drives) / MIN_STEPS_PER_PERIOD
    step = limit if step is None else step
    if step > limit * (1 + 1e-12):
        raise ValueError(f"step {step:.3e} s exceeds 1/{MIN_STEPS_PER_PERIOD} of the shortest period")
    n = max(1, int(np.ceil(T / step)))
    return magnus4(qubit_hamiltonian(omega0, drives, theta), 0.0, T, n)


def rationalize(ratio, max_denominator=10_000, tol=1e-6):
    """Continued-fraction approximation p/q of ``ratio``; errors if not within ``tol`` relative."""
    frac = Fraction(ratio).limit_denominator(max_denominator)
    if abs(float(frac) - ratio) > tol * abs(ratio):
        raise ValueError(f"frequency ratio {ratio!r} not commensurate within {tol} (best {frac})")
    return frac


def common_period(omegas, max_denominator=10_000, tol=1e-6):
    """Shortest T with every omega*T a multiple of 2 pi, after rationalizing against omegas[0]."""
    base = omegas[0]
    q = 1
    for w in omegas[1:]:
        frac = rationalize(w / base, max_denominator, tol)
        q = np.lcm(q, frac.denominator)
    return 2 * np.pi * q / base


def _wrap(x, period):
    return (x + 0.5 * period) % period - 0.5 * period


def floquet_splitting(U, T, omega0, labels=(0, 1)):
    """Dressed-qubit splitting shift (rad/s) from a one-period propagator.

    Floquet states are matched to the bare levels by overlap; the splitting is
    defined modulo the drive frequency 2 pi / T and unwrapped around omega0.
    """
    lam, vec = np.linalg.eig(U)
    eps = -np.angle(lam) / T
    pick = [int(np.argmax(np.abs(vec[k]))) for k in labels]
    if pick[0] == pick[1]:
        raise ValueError("Floquet states could not be matched to the qubit levels")
    return _wrap(eps[pick[1]] - eps[pick[0]] - omega0, 2 * np.pi / T)


def quasi_energy_shift(omega0, omega, Omega_ladder, theta=0.0, steps_per_period=2000, strong_factor=20.0):
    """Exact two-level quasi-energy shift for each drive strength in ``Omega_ladder``.

    The Hamiltonian is periodic in 2 pi / omega, so a single drive period
    suffices; omega0 need not be commensurate with omega.
    """
    Om = np.atleast_1d(np.asarray(Omega_ladder, dtype=float))
    if np.any(np.abs(omega0 - omega) <= strong_factor * Om):
        raise FMValidityViolated("tone too close to resonance for a quasi-energy shift")
    T = 2 * np.pi / omega
    n = max(steps_per_period, int(np.ceil(MIN_STEPS_PER_PERIOD * T / _min_period(omega0, [Drive(0, omega)]))))
    out = []
    for o in Om:
        U = magnus4(qubit_hamiltonian(omega0, [Drive(o, omega)], theta), 0.0, T, n).U
        out.append(floquet_splitting(U, T, omega0))
    return np.array(out)


# -- multilevel mode ----------------------------------------------------------


def dipole_matrix(wp, d):
    """<m|x|n> (nm) between the lowest d eigenstates of a working point."""
    from .hamiltonian import position_operator

    if not 2 <= d <= 12:
        raise ValueError("multilevel mode supports 2 <= d <= 12")
    v = wp.spectrum.states[:, :d]
    return v.conj().T @ (position_operator("x", wp.basis) @ v)


def multilevel_hamiltonian(energies_rad, coupling, omega, phi=0.0):
    """H(t) = diag(energies) + cos(omega t + phi) * coupling (rad/s)."""
    static = np.diag(np.asarray(energies_rad, dtype=complex))
    coupling = np.asarray(coupling, dtype=complex)

    def h(t):
        t = np.atleast_1d(t)
        return static[None] + np.cos(omega * t + phi)[:, None, None] * coupling[None]

    return h


def multilevel_quasi_energy_shift(wp, omega, E_ladder, d=12, steps_per_period=4000):
    """Quasi-energy shift of the qubit splitting in the lowest-d-level model, field along x."""
    const = wp.qubit.const
    energies = wp.spectrum.energies[:d]
    e_rad = const.meV_to_rad_s(energies - energies[:2].mean())
    omega0 = e_rad[1] - e_rad[0]
    x = dipole_matrix(wp, d)
    per_field = const.e * 1e-9 / const.hbar  # rad/s per (V/m nm)
    T = 2 * np.pi / omega
    n = max(steps_per_period, int(np.ceil(MIN_STEPS_PER_PERIOD * T * np.abs(e_rad).max() / (2 * np.pi))))
    out = []
    for E in np.atleast_1d(E_ladder):
        U = magnus4(multilevel_hamiltonian(e_rad, per_field * E * x, omega), 0.0, T, n).U
        out.append(floquet_splitting(U, T, omega0))
    return np.array(out)


def fit_exponent(x, y):
    """Slope of log|y| against log x."""
    return float(np.polyfit(np.log(x), np.log(np.abs(y)), 1)[0])


# -- gates --------------------------------------------------------------------


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
X_PI = -1j * SIGMA_X


def average_gate_fidelity(U_actual, U_ideal=X_PI):
    """F = (d + |Tr(U_ideal^H U_actual)|^2) / (d (d + 1))."""
    U_actual = check_unitary(U_actual)
    U_ideal = check_unitary(U_ideal)
    if U_actual.shape != U_ideal.shape:
        raise ValueError("dimension mismatch")
    d = U_actual.shape[0]
    return float((d + abs(np.trace(U_ideal.conj().T @ U_actual)) ** 2) / (d * (d + 1)))


def detuned_pi_pulse(Omega, delta, duration_policy="ideal"):
    """Rotating-frame propagator of H = (delta/2) sigma_z + (Omega/2) sigma_x.

    ``duration_policy`` is "ideal" (t = pi/Omega) or "generalized"
    (t = pi/sqrt(Omega^2 + delta^2)).
    """
    if duration_policy == "ideal":
        t = np.pi / Omega
    elif duration_policy == "generalized":
        t = np.pi / np.hypot(Omega, delta)
    else:
        raise ValueError(f"unknown duration policy {duration_policy!r}")
    H = 0.5 * delta * SIGMA_Z + 0.5 * Omega * SIGMA_X
    return Propagator(scipy.linalg.expm(-1j * t * H), t, t)
