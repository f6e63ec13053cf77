"""Bichromatic-drive analytics on a diagonalized qubit.

Second-order response C(omega), in rad s^-1 (V/m)^-2, split into

* ``c_bs``  - counter-rotating (Bloch-Siegert) term inside the qubit doublet,
  e^2 |x12|^2 / (2 hbar) / (Delta21 + hbar*omega);
* ``c_ac1`` - near-resonant AC Stark term inside the doublet,
  e^2 |x12|^2 / (2 hbar) / (Delta21 - hbar*omega);
* ``c_ac2`` - AC Stark shift through all higher levels,
  e^2 / (4 hbar) * sum_{n>2} [|x2n|^2 f(Delta2n) - |x1n|^2 f(Delta1n)],
  with f(Delta) = 2 Delta / (Delta^2 - hbar^2 omega^2).

The shift is delta_omega2 = (E2^(2) - E1^(2)) / hbar = sum_alpha C(omega_alpha) E_alpha^2.
A tone inside the fast-EDSR window |omega - omega0| <= edsr_factor * Omega drives
the transition and its doublet AC Stark term shows up as Rabi splitting, so
``c_ac1`` is dropped for it.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DenominatorVanishes,
    FMValidityViolated,
    NoCancellation,
    NoRootInBand,
    PoleProximity,
)

POLE_GUARD = 1e-3
TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class DriveTone:
    E: float  # V/m
    omega: float  # rad/s
    phi: float = 0.0

    def __post_init__(self):
        if self.E < 0:
            raise ValueError("tone amplitude must be non-negative")
        if not self.omega > 0:
            raise ValueError("tone frequency must be positive")


@dataclass(frozen=True)
class MaskConfig:
    line_width: float = 0.05  # fraction of omega0
    multiples: tuple = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    max_order: int = 3
    strong_factor: float = 20.0  # numerical meaning of ">>"
    edsr_factor: float = 2.0  # fast-EDSR window in units of Omega1

    def as_dict(self):
        return {
            "line_width": self.line_width,
            "multiples": list(self.multiples),
            "max_order": self.max_order,
            "strong_factor": self.strong_factor,
            "edsr_factor": self.edsr_factor,
        }


@dataclass(frozen=True)
class ValidityMask:
    multiphoton_excluded: bool
    autler_townes_ok: bool
    fm_valid: bool

    @property
    def masked(self):
        return self.multiphoton_excluded or not self.autler_townes_ok


@dataclass(frozen=True)
class Response:
    """C(omega) per unit E^2 for a single frequency."""

    omega: float
    c_bs: float
    c_ac1: float
    c_ac2: float
    resonant_excluded: bool = False

    @property
    def total(self):
        return self.c_bs + self.c_ac1 + self.c_ac2

    def positional_labels(self):
        """Conventional labels by position in the three-term response.

        Position 1 is the (Delta21 + hbar w) term, position 2 the
        (Delta21 - hbar w) term and position 3 the higher-level sum.
        """
        return {"C_AC,2": self.c_bs, "C_BS": self.c_ac1, "C_AC,1": self.c_ac2}


@dataclass(frozen=True)
class ShiftBreakdown:
    tones: tuple
    responses: tuple
    delta_omega2: float  # rad/s

    @property
    def c_bs(self):
        return np.array([r.c_bs for r in self.responses])

    @property
    def c_ac1(self):
        return np.array([r.c_ac1 for r in self.responses])

    @property
    def c_ac2(self):
        return np.array([r.c_ac2 for r in self.responses])

    @property
    def per_tone(self):
        return np.array([r.total * t.E**2 for r, t in zip(self.responses, self.tones)])


# -- rates --------------------------------------------------------------------


def _e_nm(qs):
    return qs.const.e * 1e-9


def rabi_rate(qs, tone):
    """Omega = e E |x12| / hbar (rad/s)."""
    E = tone.E if isinstance(tone, DriveTone) else float(tone)
    return _e_nm(qs) * E * abs(qs.x12) / qs.const.hbar


def effective_rabi(omega_rabi, omega0, omega):
    """Omega (1 - Omega^2 / (4 (omega0 + omega)^2))."""
    if not omega0 + omega > 0:
        raise ValueError("omega0 + omega must be positive")
    return omega_rabi * (1 - omega_rabi**2 / (4 * (omega0 + omega) ** 2))


# -- response -----------------------------------------------------------------


def _check_poles(deltas, hw, what):
    near = np.minimum(np.abs(deltas - hw), np.abs(deltas + hw)) < POLE_GUARD * np.abs(deltas)
    if np.any(near):
        k = int(np.argmax(near))
        raise PoleProximity(
            f"hbar*omega = {hw:.6g} meV within guard band of {what} transition Delta = {deltas[k]:.6g} meV "
            "(near resonance a degenerate Floquet/Rabi treatment is required)"
        )


def response_function(qs, omega, include_resonant=True, n_max=None, return_partial=False):
    """Second-order response C(omega) split into its three terms.

    ``n_max`` truncates the higher-level sum (levels 3..n_max); with
    ``return_partial`` the cumulative sum over n is returned as well.
    """
    const = qs.const
    J = const.meV
    hw = const.rad_s_to_meV(omega)
    E = qs.energies if n_max is None else qs.energies[:n_max]
    d21 = qs.E2 - qs.E1
    pref = _e_nm(qs) ** 2 / const.hbar  # per |x|^2 in nm^2, per energy in J

    x12sq = abs(qs.x12) ** 2
    if d21 > 0:
        c_bs = 0.5 * pref * x12sq / ((d21 + hw) * J)
        if include_resonant:
            _check_poles(np.array([d21]), hw, "qubit")
            c_ac1 = 0.5 * pref * x12sq / ((d21 - hw) * J)
        else:
            c_ac1 = 0.0
    else:
        # degenerate doublet: no first-order dispersive doublet response
        c_bs = c_ac1 = 0.0

    d1 = E[0] - E[2:]
    d2 = E[1] - E[2:]
    _check_poles(d1, hw, "orbital (level 1)")
    _check_poles(d2, hw, "orbital (level 2)")
    x1 = np.abs(qs.dipoles[0, 2 : len(E)]) ** 2
    x2 = np.abs(qs.dipoles[1, 2 : len(E)]) ** 2
    f1 = 2 * d1 / (d1**2 - hw**2)
    f2 = 2 * d2 / (d2**2 - hw**2)
    terms = 0.25 * pref / J * (x2 * f2 - x1 * f1)
    c_ac2 = float(terms.sum())
    r = Response(float(omega), float(c_bs), float(c_ac1), c_ac2, resonant_excluded=not include_resonant)
    if return_partial:
        return r, np.cumsum(terms)
    return r


def is_resonant(qs, tone, edsr_factor=MaskConfig.edsr_factor):
    om = rabi_rate(qs, tone)
    return om > 0 and abs(tone.omega - qs.omega0) <= edsr_factor * om


def second_order_shift(qs, tones, edsr_factor=MaskConfig.edsr_factor):
    tones = tuple(tones)
    responses = []
    total = 0.0
    for i, tone in enumerate(tones):
        if tone.E == 0:
            responses.append(Response(tone.omega, 0.0, 0.0, 0.0))
            continue
        try:
            r = response_function(qs, tone.omega, include_resonant=not is_resonant(qs, tone, edsr_factor))
        except PoleProximity as exc:
            raise PoleProximity(str(exc), tone_index=i) from exc
        responses.append(r)
        total += r.total * tone.E**2
    return ShiftBreakdown(tones, tuple(responses), float(total))


# -- cancellation ---------------------------------------------------------------


def primary_response(qs, omega1):
    """Response of the resonant primary tone: Bloch-Siegert plus higher levels."""
    r = response_function(qs, omega1, include_resonant=False)
    return r.c_bs + r.c_ac2


def ratio_R0(qs, omega1, omega2):
    """R0 = C(omega2) / [C_BS(omega1) + C_AC2(omega1)]; cancellation needs R0 = -E1^2/E2^2."""
    den = primary_response(qs, omega1)
    num = response_function(qs, omega2).total
    if den == 0 or abs(den) < 1e-14 * abs(num):
        raise DenominatorVanishes(f"primary response vanishes at omega1 = {omega1:.6g} rad/s")
    return num / den


@dataclass(frozen=True)
class CancellationAmplitude:
    E2: float
    practical: bool


def solve_cancellation_amplitude(R0, E1, practical_factor=5.0):
    """E2 = E1 / sqrt(-R0); flagged impractical outside [E1/f, f*E1]."""
    if not R0 < 0:
        raise NoCancellation(f"R0 = {R0:.4g} >= 0: both tones shift the qubit the same way")
    E2 = E1 / np.sqrt(-R0)
    return CancellationAmplitude(float(E2), bool(E1 / practical_factor <= E2 <= practical_factor * E1))


def bichromatic_shift(qs, E1, E2, omega2, omega1=None):
    """delta_omega2 with the primary at omega1 (default omega0) and a detuned auxiliary tone."""
    omega1 = qs.omega0 if omega1 is None else omega1
    return primary_response(qs, omega1) * E1**2 + response_function(qs, omega2).total * E2**2


def pole_frequencies(qs):
    """All transition frequencies (rad/s) at which C(omega) diverges."""
    E = qs.energies
    d = np.concatenate([[E[1] - E[0]], np.abs(E[2:] - E[0]), np.abs(E[2:] - E[1])])
    return np.sort(qs.const.meV_to_rad_s(d))


def find_cancellation_frequencies(qs, E1, E2, band, mask=None, n_scan=400, xtol=None):
    """Roots of delta_omega2(omega2) at fixed omega1 = omega0 inside ``band``.

    ``mask`` is an optional callable omega2 -> bool (True = excluded).  Sign
    changes across a pole are not roots and are skipped.
    """
    lo, hi = band
    grid = np.linspace(lo, hi, n_scan)
    poles = pole_frequencies(qs)

    def f(w):
        return bichromatic_shift(qs, E1, E2, w)

    vals = np.full(grid.shape, np.nan)
    for i, w in enumerate(grid):
        if mask is not None and mask(w):
            continue
        try:
            vals[i] = f(w)
        except PoleProximity:
            pass
    roots = []
    tol = xtol if xtol is not None else 1e-12 * hi
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or np.sign(a) == np.sign(b):
            continue
        if np.any((poles > grid[i]) & (poles < grid[i + 1])):
            continue
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))
    if not roots:
        raise NoRootInBand(f"no sign change of delta_omega2 in [{lo:.6g}, {hi:.6g}] rad/s")
    return sorted(roots)


# -- multi-tone Rabi estimates -------------------------------------------------


def beat_envelope_rabi(Omega1, Omega2, phi1=0.0, phi2=0.0, averaged=True):
    """Effective Rabi rate of two near-degenerate tones."""
    if averaged:
        return float(np.hypot(Omega1, Omega2))
    val = Omega1**2 + Omega2**2 + 2 * Omega1 * Omega2 * np.cos(phi2 - phi1)
    return float(np.sqrt(max(val, 0.0)))


def mixed_channel_rabi(Omega1, Omega2, omega0, omega1, omega2, strong_factor=MaskConfig.strong_factor):
    """Off-resonant estimate of the lowest mixed (1,1) channel."""
    for Om, w in ((Omega1, omega1), (Omega2, omega2)):
        if abs(omega0 - w) <= strong_factor * Om:
            raise FMValidityViolated(
                f"|omega0 - omega| = {abs(omega0 - w):.4g} not >> Omega = {Om:.4g}; estimate breaks down near resonance"
            )
    return 0.5 * Omega1 * Omega2 * (omega1 / (omega0**2 - omega1**2) + omega2 / (omega0**2 - omega2**2))


# -- validity -----------------------------------------------------------------


def multiphoton_lines(omega1, omega0, cfg=MaskConfig()):
    """omega2 values excluded for a given primary frequency."""
    lines = [k * omega0 for k in cfg.multiples]
    for n in range(-cfg.max_order, cfg.max_order + 1):
        for m in range(-cfg.max_order, cfg.max_order + 1):
            if m == 0 or abs(n) + abs(m) > cfg.max_order:
                continue
            w = (omega0 - n * omega1) / m
            if w > 0:
                lines.append(w)
    return np.array(sorted(lines))


def validity_mask(omega1, omega2, omega0, Omega1, Omega2, cfg=MaskConfig()):
    width = cfg.line_width * omega0
    excluded = bool(np.any(np.abs(omega2 - multiphoton_lines(omega1, omega0, cfg)) < width))
    # pure harmonics of the primary other than the one-photon line
    for n in range(2, cfg.max_order + 1):
        excluded |= abs(n * omega1 - omega0) < width
    at_ok = abs(omega2 - omega0) > cfg.strong_factor * max(Omega1, Omega2)
    fm_ok = all(abs(omega0 - w) > cfg.strong_factor * Om for Om, w in ((Omega1, omega1), (Omega2, omega2)))
    return ValidityMask(excluded, bool(at_ok), bool(fm_ok))
