"""Physical constants and the internal unit system.

Internal units: energies in meV, lengths in nm, magnetic field in T,
electric field in V/m, angular frequencies in rad/s.
"""

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar  # J s
    e: float = _sc.e  # C
    m0: float = _sc.m_e  # kg
    muB: float = _sc.physical_constants["Bohr magneton"][0]  # J/T

    def __post_init__(self):
        for name in ("hbar", "e", "m0", "muB"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def meV(self):
        """One meV in joules."""
        return 1e-3 * self.e

    @property
    def kinetic_prefactor(self):
        """hbar^2 / (2 m0) in meV nm^2."""
        return self.hbar**2 / (2 * self.m0) / self.meV * 1e18

    @property
    def muB_meV(self):
        """Bohr magneton in meV/T."""
        return self.muB / self.meV

    @property
    def e_over_hbar(self):
        """e/hbar in nm^-2 T^-1 (Peierls coupling)."""
        return self.e / self.hbar * 1e-18

    def field_energy(self, field_V_per_m, length_nm):
        """Potential energy e*E*r in meV."""
        return field_V_per_m * length_nm * 1e-9 * 1e3

    def meV_to_rad_s(self, energy_meV):
        return energy_meV * self.meV / self.hbar

    def rad_s_to_meV(self, omega):
        return omega * self.hbar / self.meV


CONST = PhysicalConstants()
