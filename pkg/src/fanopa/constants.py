"""Physical constants and unit conversions.

Internal unit conventions: energies, linewidths and detunings in MHz
(E/h), magnetic field in gauss, temperature in microkelvin, rate
coefficients in cm^3/s.
"""

from dataclasses import dataclass

import numpy as np
from scipy import constants as sc

#: mass of a 133Cs atom in atomic mass units
CS133_MASS_U = 132.905451961


@dataclass(frozen=True)
class PhysicalConstants:
    hbar_over_kB: float = sc.hbar / sc.k  # K s
    kB_over_h: float = sc.k / sc.h  # Hz/K
    reduced_mass: float = 0.5 * CS133_MASS_U * sc.atomic_mass  # kg
    bohr_radius: float = sc.physical_constants["Bohr radius"][0]  # m

    def __post_init__(self):
        for name in ("hbar_over_kB", "kB_over_h", "reduced_mass", "bohr_radius"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value}")

    @property
    def h(self):
        return sc.h

    @property
    def hbar(self):
        return sc.hbar

    @property
    def kB(self):
        return self.kB_over_h * sc.h


CONSTANTS = PhysicalConstants()


def thermal_energy_mhz(temperature_uK, const=CONSTANTS):
    """k_B T / h in MHz for a temperature in microkelvin."""
    return const.kB_over_h * temperature_uK * 1e-6 * 1e-6


def mhz_to_joule(energy_mhz):
    return sc.h * energy_mhz * 1e6


def thermal_rate_prefactor(temperature_uK, const=CONSTANTS):
    """k_B T / (h Q_T) in cm^3/s.

    Q_T = (2 pi mu k_B T / h^2)^(3/2) is the translational partition
    function per unit volume.  Multiplying by a dimensionless |S|^2
    gives a rate coefficient.
    """
    kT = const.kB * temperature_uK * 1e-6
    q_t = (2.0 * np.pi * const.reduced_mass * kT / const.h**2) ** 1.5  # m^-3
    return kT / (const.h * q_t) * 1e6  # m^3/s -> cm^3/s
