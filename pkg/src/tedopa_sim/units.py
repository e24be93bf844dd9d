"""Unit conventions.

Energies are wavenumbers (cm^-1), times are picoseconds and temperatures are
kelvin. An energy E and a time t combine into a dimensionless phase
``E * t * CM1_PS_TO_RAD``.
"""

import math

#: Boltzmann constant in cm^-1 / K.
K_B_CM1_PER_K = 0.695034800

#: Speed of light in cm / ps.
C_CM_PER_PS = 0.0299792458

#: Angular frequency (rad/ps) of a 1 cm^-1 energy, 2*pi*c.
CM1_PS_TO_RAD = 2.0 * math.pi * C_CM_PER_PS


def beta_from_temperature(temperature):
    """Inverse temperature in cm for a temperature in kelvin."""
    return 1.0 / (K_B_CM1_PER_K * temperature)


def phase(energy_cm1, time_ps):
    """Dimensionless evolution parameter for an energy applied over a time."""
    return energy_cm1 * time_ps * CM1_PS_TO_RAD
