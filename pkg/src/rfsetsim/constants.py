"""Physical constants (CODATA 2018 exact values) and power-unit conversions."""

import math

ELECTRON_MASS_KG = 9.1093837015e-31
ELEMENTARY_CHARGE_C = 1.602176634e-19
BOLTZMANN_J_PER_K = 1.380649e-23
PLANCK_J_S = 6.62607015e-34
HBAR_J_S = PLANCK_J_S / (2.0 * math.pi)

# Superconducting resistance quantum h/(2e)^2, the superinductor criterion
# Z_L > R_Q.
R_QUANTUM_OHM = PLANCK_J_S / (4.0 * ELEMENTARY_CHARGE_C**2)


def dbm_to_watts(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    if p_watts <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_watts / 1e-3)
