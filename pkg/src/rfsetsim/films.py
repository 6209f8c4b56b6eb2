"""Superconducting thin-film physics.

Pure functions mapping film geometry, temperature and bias current to kinetic
inductance, switching current and normal/superconducting state.

Unit conventions on the public surface: lengths in um (thickness in nm),
temperatures in K, currents in uA, inductances in nH, resistances in kOhm.
The current nonlinearity scale ``I_star_uA`` is a *peak amplitude*: the rf
current entering the bias model is the amplitude of the sinusoidal drive, not
its RMS value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import ELECTRON_MASS_KG, ELEMENTARY_CHARGE_C


class FilmType(enum.Enum):
    TYPE_A = "TypeA"
    TYPE_B = "TypeB"


class TemperatureAboveCritical(ValueError):
    """The film is normal: effective temperature at or above T_C."""


@dataclass(frozen=True)
class FilmSpec:
    """Geometry and material parameters of one TiN strip.

    W_um, L_um      planar width / length of the strip (um)
    t_nm            film thickness (nm)
    T_C_K           critical temperature (K)
    sheet_Lk0_nH    kinetic inductance per square at T=0, I=0 (nH/sq)
    J_c_A_per_mm2   critical current density (A/mm^2)
    I_star_uA       current-nonlinearity scale, peak amplitude (uA)
    R_normal_kohm   normal-state resistance of the whole strip (kOhm)
    """

    W_um: float
    L_um: float
    t_nm: float
    T_C_K: float
    sheet_Lk0_nH: float
    J_c_A_per_mm2: float
    I_star_uA: float
    R_normal_kohm: float
    film_type: FilmType = FilmType.TYPE_B

    def __post_init__(self):
        for name in ("W_um", "L_um", "t_nm", "T_C_K", "sheet_Lk0_nH",
                     "J_c_A_per_mm2", "I_star_uA", "R_normal_kohm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def n_squares(self) -> float:
        return self.L_um / self.W_um


@dataclass(frozen=True)
class ThermalState:
    """Mixing-chamber temperature plus the chip's minimum electron temperature."""

    T_MXC_K: float
    T_el_K: float = 0.35

    def __post_init__(self):
        if not (math.isfinite(self.T_MXC_K) and self.T_MXC_K >= 0.0):
            raise ValueError(f"T_MXC_K must be >= 0, got {self.T_MXC_K!r}")
        if not (math.isfinite(self.T_el_K) and self.T_el_K > 0.0):
            raise ValueError(f"T_el_K must be > 0, got {self.T_el_K!r}")


@dataclass(frozen=True)
class BiasState:
    """dc current plus rf current amplitude (both uA; I_rf is a peak value)."""

    I_dc_uA: float
    I_rf_uA: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.I_dc_uA):
            raise ValueError("I_dc_uA must be finite")
        if not (math.isfinite(self.I_rf_uA) and self.I_rf_uA >= 0.0):
            raise ValueError(f"I_rf_uA must be >= 0, got {self.I_rf_uA!r}")


def effective_temperature(th: ThermalState) -> float:
    """Quartic-mean effective temperature (T_MXC^4 + T_el^4)^(1/4), in K.

    The fourth-power combination models thermalisation through insulating
    layers; it saturates at T_el when the mixing chamber is colder than the
    chip's static dissipation allows.
    """
    return (th.T_MXC_K**4 + th.T_el_K**4) ** 0.25


def lk_of_temperature(spec: FilmSpec, th: ThermalState) -> float:
    """Total kinetic inductance (nH) of the strip at zero bias current.

    L_K(T) = n_squares * sheet_Lk0 / (1 - T/T_C) with T the effective
    temperature; diverges at T_C.

    Raises TemperatureAboveCritical for T >= T_C (the superconducting domain
    is the open interval [0, T_C); the boundary is classified as normal).
    """
    t_eff = effective_temperature(th)
    if t_eff >= spec.T_C_K:
        raise TemperatureAboveCritical(
            f"effective temperature {t_eff:.6g} K >= T_C {spec.T_C_K:.6g} K")
    return spec.n_squares * spec.sheet_Lk0_nH / (1.0 - t_eff / spec.T_C_K)


def current_bracket(i_dc, i_rf, i_star):
    """Bias enhancement factor 1 + (I_dc + I_rf)^2 / I*^2 (numpy-transparent).

    Algebraically identical to 1 + I_dc^2/I*^2 + 2 I_dc I_rf/I*^2 + I_rf^2/I*^2;
    the compact form makes the dc<->rf exchange symmetry exact in floating
    point.
    """
    s = (np.asarray(i_dc, dtype=float) + np.asarray(i_rf, dtype=float)) / i_star
    return 1.0 + s * s


def lk_of_current(spec: FilmSpec, bias: BiasState, lk0_at_T_nH: float) -> float:
    """Kinetic inductance (nH) at finite bias, given the zero-bias value at T."""
    if not lk0_at_T_nH > 0.0:
        raise ValueError("lk0_at_T_nH must be > 0")
    return float(lk0_at_T_nH * current_bracket(bias.I_dc_uA, bias.I_rf_uA,
                                               spec.I_star_uA))


def switching_current(spec: FilmSpec) -> float:
    """Switching current I_sw = J_c * W * t, in uA."""
    # A/mm^2 * um * nm = 1e-9 A = 1e-3 uA
    return spec.J_c_A_per_mm2 * spec.W_um * spec.t_nm * 1e-3


def switching_current_at_temperature(spec: FilmSpec, T_K: float) -> float:
    """Ginzburg-Landau depairing scaling I_sw(T) = I_sw(0)*(1-(T/T_C)^2)^(3/2)."""
    if T_K >= spec.T_C_K:
        return 0.0
    return switching_current(spec) * (1.0 - (T_K / spec.T_C_K) ** 2) ** 1.5


def iv_curve(spec: FilmSpec, currents_uA, i_sw_uA: float | None = None) -> np.ndarray:
    """Two-state I-V model: V = 0 for |I| <= I_sw, V = R_normal*I above.

    Returns voltages in mV (kOhm * uA). Abrupt switch, no hysteresis.
    ``i_sw_uA`` overrides the zero-temperature switching current, e.g. for
    temperature-scaled sweeps.
    """
    currents = np.asarray(currents_uA, dtype=float)
    if not np.all(np.isfinite(currents)):
        raise ValueError("currents must be finite")
    i_sw = switching_current(spec) if i_sw_uA is None else i_sw_uA
    return np.where(np.abs(currents) > i_sw, spec.R_normal_kohm * currents, 0.0)


def resistance_of_temperature(spec: FilmSpec, T_K: float,
                              smoothing_K: float = 0.0) -> float:
    """Strip resistance (kOhm) vs temperature.

    Hard step at T_C by default (T = T_C belongs to the normal branch); a
    positive ``smoothing_K`` replaces the step with a logistic transition of
    that width.
    """
    if smoothing_K < 0.0:
        raise ValueError("smoothing_K must be >= 0")
    if smoothing_K == 0.0:
        return spec.R_normal_kohm if T_K >= spec.T_C_K else 0.0
    return spec.R_normal_kohm / (1.0 + math.exp(-(T_K - spec.T_C_K) / smoothing_K))


def cooper_pair_density(spec: FilmSpec) -> float:
    """Pair density n_s (m^-3) backed out of the sheet inductance.

    Documentation helper from the microscopic form L_K = m/(2 n_s e^2) * L/(W t);
    sheet_Lk0 is the primary parameter everywhere else, so this value is
    derived, not authoritative.
    """
    sheet_H = spec.sheet_Lk0_nH * 1e-9
    t_m = spec.t_nm * 1e-9
    return ELECTRON_MASS_KG / (2.0 * ELEMENTARY_CHARGE_C**2 * t_m * sheet_H)


def type_a_film(W_um: float = 0.36, L_um: float = 50.0) -> FilmSpec:
    """Type A film defaults.

    I_star is calibrated so the analytic self-Kerr coefficient at the 884 MHz /
    149 nH operating point reproduces the measured 12.0 Hz/photon.
    """
    return FilmSpec(W_um=W_um, L_um=L_um, t_nm=6.0, T_C_K=0.75,
                    sheet_Lk0_nH=1.07, J_c_A_per_mm2=94.0, I_star_uA=17.0,
                    R_normal_kohm=4.0, film_type=FilmType.TYPE_A)


def type_b_film(W_um: float = 0.36, L_um: float = 50.0) -> FilmSpec:
    """Type B film defaults (I_star calibrated to 5.29 Hz/photon at 823 MHz / 131 nH)."""
    return FilmSpec(W_um=W_um, L_um=L_um, t_nm=6.0, T_C_K=1.1,
                    sheet_Lk0_nH=0.94, J_c_A_per_mm2=260.0, I_star_uA=25.4,
                    R_normal_kohm=4.0, film_type=FilmType.TYPE_B)
