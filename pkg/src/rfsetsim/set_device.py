"""Constant-interaction Coulomb-blockade model of the SET channel.

The channel is described by a thermally broadened two-level conductance map:
G_max inside the conducting (bias-window-overlaps-a-transition) regions,
1/R_off deep in blockade, with cosh^-2 edges of gate-voltage width
2.5 k_B T_e / (e alpha_G). Charge-degeneracy transitions sit at gate voltages
n * e/C_G (n integer, peak at V_GS = 0), giving exactly periodic Coulomb
diamonds that close at V_DS = 0. Diamond edges have slopes +C_G/(C_G+C_D)
and -C_G/C_S; the edge pattern is mirrored for negative drain bias so that
the conductance is even and the current exactly odd in V_DS.

Units: capacitances in aF, voltages in mV, conductance in uS, resistance in
kOhm, current in nA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import (BOLTZMANN_J_PER_K, ELEMENTARY_CHARGE_C,
                        R_QUANTUM_OHM)

# Matching-condition reference: rf readout assumes R_SET >= 8 R_Q at the
# conductance peak.
R_Q_KOHM = R_QUANTUM_OHM / 1e3

# Thermal broadening denominator of the metallic-SET cosh^-2 lineshape.
_BROADENING_FACTOR = 2.5

# Integration step bound for the drain-current quadrature (mV).
_QUADRATURE_STEP_MV = 0.01


@dataclass(frozen=True)
class SetSpec:
    """Island capacitances (aF), peak conductance (uS), electron temperature (K)."""

    C_G_aF: float
    C_S_aF: float
    C_D_aF: float
    G_max_uS: float
    T_e_K: float
    R_off_Gohm: float = 10.0

    def __post_init__(self):
        for name in ("C_G_aF", "C_S_aF", "C_D_aF", "G_max_uS", "T_e_K",
                     "R_off_Gohm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.charging_energy_meV * 1e-3 * ELEMENTARY_CHARGE_C <= \
                BOLTZMANN_J_PER_K * self.T_e_K:
            raise ValueError(
                "not in the Coulomb blockade regime: need E_C > k_B T_e")

    @property
    def C_sigma_aF(self) -> float:
        return self.C_G_aF + self.C_S_aF + self.C_D_aF

    @property
    def lever_arm(self) -> float:
        return self.C_G_aF / self.C_sigma_aF

    @property
    def gate_period_mV(self) -> float:
        """Coulomb-peak spacing e/C_G in mV."""
        return ELEMENTARY_CHARGE_C / (self.C_G_aF * 1e-18) * 1e3

    @property
    def charging_energy_meV(self) -> float:
        """E_C = e^2/C_Sigma in meV (equals the diamond half-height in mV)."""
        return ELEMENTARY_CHARGE_C / (self.C_sigma_aF * 1e-18) * 1e3

    @property
    def edge_width_mV(self) -> float:
        """Gate-voltage scale of thermal edge broadening, k_B T_e/(e alpha_G)."""
        return (BOLTZMANN_J_PER_K * self.T_e_K / ELEMENTARY_CHARGE_C
                / self.lever_arm * 1e3)


@dataclass(frozen=True)
class BiasPoint:
    V_GS_mV: float
    V_DS_mV: float


def _gate_distance_to_conduction_mV(spec: SetSpec, v_gs_mV, v_ds_mV):
    """Gate distance from (V_GS, V_DS) to the nearest conducting region (mV).

    Zero inside a bias window. Numpy-transparent; even in V_DS by
    construction.
    """
    v_gs = np.asarray(v_gs_mV, dtype=float)
    v_abs = np.abs(np.asarray(v_ds_mV, dtype=float))
    period = spec.gate_period_mV
    slope_plus = spec.C_G_aF / (spec.C_G_aF + spec.C_D_aF)
    slope_minus = spec.C_G_aF / spec.C_S_aF

    u = v_gs - period * np.round(v_gs / period)  # offset from nearest peak
    reach_right = v_abs / slope_plus   # bias window half-extent, right of a peak
    reach_left = v_abs / slope_minus
    dist = None
    for shift in (0.0, -period, period):
        g = u + shift
        d = np.maximum(0.0, np.maximum(g - reach_right, -g - reach_left))
        dist = d if dist is None else np.minimum(dist, d)
    return dist


def _conductance_uS(spec: SetSpec, v_gs_mV, v_ds_mV):
    g_off = 1e-3 / spec.R_off_Gohm  # uS
    delta = _gate_distance_to_conduction_mV(spec, v_gs_mV, v_ds_mV)
    arg = delta / (_BROADENING_FACTOR * spec.edge_width_mV)
    return g_off + (spec.G_max_uS - g_off) / np.cosh(arg) ** 2


def conductance(spec: SetSpec, bias: BiasPoint) -> float:
    """Channel conductance (uS) at a bias point."""
    return float(_conductance_uS(spec, bias.V_GS_mV, bias.V_DS_mV))


def resistance(spec: SetSpec, bias: BiasPoint) -> float:
    """Channel resistance (kOhm), saturating at R_off deep in blockade."""
    return 1e3 / conductance(spec, bias)  # 1/uS = MOhm = 1e3 kOhm


def current(spec: SetSpec, bias: BiasPoint) -> float:
    """Drain current (nA): trapezoid quadrature of G along V_DS from 0.

    The conductance is even in V_DS, so the current is exactly odd.
    """
    v = bias.V_DS_mV
    if v == 0.0:
        return 0.0
    v_abs = abs(v)
    n = max(2, int(math.ceil(v_abs / _QUADRATURE_STEP_MV)) + 1)
    grid = np.linspace(0.0, v_abs, n)
    g = _conductance_uS(spec, bias.V_GS_mV, grid)
    return math.copysign(float(np.trapezoid(g, grid)), v)  # uS*mV = nA


def conductance_map(spec: SetSpec, v_gs_mV: np.ndarray,
                    v_ds_mV: np.ndarray) -> np.ndarray:
    """Conductance (uS) on the outer grid (len(v_ds), len(v_gs))."""
    vg = np.asarray(v_gs_mV, dtype=float)[None, :]
    vd = np.asarray(v_ds_mV, dtype=float)[:, None]
    return _conductance_uS(spec, vg, vd)


def current_map(spec: SetSpec, v_gs_mV: np.ndarray,
                v_ds_mV: np.ndarray) -> np.ndarray:
    """Drain current (nA) on the outer grid (len(v_ds), len(v_gs)).

    Shares the cumulative quadrature from V_DS = 0 across rows of equal sign.
    """
    vg = np.asarray(v_gs_mV, dtype=float)
    vd = np.asarray(v_ds_mV, dtype=float)
    out = np.zeros((len(vd), len(vg)))
    v_abs_max = float(np.max(np.abs(vd))) if len(vd) else 0.0
    if v_abs_max == 0.0:
        return out
    n = max(2, int(math.ceil(v_abs_max / _QUADRATURE_STEP_MV)) + 1)
    fine = np.union1d(np.linspace(0.0, v_abs_max, n), np.abs(vd))
    g = _conductance_uS(spec, vg[None, :], fine[:, None])
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(fine)[:, None]
    cum = np.vstack([np.zeros((1, len(vg))), np.cumsum(seg, axis=0)])
    idx = np.searchsorted(fine, np.abs(vd))
    for row, (k, v) in enumerate(zip(idx, vd)):
        out[row] = math.copysign(1.0, v) * cum[k] if v != 0.0 else 0.0
    return out
