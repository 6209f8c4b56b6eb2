"""Lumped-element solver for the coupled LC matching network.

Topology (series coupling capacitor into a three-way parallel tank)::

    line Z_0 ---C_c---+---[node B]
                      |----- C ------------ gnd
                      |----- C_p --+
                      |            +------- gnd   (C_p shunts the film branch)
                      |-- R_contact + jwL_K +--^
                      |----- R_shunt ------- gnd  (SET channel)

The film branch is R_contact in series with the kinetic inductance; C_p sits
in parallel with that branch, and C and the SET channel resistance R_shunt
complete the tank. In the normal state the film is replaced by its
normal-state resistance (still in series with R_contact and shunted by C_p).

Drive convention: a power P (dBm) at the resonator input is an available
power from a Z_0 Thevenin source, so the source peak amplitude is
V_src = sqrt(8 Z_0 P). Currents reported by the nonlinear solver are peak
amplitudes, matching the film module's bias convention.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import films
from .constants import HBAR_J_S, dbm_to_watts
from .films import FilmSpec, ThermalState
from .kernels import solve_operating_point


class NoResonanceInRange(ValueError):
    """|S11| has no interior dip in the requested frequency interval."""


class ResonatorState(enum.Enum):
    SUPERCONDUCTING = "superconducting"
    NORMAL = "normal"


@dataclass(frozen=True)
class ResonatorSpec:
    """Lumped network values: capacitances in fF, resistances in Ohm."""

    C_c_fF: float
    C_fF: float
    C_p_fF: float
    R_contact_ohm: float = 0.0
    Z_0_ohm: float = 50.0

    def __post_init__(self):
        for name in ("C_c_fF", "C_fF", "C_p_fF", "Z_0_ohm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.R_contact_ohm) and self.R_contact_ohm >= 0.0):
            raise ValueError("R_contact_ohm must be >= 0")

    @property
    def C_tot_fF(self) -> float:
        return self.C_c_fF + self.C_fF + self.C_p_fF


@dataclass
class OperatingPoint:
    """Converged (or flagged) self-consistent drive state of the resonator."""

    frequency_Hz: float
    drive_power_dBm: float
    L_K_effective_nH: float
    I_rf_amplitude_uA: float
    state: ResonatorState
    converged: bool
    iterations: int


@dataclass
class ResonanceSummary:
    f_r_Hz: float
    dip_depth_dB: float
    linewidth_Hz: float
    loaded_Q: float


def _branch_impedance_ohm(spec: ResonatorSpec, omega, z_film_ohm):
    """Film branch (R_contact + film) shunted by the parasitic C_p."""
    z_branch = spec.R_contact_ohm + z_film_ohm
    y_cp = 1j * omega * (spec.C_p_fF * 1e-15)
    return z_branch / (1.0 + z_branch * y_cp)


def _input_impedance_ohm(spec: ResonatorSpec, f_Hz, z_film_ohm, R_shunt_ohm):
    omega = 2.0 * np.pi * np.asarray(f_Hz, dtype=float)
    y_tank = (1j * omega * (spec.C_fF * 1e-15)
              + 1.0 / _branch_impedance_ohm(spec, omega, z_film_ohm)
              + 1.0 / R_shunt_ohm)
    return 1.0 / (1j * omega * (spec.C_c_fF * 1e-15)) + 1.0 / y_tank


def input_impedance(spec: ResonatorSpec, L_K_nH: float, R_shunt_ohm,
                    f_Hz):
    """Complex input impedance (Ohm) of the network.

    Vectorized over f_Hz or R_shunt_ohm (broadcastable). Use a very large
    R_shunt_ohm to represent an open SET channel.
    """
    if not (np.all(np.asarray(f_Hz) > 0.0)):
        raise ValueError("f_Hz must be > 0")
    if not L_K_nH > 0.0:
        raise ValueError("L_K_nH must be > 0")
    if not np.all(np.asarray(R_shunt_ohm) > 0.0):
        raise ValueError("R_shunt_ohm must be > 0")
    omega = 2.0 * np.pi * np.asarray(f_Hz, dtype=float)
    z_film = 1j * omega * (L_K_nH * 1e-9)
    return _input_impedance_ohm(spec, f_Hz, z_film, R_shunt_ohm)


def input_impedance_normal(spec: ResonatorSpec, R_normal_kohm: float,
                           R_shunt_ohm: float, f_Hz):
    """Input impedance with the film in the normal state (resistive branch)."""
    return _input_impedance_ohm(spec, f_Hz, R_normal_kohm * 1e3, R_shunt_ohm)


def s11(spec: ResonatorSpec, L_K_nH: float, R_shunt_ohm, f_Hz):
    """Reflection coefficient (Z_in - Z_0)/(Z_in + Z_0); broadcasts like
    input_impedance."""
    z = input_impedance(spec, L_K_nH, R_shunt_ohm, f_Hz)
    return (z - spec.Z_0_ohm) / (z + spec.Z_0_ohm)


def s11_normal(spec: ResonatorSpec, R_normal_kohm: float, R_shunt_ohm: float,
               f_Hz):
    z = input_impedance_normal(spec, R_normal_kohm, R_shunt_ohm, f_Hz)
    return (z - spec.Z_0_ohm) / (z + spec.Z_0_ohm)


def lk_from_resonance(f_Hz: float, spec: ResonatorSpec) -> float:
    """Kinetic inductance (nH) implied by a resonance at f: 1/[(2 pi f)^2 C_tot]."""
    if not f_Hz > 0.0:
        raise ValueError("f_Hz must be > 0")
    c_tot = spec.C_tot_fF * 1e-15
    return 1.0 / ((2.0 * math.pi * f_Hz) ** 2 * c_tot) * 1e9


def characteristic_impedance(L_K_nH: float, C_p_fF: float) -> float:
    """Inductor characteristic impedance sqrt(L_K/C_p) in kOhm."""
    if not (L_K_nH > 0.0 and C_p_fF > 0.0):
        raise ValueError("L_K_nH and C_p_fF must be > 0")
    return math.sqrt(L_K_nH * 1e-9 / (C_p_fF * 1e-15)) / 1e3


def drive_amplitude_V(spec: ResonatorSpec, drive_power_dBm: float) -> float:
    """Thevenin source peak amplitude for an available power P at the input."""
    return math.sqrt(8.0 * spec.Z_0_ohm * dbm_to_watts(drive_power_dBm))


def _golden_minimize(fun, a: float, b: float, rel_tol: float) -> float:
    """Golden-section search for the minimum of a unimodal fun on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while (b - a) > rel_tol * max(abs(a), abs(b)):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fun(x2)
    return 0.5 * (a + b)


def _half_depth_crossing(fun, f_inside: float, f_outside: float,
                         level: float) -> float:
    """Bisect for |S11| crossing ``level`` between a point below and above it."""
    lo, hi = f_inside, f_outside
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fun(mid) < level:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) <= 1e-12 * max(abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def summarize_dip(f_grid: np.ndarray, mag: np.ndarray,
                  refine=None) -> ResonanceSummary:
    """Dip summary from a sampled |S11| spectrum.

    ``refine``: optional callable f -> |S11| used to polish the minimum and
    the half-depth crossings; without it the grid resolution limits accuracy.
    Raises NoResonanceInRange when there is no interior minimum below 1-1e-6.
    """
    k = int(np.argmin(mag))
    if mag[k] >= 1.0 - 1e-6 or k == 0 or k == len(mag) - 1:
        raise NoResonanceInRange("no interior |S11| dip found in range")
    if refine is not None:
        f_r = _golden_minimize(refine, f_grid[k - 1], f_grid[k + 1], 1e-9)
        min_mag = refine(f_r)
    else:
        f_r = float(f_grid[k])
        min_mag = float(mag[k])
    dip_depth_dB = -20.0 * math.log10(min_mag)

    level = 0.5 * (1.0 + min_mag)  # half depth in linear magnitude
    left = np.nonzero(mag[:k] > level)[0]
    right = np.nonzero(mag[k:] > level)[0]
    if len(left) == 0 or len(right) == 0:
        linewidth = math.nan
        loaded_q = math.nan
    else:
        f_lo_out, f_lo_in = f_grid[left[-1]], f_grid[left[-1] + 1]
        f_hi_in, f_hi_out = f_grid[k + right[0] - 1], f_grid[k + right[0]]
        if refine is not None:
            f_lo = _half_depth_crossing(refine, f_lo_in, f_lo_out, level)
            f_hi = _half_depth_crossing(refine, f_hi_in, f_hi_out, level)
        else:
            f_lo, f_hi = 0.5 * (f_lo_out + f_lo_in), 0.5 * (f_hi_in + f_hi_out)
        linewidth = f_hi - f_lo
        loaded_q = f_r / linewidth
    return ResonanceSummary(f_r_Hz=f_r, dip_depth_dB=dip_depth_dB,
                            linewidth_Hz=linewidth, loaded_Q=loaded_q)


def find_resonance(spec: ResonatorSpec, L_K_nH: float, R_shunt_ohm: float,
                   f_lo_Hz: float, f_hi_Hz: float,
                   n_grid: int = 4001) -> ResonanceSummary:
    """Locate the |S11| dip on [f_lo, f_hi]: grid scan + golden-section refine.

    The minimum is refined to a relative frequency tolerance of 1e-9;
    linewidth and loaded Q come from the half-depth crossings of the linear
    magnitude.
    """
    if not f_lo_Hz < f_hi_Hz:
        raise ValueError("need f_lo_Hz < f_hi_Hz")
    f_grid = np.linspace(f_lo_Hz, f_hi_Hz, n_grid)
    mag = np.abs(s11(spec, L_K_nH, R_shunt_ohm, f_grid))

    def refine(f):
        return abs(s11(spec, L_K_nH, R_shunt_ohm, f))

    return summarize_dip(f_grid, mag, refine=refine)


def nonlinear_operating_point(spec: ResonatorSpec, film: FilmSpec,
                              th: ThermalState, I_dc_uA: float, f_Hz: float,
                              drive_power_dBm: float,
                              R_shunt_ohm: float,
                              warm_start: Optional[OperatingPoint] = None,
                              damping: float = 0.5, rel_tol: float = 1e-10,
                              max_iter: int = 10_000) -> OperatingPoint:
    """Self-consistent operating point of the driven nonlinear resonator.

    Damped fixed point: guess the inductor-branch current amplitude, update
    the kinetic inductance through the bias nonlinearity, re-solve the linear
    network, repeat. If the peak current |I_dc| + I_rf crosses the switching
    current at any iterate the film goes normal and the point is returned
    with state NORMAL (L_K undefined). A non-converged point (bistable /
    runaway region) is returned with converged=False; frequency sweeps should
    warm-start from the previous point to trace a continuous branch.
    """
    if not math.isfinite(drive_power_dBm):
        raise ValueError("drive_power_dBm must be finite")
    lk_linear_nH = films.lk_of_temperature(film, th)  # raises above T_C
    i_sw_uA = films.switching_current(film)

    i_rf_init = warm_start.I_rf_amplitude_uA * 1e-6 if (
        warm_start is not None
        and warm_start.state is ResonatorState.SUPERCONDUCTING
        and math.isfinite(warm_start.I_rf_amplitude_uA)) else 0.0

    lk_H, i_rf_A, switched, converged, iterations = solve_operating_point(
        2.0 * math.pi * f_Hz,
        drive_amplitude_V(spec, drive_power_dBm),
        spec.Z_0_ohm,
        spec.C_c_fF * 1e-15, spec.C_fF * 1e-15, spec.C_p_fF * 1e-15,
        spec.R_contact_ohm, R_shunt_ohm,
        lk_linear_nH * 1e-9, I_dc_uA * 1e-6, film.I_star_uA * 1e-6,
        i_sw_uA * 1e-6, i_rf_init, damping, rel_tol, max_iter)

    if switched:
        return OperatingPoint(frequency_Hz=f_Hz,
                              drive_power_dBm=drive_power_dBm,
                              L_K_effective_nH=math.nan,
                              I_rf_amplitude_uA=i_rf_A * 1e6,
                              state=ResonatorState.NORMAL,
                              converged=True, iterations=iterations)
    return OperatingPoint(frequency_Hz=f_Hz, drive_power_dBm=drive_power_dBm,
                          L_K_effective_nH=lk_H * 1e9,
                          I_rf_amplitude_uA=i_rf_A * 1e6,
                          state=ResonatorState.SUPERCONDUCTING,
                          converged=converged, iterations=iterations)


def operating_point_s11(spec: ResonatorSpec, film: FilmSpec,
                        op: OperatingPoint, R_shunt_ohm: float) -> complex:
    """Reflection coefficient at an operating point (normal state included)."""
    if op.state is ResonatorState.NORMAL:
        return complex(s11_normal(spec, film.R_normal_kohm, R_shunt_ohm,
                                  op.frequency_Hz))
    return complex(s11(spec, op.L_K_effective_nH, R_shunt_ohm,
                       op.frequency_Hz))


def sweep_operating_points(spec: ResonatorSpec, film: FilmSpec,
                           th: ThermalState, I_dc_uA: float,
                           f_grid_Hz: Sequence[float],
                           drive_power_dBm: float, R_shunt_ohm: float,
                           warm_start: bool = True) -> list[OperatingPoint]:
    """Operating points along a frequency grid.

    With warm_start=True each point is seeded from the previous one
    (sequential, traces a continuous branch); with warm_start=False the
    points are independent and may be evaluated in any order or in parallel.
    """
    points: list[OperatingPoint] = []
    prev: Optional[OperatingPoint] = None
    for f in f_grid_Hz:
        op = nonlinear_operating_point(spec, film, th, I_dc_uA, float(f),
                                       drive_power_dBm, R_shunt_ohm,
                                       warm_start=prev if warm_start else None)
        points.append(op)
        if warm_start:
            prev = op
    return points


def self_kerr(spec: ResonatorSpec, film: FilmSpec, f_r_Hz: float,
              L_K_nH: float) -> float:
    """Resonance shift per stored photon (Hz/photon), negative (softening).

    One photon stores E = hbar*omega_r = L_K * I_peak^2 / 2, so the peak
    current squared per photon is 2*hbar*omega_r/L_K; with the amplitude
    convention of the bias nonlinearity, dL/L per photon is that over
    I_star^2, and K = -f_r/2 * dL/L = -2*pi*hbar*f_r^2/(L_K*I_star^2).
    """
    lk_H = L_K_nH * 1e-9
    i_star_A = film.I_star_uA * 1e-6
    return -2.0 * math.pi * HBAR_J_S * f_r_Hz**2 / (lk_H * i_star_A**2)


def photon_number(op: OperatingPoint) -> float:
    """Stored photons at an operating point: (L_K I_peak^2 / 2) / (hbar omega)."""
    if op.state is ResonatorState.NORMAL:
        return math.nan
    energy = 0.5 * (op.L_K_effective_nH * 1e-9) * (op.I_rf_amplitude_uA * 1e-6) ** 2
    return energy / (HBAR_J_S * 2.0 * math.pi * op.frequency_Hz)


def drive_power_budget(spec: ResonatorSpec, L_K_nH: float,
                       R_shunt_ohm: float, f_Hz: float,
                       drive_power_dBm: float) -> dict:
    """Power bookkeeping at a linear operating point (for sanity checks).

    Returns incident (available) power, the power dissipated in R_contact and
    R_shunt, and |S11|^2; for a passive network dissipated = (1-|S11|^2) *
    incident up to rounding.
    """
    omega = 2.0 * math.pi * f_Hz
    v_src = drive_amplitude_V(spec, drive_power_dBm)
    zin = complex(input_impedance(spec, L_K_nH, R_shunt_ohm, f_Hz))
    gamma = (zin - spec.Z_0_ohm) / (zin + spec.Z_0_ohm)
    i_line = v_src / (spec.Z_0_ohm + zin)
    z_branch_shunted = _branch_impedance_ohm(spec, omega,
                                             1j * omega * (L_K_nH * 1e-9))
    y_tank = (1j * omega * (spec.C_fF * 1e-15) + 1.0 / z_branch_shunted
              + 1.0 / R_shunt_ohm)
    v_b = i_line / y_tank
    i_branch = v_b / (spec.R_contact_ohm + 1j * omega * (L_K_nH * 1e-9))
    p_rc = 0.5 * abs(i_branch) ** 2 * spec.R_contact_ohm
    p_rs = 0.5 * abs(v_b) ** 2 / R_shunt_ohm
    return {
        "incident_W": dbm_to_watts(drive_power_dBm),
        "dissipated_Rc_W": p_rc,
        "dissipated_Rs_W": p_rs,
        "mag_s11_sq": abs(gamma) ** 2,
    }
