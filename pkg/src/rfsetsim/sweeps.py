"""Experiment recipes: deterministic sweeps behind the CLI subcommands.

Every run produces a SweepResult: a provenance block (config hash, seed,
artifact version) plus tabular rows. Rows that fail numerically are kept and
marked in the status column rather than dropped. All floating-point output
is formatted at 9 significant digits, so repeated runs of the same config
are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import films, fitting, readout, resonator, set_device
from .config import ConfigError, ExperimentConfig
from .constants import dbm_to_watts
from .resonator import ResonatorState

ARTIFACT_VERSION = "0.1.0"


class NumericalFailure(RuntimeError):
    """A sweep could not produce a usable result (maps to exit code 3)."""


@dataclass
class SweepResult:
    subcommand: str
    columns: list
    rows: list
    provenance: dict
    extra_tables: dict = field(default_factory=dict)

    def format_value(self, value) -> str:
        if isinstance(value, float):
            if math.isnan(value):
                return "nan"
            return "%.9g" % value
        return str(value)

    def _write_table(self, fh, columns, rows):
        for key, value in self.provenance.items():
            fh.write(f"# {key}: {value}\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(self.format_value(v) for v in row) + "\n")

    def write(self, path: str | Path) -> list[Path]:
        """Write the main table; extra tables go to '<stem>_<name><suffix>'."""
        path = Path(path)
        written = [path]
        with open(path, "w") as fh:
            self._write_table(fh, self.columns, self.rows)
        for name, (columns, rows) in self.extra_tables.items():
            side = path.with_name(path.stem + f"_{name}" + path.suffix)
            with open(side, "w") as fh:
                self._write_table(fh, columns, rows)
            written.append(side)
        return written


def _provenance(config: ExperimentConfig, subcommand: str) -> dict:
    return {
        "artifact_version": ARTIFACT_VERSION,
        "subcommand": subcommand,
        "config_sha256": config.config_hash(),
        "seed": config.seed,
    }


def _map_maybe_parallel(fn: Callable, items, parallel: bool):
    """Order-preserving map; a worker pool is used only when requested."""
    if parallel and len(items) > 1:
        import multiprocessing

        with multiprocessing.Pool() as pool:
            return pool.map(fn, items)
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# iv

def _iv_row_task(args):
    film_spec, temperature, currents = args
    i_sw = films.switching_current_at_temperature(film_spec, temperature)
    volts = films.iv_curve(film_spec, currents, i_sw_uA=i_sw)
    return [(temperature, float(i), float(v), i_sw, "ok")
            for i, v in zip(currents, volts)]


def run_iv(config: ExperimentConfig, parallel: bool = False) -> SweepResult:
    """I-V table per temperature; switching threshold scales as
    (1-(T/T_C)^2)^(3/2) and vanishes above T_C (pure Ohmic line)."""
    config.require("film", "sweep")
    if config.sweep.axis != "dc_current":
        raise ConfigError("run_iv expects sweep axis 'dc_current'")
    temperatures = config.extras["iv"].get("temperatures_K")
    if not temperatures:
        thermal = config.thermal or films.ThermalState(0.02)
        temperatures = [films.effective_temperature(thermal)]
    currents = config.sweep.values()
    chunks = _map_maybe_parallel(
        _iv_row_task,
        [(config.film, float(t), currents) for t in temperatures], parallel)
    rows = [row for chunk in chunks for row in chunk]
    return SweepResult(subcommand="iv",
                       columns=["T_K", "I_uA", "V_mV", "I_sw_uA", "status"],
                       rows=rows, provenance=_provenance(config, "iv"))


# ---------------------------------------------------------------------------
# s11

def run_s11(config: ExperimentConfig) -> SweepResult:
    """Reflection spectra in the superconducting and normal states.

    The superconducting trace uses the thermal-equilibrium kinetic
    inductance; the normal trace replaces the film with its normal-state
    resistance. The SET shunt resistance is evaluated at the configured bias
    point.
    """
    config.require("film", "resonator", "set", "sweep")
    if config.sweep.axis != "frequency":
        raise ConfigError("run_s11 expects sweep axis 'frequency'")
    thermal = config.thermal or films.ThermalState(0.02)
    opts = config.extras["s11"]
    bias = set_device.BiasPoint(
        V_GS_mV=float(opts.get("V_GS_mV", 0.0)),
        V_DS_mV=float(opts.get("V_DS_mV", 0.0)))
    r_shunt_ohm = set_device.resistance(config.set_spec, bias) * 1e3

    f_grid = config.sweep.values()
    lk_nH = films.lk_of_temperature(config.film, thermal)
    rows = []
    for state, gamma in (
            ("superconducting", resonator.s11(config.resonator, lk_nH,
                                              r_shunt_ohm, f_grid)),
            ("normal", resonator.s11_normal(config.resonator,
                                            config.film.R_normal_kohm,
                                            r_shunt_ohm, f_grid))):
        mag_db = 20.0 * np.log10(np.abs(gamma))
        phase = np.angle(gamma)
        for k, f in enumerate(f_grid):
            rows.append((state, float(f), float(gamma[k].real),
                         float(gamma[k].imag), float(mag_db[k]),
                         float(phase[k]), "ok"))
    return SweepResult(subcommand="s11",
                       columns=["state", "f_Hz", "re_S11", "im_S11",
                                "mag_dB", "phase_rad", "status"],
                       rows=rows, provenance=_provenance(config, "s11"))


# ---------------------------------------------------------------------------
# stability map

def _stability_probe_frequency(config: ExperimentConfig,
                               lk_nH: float) -> float:
    opts = config.extras["stability"]
    probe = opts.get("probe_frequency_Hz", "auto")
    if probe != "auto":
        return float(probe)
    r_blockade_ohm = config.set_spec.R_off_Gohm * 1e9
    f_guess = 1.0 / (2.0 * math.pi * math.sqrt(
        lk_nH * 1e-9 * config.resonator.C_tot_fF * 1e-15))
    summary = resonator.find_resonance(config.resonator, lk_nH,
                                       r_blockade_ohm,
                                       0.5 * f_guess, 1.5 * f_guess)
    return summary.f_r_Hz


def run_stability_map(config: ExperimentConfig,
                      parallel: bool = False) -> SweepResult:
    """Charge-stability maps: conductance, drain current and |S11|.

    2D grid over (V_GS from the sweep section, V_DS from the stability
    section); |S11| is evaluated at a fixed probe frequency with the SET
    resistance shunting the resonator.
    """
    config.require("film", "resonator", "set", "sweep")
    if config.sweep.axis != "V_GS":
        raise ConfigError("run_stability_map expects sweep axis 'V_GS'")
    opts = config.extras["stability"]
    try:
        vds = np.linspace(float(opts["vds_start_mV"]),
                          float(opts["vds_stop_mV"]),
                          int(opts["vds_points"]))
    except KeyError as err:
        raise ConfigError(f"stability section missing {err}") from err
    vgs = config.sweep.values()
    thermal = config.thermal or films.ThermalState(0.02)
    lk_nH = films.lk_of_temperature(config.film, thermal)
    f_probe = _stability_probe_frequency(config, lk_nH)

    g_map = set_device.conductance_map(config.set_spec, vgs, vds)
    i_map = set_device.current_map(config.set_spec, vgs, vds)
    r_shunt_ohm = 1e9 / g_map  # uS -> Ohm
    mag = np.abs(resonator.s11(config.resonator, lk_nH, r_shunt_ohm,
                               f_probe))
    rows = []
    for j, vd in enumerate(vds):
        for k, vg in enumerate(vgs):
            rows.append((float(vg), float(vd), float(g_map[j, k]),
                         float(i_map[j, k]), float(mag[j, k]), "ok"))
    prov = _provenance(config, "stability-map")
    prov["probe_frequency_Hz"] = "%.9g" % f_probe
    return SweepResult(subcommand="stability-map",
                       columns=["V_GS_mV", "V_DS_mV", "G_uS", "I_nA",
                                "mag_S11", "status"],
                       rows=rows, provenance=prov)


# ---------------------------------------------------------------------------
# snr benchmark

def _boxcar_ladder(opts: dict) -> list[int]:
    ladder = opts.get("boxcar_ladder")
    if ladder:
        return [int(w) for w in ladder]
    n_points = int(opts.get("n_tint_points", 12))
    return [2**k for k in range(n_points)]


def _optimize_probe(config: ExperimentConfig, power_dBm: float,
                    f_grid: np.ndarray, r_on: float, r_off: float,
                    i_dc_uA: float):
    """Probe frequency maximizing the on/off IQ separation at this power."""
    thermal = config.thermal or films.ThermalState(0.02)
    ops_on = resonator.sweep_operating_points(
        config.resonator, config.film, thermal, i_dc_uA, f_grid, power_dBm,
        r_on, warm_start=True)
    ops_off = resonator.sweep_operating_points(
        config.resonator, config.film, thermal, i_dc_uA, f_grid, power_dBm,
        r_off, warm_start=True)
    best = None
    for k, f in enumerate(f_grid):
        if not (ops_on[k].converged and ops_off[k].converged):
            continue
        g_on = resonator.operating_point_s11(config.resonator, config.film,
                                             ops_on[k], r_on)
        g_off = resonator.operating_point_s11(config.resonator, config.film,
                                              ops_off[k], r_off)
        sep = abs(g_on - g_off)
        if best is None or sep > best[1]:
            best = (float(f), sep, g_on, g_off, ops_on[k], ops_off[k])
    return best


def run_snr_benchmark(config: ExperimentConfig) -> SweepResult:
    """Full sensitivity pipeline: traces -> boxcar ladder -> blobs -> t_min.

    Per power: solve the nonlinear operating point at the top of the Coulomb
    peak (on) and in blockade (off) over a probe-frequency grid
    (warm-started), pick the frequency with maximal IQ separation,
    synthesize noisy traces, shuffle, boxcar-average over the W_BC ladder,
    fit blobs, compute SNR per t_int and extrapolate t_min.

    Main table: per-power summary. Extra table 'snr': per (power, t_int) SNR.
    """
    config.require("film", "resonator", "set", "chain", "sweep")
    if config.sweep.axis != "rf_power":
        raise ConfigError("run_snr_benchmark expects sweep axis 'rf_power'")
    opts = config.extras["benchmark"]
    set_spec = config.set_spec
    n_samples = int(opts.get("n_samples", 32768))
    i_dc_uA = float(opts.get("I_dc_uA", 0.0))
    shuffle = bool(opts.get("shuffle", True))
    ladder = _boxcar_ladder(opts)

    r_on = 1e6 / set_spec.G_max_uS  # peak of the Coulomb peak, Ohm
    r_off = set_spec.R_off_Gohm * 1e9

    thermal = config.thermal or films.ThermalState(0.02)
    lk_nH = films.lk_of_temperature(config.film, thermal)
    f_center = float(opts.get("probe_center_Hz") or 1.0 / (
        2.0 * math.pi * math.sqrt(lk_nH * 1e-9
                                  * config.resonator.C_tot_fF * 1e-15)))
    span = float(opts.get("probe_span_frac", 0.08))
    n_probe = int(opts.get("probe_points", 81))
    f_grid = np.linspace(f_center * (1.0 - span), f_center * (1.0 + span),
                         n_probe)

    powers = config.sweep.values()
    summary_rows = []
    snr_rows = []
    for p_idx, p_dbm in enumerate(powers):
        p_dbm = float(p_dbm)
        best = _optimize_probe(config, p_dbm, f_grid, r_on, r_off, i_dc_uA)
        if best is None:
            summary_rows.append((p_dbm, dbm_to_watts(p_dbm), math.nan,
                                 math.nan, math.nan, math.nan, 0,
                                 "no_converged_probe"))
            continue
        f_probe, _, g_on, g_off, op_on, op_off = best
        points = []
        for label, gamma in (("on", g_on), ("off", g_off)):
            seed = readout.derive_seed(config.seed, "snr", p_idx, label)
            trace = readout.synthesize_trace(config.chain, gamma, p_dbm,
                                             n_samples, rng_seed=seed)
            if shuffle:
                trace = readout.shuffle_trace(
                    trace, readout.derive_seed(config.seed, "shuffle",
                                               p_idx, label))
            points.append(trace)
        trace_on, trace_off = points

        snr_points = []
        status = "ok"
        for w in ladder:
            if w > len(trace_on):
                continue
            try:
                blob_on = fitting.fit_blob(readout.boxcar_downsample(
                    trace_on, w))
                blob_off = fitting.fit_blob(readout.boxcar_downsample(
                    trace_off, w))
            except (fitting.DegenerateCloud, ValueError):
                continue
            t_int = trace_on.t_int_per_sample_s * w
            value = fitting.snr(blob_on, blob_off)
            snr_points.append(fitting.SnrPoint(t_int_s=t_int, snr=value))
            snr_rows.append((p_dbm, w, t_int, value, "ok"))
        try:
            tmin = fitting.tmin_extrapolate(snr_points)
            summary_rows.append((p_dbm, dbm_to_watts(p_dbm), tmin.t_min_s,
                                 tmin.slope, tmin.stderr_s, f_probe,
                                 len(snr_points), status))
        except (ValueError, fitting.IllConditioned):
            summary_rows.append((p_dbm, dbm_to_watts(p_dbm), math.nan,
                                 math.nan, math.nan, f_probe,
                                 len(snr_points), "tmin_failed"))
    result = SweepResult(
        subcommand="snr-benchmark",
        columns=["P_dBm", "P_W", "t_min_s", "slope", "stderr_s",
                 "f_probe_Hz", "n_snr_points", "status"],
        rows=summary_rows, provenance=_provenance(config, "snr-benchmark"))
    result.extra_tables["snr"] = (
        ["P_dBm", "W_BC", "t_int_s", "snr", "status"], snr_rows)
    return result


# ---------------------------------------------------------------------------
# fit

def run_fit(config: ExperimentConfig) -> SweepResult:
    """Fit a named built-in model to a two-column (x, y) input table."""
    opts = config.extras["fit"]
    if not opts:
        raise ConfigError("fit subcommand needs a 'fit' config section")
    model = opts.get("model")
    if model not in fitting.MODELS:
        raise ConfigError(
            f"fit.model must be one of {sorted(fitting.MODELS)}")
    input_path = opts.get("input_path")
    if not input_path:
        raise ConfigError("fit.input_path is required")
    try:
        data = np.atleast_2d(np.loadtxt(input_path, comments="#"))
    except OSError as err:
        raise ConfigError(f"cannot read fit input: {err}") from err
    if data.shape[1] < 2:
        raise ConfigError("fit input table needs two columns (x, y)")

    guess = opts.get("initial_guess")
    bounds = opts.get("bounds")
    if bounds is not None:
        bounds = (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
    report = fitting.fit_model(model, data[:, 0], data[:, 1],
                               initial_guess=guess, bounds=bounds)
    if not report.converged:
        raise NumericalFailure(
            f"fit of model {model!r} did not converge in "
            f"{report.n_iterations} iterations")
    stderr = np.sqrt(np.abs(np.diag(report.covariance)))
    rows = [(name, float(value), float(stderr[k]), "ok")
            for k, (name, value) in enumerate(report.parameters.items())]
    prov = _provenance(config, "fit")
    prov["model"] = model
    prov["residual_norm"] = "%.9g" % report.residual_norm
    prov["n_iterations"] = report.n_iterations
    prov["converged"] = report.converged
    return SweepResult(subcommand="fit",
                       columns=["parameter", "value", "stderr", "status"],
                       rows=rows, provenance=prov)
