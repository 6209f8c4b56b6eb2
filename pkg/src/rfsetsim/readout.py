"""Measurement-chain model: demodulated IQ traces with amplifier noise.

The cryogenic chain is collapsed to a single voltage gain and one
amplifier-referred noise temperature. A demodulated sample is

    I + jQ = g * sqrt(P) * S11 + n,

with g the linear gain, P the drive power in watts, and n complex white
Gaussian noise with per-quadrature standard deviation
sigma = g * sqrt(k_B * T_N * ENBW). With no analog low-pass filter the
equivalent noise bandwidth is the Nyquist band, ENBW = sample_rate / 2, and
the per-sample integration time is t_int = 1/(2*ENBW).

Seeding: traces are bit-reproducible from ChainSpec.rng_seed. Independent
traces (e.g. parallel sweep points) should use derive_seed(base, *tags) to
mix task labels into per-task seeds.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .constants import BOLTZMANN_J_PER_K, dbm_to_watts


class WindowTooLarge(ValueError):
    """Boxcar window exceeds the trace length."""


@dataclass(frozen=True)
class ChainSpec:
    system_gain_dB: float
    noise_temperature_K: float
    sample_rate_Hz: float = 250e6
    rng_seed: int = 0

    def __post_init__(self):
        if not self.sample_rate_Hz > 0.0:
            raise ValueError("sample_rate_Hz must be > 0")
        if not self.noise_temperature_K >= 0.0:
            raise ValueError("noise_temperature_K must be >= 0")

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.system_gain_dB / 20.0)

    @property
    def enbw_Hz(self) -> float:
        """No analog LPF: the noise bandwidth is the Nyquist band."""
        return self.sample_rate_Hz / 2.0

    @property
    def noise_sigma_V(self) -> float:
        """Per-quadrature noise standard deviation."""
        return self.gain_linear * math.sqrt(
            BOLTZMANN_J_PER_K * self.noise_temperature_K * self.enbw_Hz)


@dataclass(frozen=True)
class IQTrace:
    """Demodulated samples, shape (n, 2) = [I, Q] in volts."""

    samples: np.ndarray
    sample_rate_Hz: float
    t_int_per_sample_s: float

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != 2 \
                or len(self.samples) == 0:
            raise ValueError("samples must be a nonempty (n, 2) array")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def i(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def q(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def enbw_effective_Hz(self) -> float:
        """Bandwidth bookkeeping: t_int * ENBW_effective = 1/2 exactly."""
        return 0.5 / self.t_int_per_sample_s


def derive_seed(base_seed: int, *tags) -> int:
    """Stable per-task seed from a base seed and hashable task labels."""
    payload = "::".join([str(base_seed), *[str(t) for t in tags]]).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def synthesize_trace(chain: ChainSpec, s11: complex, drive_power_dBm: float,
                     n_samples: int, rng_seed: int | None = None) -> IQTrace:
    """Noisy demodulated trace at a fixed reflection coefficient.

    Deterministic for a given seed (chain.rng_seed unless overridden).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    amplitude = chain.gain_linear * math.sqrt(dbm_to_watts(drive_power_dBm))
    center = amplitude * complex(s11)
    rng = np.random.default_rng(
        chain.rng_seed if rng_seed is None else rng_seed)
    samples = np.empty((n_samples, 2))
    samples[:, 0] = center.real
    samples[:, 1] = center.imag
    sigma = chain.noise_sigma_V
    if sigma > 0.0:
        samples += rng.normal(0.0, sigma, size=(n_samples, 2))
    return IQTrace(samples=samples, sample_rate_Hz=chain.sample_rate_Hz,
                   t_int_per_sample_s=1.0 / chain.sample_rate_Hz)


def boxcar_downsample(trace: IQTrace, w_bc: int) -> IQTrace:
    """Average non-overlapping windows of w_bc samples.

    Output length floor(n/w_bc) (trailing partial window discarded);
    t_int_per_sample multiplies by w_bc.
    """
    if w_bc < 1:
        raise ValueError("w_bc must be >= 1")
    n = len(trace)
    if w_bc > n:
        raise WindowTooLarge(f"boxcar window {w_bc} > trace length {n}")
    if w_bc == 1:
        return trace
    n_out = n // w_bc
    block = trace.samples[:n_out * w_bc].reshape(n_out, w_bc, 2)
    return IQTrace(samples=block.mean(axis=1),
                   sample_rate_Hz=trace.sample_rate_Hz / w_bc,
                   t_int_per_sample_s=trace.t_int_per_sample_s * w_bc)


def shuffle_trace(trace: IQTrace, seed: int) -> IQTrace:
    """Random sample permutation (destroys drift correlations before boxcar)."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(trace))
    return replace(trace, samples=trace.samples[perm])


def enbw(f_LP_Hz: float, eta: float, n_avg: int) -> float:
    """Equivalent noise bandwidth eta * f_LP / N_avg."""
    if not (f_LP_Hz > 0.0 and eta > 0.0 and n_avg >= 1):
        raise ValueError("need f_LP_Hz > 0, eta > 0, n_avg >= 1")
    return eta * f_LP_Hz / n_avg


def t_int_from_enbw(enbw_Hz: float) -> float:
    """Integration time 1/(2*ENBW)."""
    if not enbw_Hz > 0.0:
        raise ValueError("enbw_Hz must be > 0")
    return 1.0 / (2.0 * enbw_Hz)


def save_trace(trace: IQTrace, path: str | Path, metadata: dict | None = None):
    """Persist as a (sample_index, I_V, Q_V) table plus a sidecar .meta file."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("sample_index\tI_V\tQ_V\n")
        for k, (i, q) in enumerate(trace.samples):
            fh.write(f"{k}\t{i!r}\t{q!r}\n")
    meta = {"sample_rate_Hz": trace.sample_rate_Hz,
            "t_int_per_sample_s": trace.t_int_per_sample_s}
    meta.update(metadata or {})
    with open(path.with_suffix(path.suffix + ".meta"), "w") as fh:
        for key in sorted(meta):
            fh.write(f"{key}: {meta[key]!r}\n")


def load_trace(path: str | Path) -> IQTrace:
    path = Path(path)
    data = np.loadtxt(path, skiprows=1)
    data = np.atleast_2d(data)
    meta: dict = {}
    with open(path.with_suffix(path.suffix + ".meta")) as fh:
        for line in fh:
            key, _, value = line.partition(":")
            meta[key.strip()] = value.strip()
    return IQTrace(samples=np.ascontiguousarray(data[:, 1:3]),
                   sample_rate_Hz=float(meta["sample_rate_Hz"]),
                   t_int_per_sample_s=float(meta["t_int_per_sample_s"]))
