"""Statistical machinery: nonlinear least squares, IQ blob fits, SNR, t_min.

The curve fitter is a damped Gauss-Newton (Levenberg-Marquardt) loop with
forward-difference Jacobians (step 1e-7*(1+|p|)); convergence when the
relative parameter step drops below 1e-10 or the gradient norm below 1e-12.
Exceeding the iteration cap returns a report flagged converged=False rather
than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class DegenerateCloud(ValueError):
    """IQ sample cloud has (numerically) zero variance on an axis."""


class IllConditioned(ValueError):
    """Regression abscissae carry no information (e.g. all t_int equal)."""


class SingularNormalEquations(RuntimeError):
    """Normal equations are not solvable (non-finite Jacobian)."""


@dataclass
class FitReport:
    parameters: dict          # name -> fitted value
    values: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    gradient_norm: float
    converged: bool
    n_iterations: int


@dataclass
class BlobFit:
    """Separable 2D Gaussian A*exp(-(I-I0)^2/(2 sI^2) - (Q-Q0)^2/(2 sQ^2)).

    The exponent is negative; the printed form of the fit function carries a
    positive sign, which is unnormalizable and treated as a typo.
    """

    A: float
    I_0: float
    Q_0: float
    sigma_I: float
    sigma_Q: float
    residual_norm: float

    @property
    def sigma(self) -> float:
        """Blob width entering the SNR denominator: mean of sigma_I, sigma_Q."""
        return 0.5 * (self.sigma_I + self.sigma_Q)


@dataclass(frozen=True)
class SnrPoint:
    t_int_s: float
    snr: float


@dataclass
class TminResult:
    t_min_s: float
    slope: float
    stderr_s: float
    intercept: float
    extrapolation_ratio: float  # min(t_int)/t_min; > 1 means extrapolated below


def forward_jacobian(residual_fn: Callable, p: np.ndarray,
                     r0: Optional[np.ndarray] = None) -> np.ndarray:
    """Forward-difference Jacobian, step 1e-7*(1+|p_k|) per parameter."""
    p = np.asarray(p, dtype=float)
    if r0 is None:
        r0 = np.asarray(residual_fn(p), dtype=float)
    J = np.empty((len(r0), len(p)))
    for k in range(len(p)):
        h = 1e-7 * (1.0 + abs(p[k]))
        pk = p.copy()
        pk[k] += h
        J[:, k] = (np.asarray(residual_fn(pk), dtype=float) - r0) / h
    return J


def central_jacobian(residual_fn: Callable, p: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with the same step rule (validation path)."""
    p = np.asarray(p, dtype=float)
    r0 = np.asarray(residual_fn(p), dtype=float)
    J = np.empty((len(r0), len(p)))
    for k in range(len(p)):
        h = 1e-7 * (1.0 + abs(p[k]))
        pp, pm = p.copy(), p.copy()
        pp[k] += h
        pm[k] -= h
        J[:, k] = (np.asarray(residual_fn(pp), dtype=float)
                   - np.asarray(residual_fn(pm), dtype=float)) / (2.0 * h)
    return J


def fit_curve(residual_fn: Callable, initial_guess, bounds=None,
              param_names: Optional[Sequence[str]] = None,
              max_iter: int = 10_000, step_tol: float = 1e-10,
              grad_tol: float = 1e-12) -> FitReport:
    """Minimize ||residual_fn(p)||^2 by Levenberg-Marquardt.

    bounds: optional (lower, upper) arrays; steps are projected onto the box
    and the initial guess must lie inside. Raises SingularNormalEquations if
    the linearized system is unsolvable (non-finite Jacobian entries).
    """
    p = np.asarray(initial_guess, dtype=float).copy()
    if bounds is not None:
        lo = np.asarray(bounds[0], dtype=float)
        hi = np.asarray(bounds[1], dtype=float)
        if np.any(p < lo) or np.any(p > hi):
            raise ValueError("initial guess outside bounds")
    else:
        lo = hi = None

    r = np.asarray(residual_fn(p), dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("residual not finite at the initial guess")
    cost = float(r @ r)

    lam = 1e-3
    converged = False
    n_iter = 0
    grad_norm = math.inf
    J = None
    for it in range(1, max_iter + 1):
        n_iter = it
        J = forward_jacobian(residual_fn, p, r0=r)
        if not np.all(np.isfinite(J)):
            raise SingularNormalEquations("non-finite Jacobian")
        g = J.T @ r
        grad_norm = float(np.linalg.norm(g))
        if grad_norm < grad_tol:
            converged = True
            break
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag <= 0.0] = max(float(diag.max(initial=0.0)), 1.0)

        accepted = False
        while lam < 1e32:
            try:
                delta = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError as err:
                raise SingularNormalEquations(str(err)) from err
            p_new = p + delta
            if lo is not None:
                p_new = np.clip(p_new, lo, hi)
            r_new = np.asarray(residual_fn(p_new), dtype=float)
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) \
                else math.inf
            if cost_new <= cost:
                step_rel = float(np.linalg.norm(p_new - p)
                                 / max(np.linalg.norm(p), 1e-300))
                p, r, cost = p_new, r_new, cost_new
                lam = max(lam * 0.3, 1e-14)
                accepted = True
                if step_rel < step_tol:
                    converged = True
                break
            lam *= 10.0
        if converged or not accepted:
            break

    if param_names is None:
        param_names = [f"p{k}" for k in range(len(p))]
    m, n = len(r), len(p)
    cov = np.full((n, n), np.nan)
    if J is not None and m > n:
        try:
            cov = (cost / (m - n)) * np.linalg.pinv(J.T @ J)
        except np.linalg.LinAlgError:
            pass
    return FitReport(parameters=dict(zip(param_names, p.tolist())),
                     values=p, covariance=cov,
                     residual_norm=math.sqrt(cost), gradient_norm=grad_norm,
                     converged=converged, n_iterations=n_iter)


# ---------------------------------------------------------------------------
# built-in models (run_fit dispatch targets)

def _eq1_temperature(x, p):
    """L(T_MXC) = L0 / (1 - T_eff/T_C), T_eff = (T_MXC^4 + T_el^4)^(1/4)."""
    L0, T_C, T_el = p
    t_eff = (np.asarray(x, dtype=float) ** 4 + T_el**4) ** 0.25
    denom = 1.0 - t_eff / T_C
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0.0, L0 / np.where(denom > 0.0, denom, 1.0),
                       np.inf)
    return out


def _eq2_current(x, p):
    """L(I_dc) = L0 * (1 + (I_dc/I_star)^2) (zero rf amplitude)."""
    L0, I_star = p
    s = np.asarray(x, dtype=float) / I_star
    return L0 * (1.0 + s * s)


def _resonance_lorentzian(x, p):
    """|S11|(f) dip: baseline - depth / (1 + 4 (f-f0)^2 / fwhm^2)."""
    f0, fwhm, depth, baseline = p
    u = (np.asarray(x, dtype=float) - f0) / fwhm
    return baseline - depth / (1.0 + 4.0 * u * u)


def _powerlaw(x, p):
    c, a = p
    return c * np.asarray(x, dtype=float) ** a


@dataclass(frozen=True)
class ModelSpec:
    fn: Callable
    param_names: tuple
    guess: Callable  # (x, y) -> initial parameter vector


def _guess_eq1(x, y):
    t_c = 1.05 * float(np.max(x))
    t_el = max(0.5 * float(np.min(x[x > 0], initial=0.3)), 0.05)
    t_eff = (float(np.min(x)) ** 4 + t_el**4) ** 0.25
    return np.array([float(np.min(y)) * (1.0 - t_eff / t_c), t_c, t_el])


def _guess_eq2(x, y):
    return np.array([float(np.min(y)), max(float(np.max(np.abs(x))), 1.0)])


def _guess_lorentzian(x, y):
    k = int(np.argmin(y))
    return np.array([float(x[k]), (float(np.max(x)) - float(np.min(x))) / 10.0,
                     float(np.max(y) - np.min(y)), float(np.max(y))])


def _guess_powerlaw(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    a = float(np.polyfit(lx, ly, 1)[0])
    c = float(np.exp(np.mean(ly - a * lx)))
    return np.array([c, a])


MODELS = {
    "eq1_temperature": ModelSpec(_eq1_temperature,
                                 ("L0_nH", "T_C_K", "T_el_K"), _guess_eq1),
    "eq2_current": ModelSpec(_eq2_current, ("L0_nH", "I_star_uA"), _guess_eq2),
    "resonance_lorentzian": ModelSpec(
        _resonance_lorentzian, ("f0_Hz", "fwhm_Hz", "depth", "baseline"),
        _guess_lorentzian),
    "powerlaw": ModelSpec(_powerlaw, ("c", "a"), _guess_powerlaw),
    "constant": ModelSpec(lambda x, p: np.full_like(np.asarray(x, float),
                                                    p[0]),
                          ("c",), lambda x, y: np.array([float(np.mean(y))])),
}


def fit_model(name: str, x, y, initial_guess=None, bounds=None) -> FitReport:
    """Fit a registered model to (x, y) data."""
    if name not in MODELS:
        raise KeyError(f"unknown model {name!r}; have {sorted(MODELS)}")
    spec = MODELS[name]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p0 = spec.guess(x, y) if initial_guess is None else initial_guess

    def residuals(p):
        return spec.fn(x, p) - y

    return fit_curve(residuals, p0, bounds=bounds,
                     param_names=spec.param_names)


# ---------------------------------------------------------------------------
# IQ blob fitting and SNR

def _extract_samples(samples) -> np.ndarray:
    arr = samples.samples if hasattr(samples, "samples") else \
        np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected an (n, 2) IQ sample array")
    return arr


def fit_blob(samples, method: str = "histogram") -> BlobFit:
    """Fit a separable 2D Gaussian to an IQ sample cloud.

    method="histogram": 2D histogram with ceil(sqrt(n)) bins per axis, fitted
    by least squares (the reference path). method="moments": direct sample
    moments (fast path, cross-validated against the histogram fit in tests).
    """
    arr = _extract_samples(samples)
    n = len(arr)
    if n < 16:
        raise ValueError("need at least 16 samples")
    mu = arr.mean(axis=0)
    sd = arr.std(axis=0)
    scale = 1.0 + np.abs(mu)
    if np.any(sd < 1e-12 * scale):
        raise DegenerateCloud("sample cloud has ~zero variance on an axis")

    if method == "moments":
        # amplitude of the equivalent histogram peak for reporting purposes
        b = math.ceil(math.sqrt(n))
        bin_area = (np.ptp(arr[:, 0]) / b) * (np.ptp(arr[:, 1]) / b)
        amp = n * bin_area / (2.0 * math.pi * sd[0] * sd[1])
        return BlobFit(A=amp, I_0=mu[0], Q_0=mu[1], sigma_I=sd[0],
                       sigma_Q=sd[1], residual_norm=0.0)
    if method != "histogram":
        raise ValueError(f"unknown method {method!r}")

    b = math.ceil(math.sqrt(n))
    counts, i_edges, q_edges = np.histogram2d(arr[:, 0], arr[:, 1], bins=b)
    ic = 0.5 * (i_edges[:-1] + i_edges[1:])
    qc = 0.5 * (q_edges[:-1] + q_edges[1:])

    def residuals(p):
        amp, i0, q0, si, sq = p
        ei = np.exp(-0.5 * ((ic - i0) / si) ** 2)
        eq = np.exp(-0.5 * ((qc - q0) / sq) ** 2)
        return (amp * ei[:, None] * eq[None, :] - counts).ravel()

    span = arr.max(axis=0) - arr.min(axis=0)
    guess = np.array([counts.max(), mu[0], mu[1], sd[0], sd[1]])
    lo = np.array([1e-300, arr[:, 0].min(), arr[:, 1].min(),
                   1e-9 * span[0], 1e-9 * span[1]])
    hi = np.array([np.inf, arr[:, 0].max(), arr[:, 1].max(),
                   10.0 * span[0], 10.0 * span[1]])
    report = fit_curve(residuals, guess, bounds=(lo, hi),
                       param_names=("A", "I_0", "Q_0", "sigma_I", "sigma_Q"))
    amp, i0, q0, si, sq = report.values
    return BlobFit(A=amp, I_0=i0, Q_0=q0, sigma_I=abs(si), sigma_Q=abs(sq),
                   residual_norm=report.residual_norm)


def snr(on: BlobFit, off: BlobFit) -> float:
    """Signal-to-noise ratio of two IQ blobs.

    ((I_on-I_off)^2 + (Q_on-Q_off)^2) / (0.25 (sigma_on + sigma_off)^2),
    each blob sigma being the mean of its fitted sigma_I and sigma_Q.
    """
    num = (on.I_0 - off.I_0) ** 2 + (on.Q_0 - off.Q_0) ** 2
    return num / (0.25 * (on.sigma + off.sigma) ** 2)


# ---------------------------------------------------------------------------
# t_min extrapolation and power-law regimes

def _as_t_snr(points) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([p.t_int_s if isinstance(p, SnrPoint) else p[0]
                  for p in points], dtype=float)
    s = np.array([p.snr if isinstance(p, SnrPoint) else p[1]
                  for p in points], dtype=float)
    return t, s


def tmin_extrapolate(points) -> TminResult:
    """Log-log OLS of SNR vs t_int, extrapolated to SNR = 1.

    Needs >= 3 points with positive SNR (non-positive points carry no
    information on the log scale and are dropped). Extrapolation below the
    smallest measured t_int is allowed; the result records how far
    (extrapolation_ratio = min t_int / t_min).
    """
    t, s = _as_t_snr(points)
    keep = (s > 0.0) & np.isfinite(s) & np.isfinite(t) & (t > 0.0)
    t, s = t[keep], s[keep]
    if len(t) < 3:
        raise ValueError("need >= 3 points with snr > 0")
    if np.ptp(t) == 0.0:
        raise IllConditioned("all t_int values are equal")

    x = np.log10(t)
    y = np.log10(s)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    s2 = float(resid @ resid) / (n - 2) if n > 2 else 0.0
    var_slope = s2 / sxx
    var_intercept = s2 * (1.0 / n + xm**2 / sxx)
    cov_ab = -s2 * xm / sxx

    x_star = -intercept / slope
    t_min = 10.0 ** x_star
    # delta method through x* = -a/b
    da = -1.0 / slope
    db = intercept / slope**2
    var_x = (da * da * var_intercept + db * db * var_slope
             + 2.0 * da * db * cov_ab)
    stderr = math.log(10.0) * t_min * math.sqrt(max(var_x, 0.0))
    return TminResult(t_min_s=t_min, slope=slope, stderr_s=stderr,
                      intercept=intercept,
                      extrapolation_ratio=float(t.min()) / t_min)


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    lx, ly = np.log10(x), np.log10(y)
    xm = lx.mean()
    return float(((lx - xm) * (ly - ly.mean())).sum()
                 / ((lx - xm) ** 2).sum())


def fit_power_law(points, split_W: float) -> tuple[float, float]:
    """Exponents of t_min vs power below / above a split power (watts).

    points: iterable of (P_watts, t_min_s). Each side needs >= 2 points.
    """
    p = np.array([q[0] for q in points], dtype=float)
    t = np.array([q[1] for q in points], dtype=float)
    keep = (p > 0.0) & (t > 0.0) & np.isfinite(p) & np.isfinite(t)
    p, t = p[keep], t[keep]
    low = p < split_W
    high = ~low
    if low.sum() < 2 or high.sum() < 2:
        raise IllConditioned("need >= 2 points on each side of the split")
    if np.ptp(p[low]) == 0.0 or np.ptp(p[high]) == 0.0:
        raise IllConditioned("degenerate power values on one side")
    return _loglog_slope(p[low], t[low]), _loglog_slope(p[high], t[high])
