"""Model fitting: power-law distance scaling, reduced chi-square comparison,
and the single-parameter loss-tangent extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    """Raised for degenerate or underdetermined fits."""


@dataclass(frozen=True)
class MeasurementRecord:
    """One measured point: separation, trap frequency, and a heating value
    (beta_dot in 1/s or ndot in phonons/s) with its standard deviation."""

    d: float
    d_err: float
    omega_z: float
    omega_z_err: float
    value: float
    sigma: float
    kind: str = "distance-scan"     # or "frequency-scan"

    def __post_init__(self):
        if self.sigma <= 0 or self.d_err < 0 or self.omega_z_err < 0:
            raise FitError("uncertainties must be positive")


@dataclass(frozen=True)
class PowerLawFit:
    """S = A * d^-alpha fitted in log-log space."""

    amplitude: float
    amplitude_err: float
    alpha: float
    alpha_err: float
    covariance: tuple        # 2x2 covariance of (ln A, alpha)
    residuals: tuple         # log-space residuals per point

    def __call__(self, d):
        return self.amplitude * np.asarray(d) ** (-self.alpha)


def fit_power_law(d, s, sigma=None) -> PowerLawFit:
    """Weighted least squares of log s against log d.

    sigma, when given, are absolute uncertainties on s (propagated to log
    space as sigma/s). Without sigma, ordinary least squares with the
    standard residual-variance error estimate.
    """
    d = np.asarray(d, dtype=float)
    s = np.asarray(s, dtype=float)
    if d.size < 3:
        raise FitError("power-law fit needs at least 3 points")
    if np.any(d <= 0) or np.any(s <= 0):
        raise FitError("power-law fit needs positive d and s")
    x = np.log(d)
    y = np.log(s)
    if sigma is not None:
        w = (s / np.asarray(sigma, dtype=float)) ** 2
    else:
        w = np.ones_like(y)

    # design: y = c0 - alpha x with parameters (c0, alpha)
    W = np.diag(w)
    X = np.column_stack([np.ones_like(x), -x])
    XtW = X.T @ W
    cov_unscaled = np.linalg.inv(XtW @ X)
    beta = cov_unscaled @ (XtW @ y)
    resid = y - X @ beta
    dof = d.size - 2
    if sigma is not None:
        cov = cov_unscaled
    else:
        chi2 = float(resid @ (W @ resid))
        cov = cov_unscaled * (chi2 / dof if dof > 0 else 0.0)
    c0, alpha = beta
    c0_err, alpha_err = np.sqrt(np.diag(cov))
    return PowerLawFit(amplitude=float(np.exp(c0)),
                       amplitude_err=float(np.exp(c0) * c0_err),
                       alpha=float(alpha), alpha_err=float(alpha_err),
                       covariance=tuple(map(tuple, cov)),
                       residuals=tuple(resid))


def reduced_chi_square(measured, predicted, n_params: int = 0) -> float:
    """chi^2_nu = (1/nu) sum ((meas - pred) / sigma)^2, nu = N - n_params.

    `measured` is a list of MeasurementRecord (or (value, sigma) pairs);
    n_params = 0 for a parameter-free prediction.
    """
    vals = []
    sigs = []
    for m in measured:
        if isinstance(m, MeasurementRecord):
            vals.append(m.value)
            sigs.append(m.sigma)
        else:
            v, sg = m
            vals.append(v)
            sigs.append(sg)
    predicted = np.asarray(predicted, dtype=float)
    if predicted.size != len(vals):
        raise FitError("measured and predicted lengths differ")
    nu = len(vals) - n_params
    if nu <= 0:
        raise FitError(f"no degrees of freedom: N={len(vals)}, n_params={n_params}")
    z = (np.asarray(vals) - predicted) / np.asarray(sigs)
    return float(np.sum(z**2) / nu)


@dataclass(frozen=True)
class LossTangentFit:
    tan_delta: float
    sigma: float
    chi2_nu: float


def fit_loss_tangent(values, sigmas, offset, slope) -> LossTangentFit:
    """Weighted linear least squares for a single scalar loss tangent.

    The model for each record is value_k = offset_k + slope_k * tan_delta,
    where offset carries the contribution of materials with fixed loss
    tangents and slope the geometry coefficient of the free material. Exact
    one-parameter WLS; no iteration.
    """
    y = np.asarray(values, dtype=float)
    sg = np.asarray(sigmas, dtype=float)
    p = np.asarray(offset, dtype=float)
    qc = np.asarray(slope, dtype=float)
    if not (y.size == sg.size == p.size == qc.size):
        raise FitError("values, sigmas, offset, slope must have equal lengths")
    w = 1.0 / sg**2
    denom = float(np.sum(w * qc**2))
    if denom <= 0 or float(np.max(np.abs(qc))) == 0.0:
        raise FitError("degenerate basis: the free material does not contribute")
    t = float(np.sum(w * (y - p) * qc) / denom)
    sigma_t = math.sqrt(1.0 / denom)
    resid = (y - p - t * qc) / sg
    nu = max(y.size - 1, 1)
    return LossTangentFit(tan_delta=t, sigma=sigma_t,
                          chi2_nu=float(np.sum(resid**2) / nu))


def weighted_line_fit(x, y, sigma):
    """WLS slope/intercept with standard errors: returns
    (slope, slope_err, intercept, intercept_err, chi2_nu)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sg = np.asarray(sigma, dtype=float)
    if x.size < 3:
        raise FitError("linear fit needs at least 3 points")
    w = 1.0 / sg**2
    S = w.sum()
    Sx = (w * x).sum()
    Sy = (w * y).sum()
    Sxx = (w * x * x).sum()
    Sxy = (w * x * y).sum()
    delta = S * Sxx - Sx**2
    if delta <= 0:
        raise FitError("degenerate abscissae in linear fit")
    slope = (S * Sxy - Sx * Sy) / delta
    intercept = (Sxx * Sy - Sx * Sxy) / delta
    slope_err = math.sqrt(S / delta)
    intercept_err = math.sqrt(Sxx / delta)
    resid = (y - slope * x - intercept) / sg
    nu = x.size - 2
    chi2_nu = float(np.sum(resid**2) / nu) if nu > 0 else 0.0
    return float(slope), float(slope_err), float(intercept), float(intercept_err), chi2_nu
