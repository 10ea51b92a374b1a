"""Desk-scale simulation of heating-rate thermometry.

Thermal occupation of the motional modes reduces and dephases the carrier
Rabi oscillation (Debye-Waller coupling); fitting the decaying oscillation
yields the weighted occupation beta = sum_i nbar_i eta_i^2, and a linear fit
of beta against wait time yields beta_dot. synth_experiment closes the loop:
given injected per-axis heating rates it produces shot-noise-limited
datasets from which the chain fit_beta -> fit_beta_dot -> project_axial must
recover the injected rate within its quoted uncertainty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .fits import FitError, weighted_line_fit
from .noise import ModeSet


class TruncationError(RuntimeError):
    """Thermal-state truncation could not reach the requested tail mass."""


@dataclass(frozen=True)
class RabiDataset:
    """Carrier Rabi scan after one wait time."""

    wait_time: float
    pulse_times: tuple
    excitation_probabilities: tuple
    shots_per_point: int
    modes: ModeSet

    def __post_init__(self):
        p = np.asarray(self.excitation_probabilities)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.shots_per_point < 1:
            raise ValueError("shots_per_point must be >= 1")


def thermal_cutoff(nbar: float, tail: float = 1e-7, n_hard_max: int = 200000) -> int:
    """Smallest N with residual thermal weight (nbar/(nbar+1))^(N+1) <= tail."""
    if nbar <= 0:
        return 0
    n = int(math.ceil(math.log(tail) / math.log(nbar / (nbar + 1.0)))) + 1
    if n > n_hard_max:
        raise TruncationError(f"nbar={nbar:g} needs {n} Fock states (> {n_hard_max})")
    return n


def _thermal_weights(nbar: float, n_max: int):
    n = np.arange(n_max + 1)
    if nbar == 0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    return np.exp(n * math.log(nbar / (nbar + 1.0)) - math.log(nbar + 1.0))


def _geometric_phase_sum(phi, nbar):
    """sum_n p_th(n; nbar) exp(-i phi n) = 1 / (nbar + 1 - nbar exp(-i phi)).

    Exact closed form of the thermal average over one mode.
    """
    return 1.0 / ((nbar + 1.0) - nbar * np.exp(-1j * np.asarray(phi)))


def rabi_signal(pulse_time, nbar: dict, modes: ModeSet, omega_rabi: float,
                tail: float = 1e-7) -> np.ndarray:
    """Thermal carrier excitation probability P(t).

    P(t) = sum_n [prod_i p_th(n_i)] sin^2(Omega_n t / 2) with the
    lowest-order Debye-Waller Rabi frequency Omega_n = Omega prod_i
    (1 - eta_i^2 n_i). The two smaller-occupation modes are summed over a
    truncated Fock lattice; the thermal average over the largest-occupation
    mode is taken in closed form (exact geometric sum), so the truncation
    budget only applies to the outer modes.
    """
    t = np.atleast_1d(np.asarray(pulse_time, dtype=float))
    axes = sorted(nbar, key=lambda a: nbar[a])
    if len(axes) != 3:
        raise ValueError("nbar must provide x, y and z")
    a, b, c = axes  # c has the largest nbar -> closed-form mode
    eta = modes.etas()
    na = thermal_cutoff(nbar[a], tail)
    nb = thermal_cutoff(nbar[b], tail)
    wa = _thermal_weights(nbar[a], na)
    wb = _thermal_weights(nbar[b], nb)
    fa = 1.0 - eta[a] ** 2 * np.arange(na + 1)
    fb = 1.0 - eta[b] ** 2 * np.arange(nb + 1)
    wab = (wa[:, None] * wb[None, :]).ravel()
    qab = (fa[:, None] * fb[None, :]).ravel()

    # P = 1/2 - 1/2 Re sum_ab w_ab e^{i W t q_ab} G(W t q_ab eta_c^2; nbar_c)
    phase = omega_rabi * t[:, None] * qab[None, :]
    core = np.exp(1j * phase) * _geometric_phase_sum(phase * eta[c] ** 2, nbar[c])
    p = 0.5 - 0.5 * np.real(core @ wab)
    p = np.clip(p, 0.0, 1.0)
    return p if np.ndim(pulse_time) else float(p[0])


# ---------------------------------------------------------------------------
# fitting

_WEIGHT_FLOOR_FACTOR = 0.1  # sigma floor = 0.1 * sqrt(0.25/N)


def _projection_sigma(p, shots):
    sigma = np.sqrt(p * (1.0 - p) / shots)
    floor = _WEIGHT_FLOOR_FACTOR * math.sqrt(0.25 / shots)
    return np.maximum(sigma, floor)


def _single_mode_signal(t, omega_rabi, beta, eta_eff):
    """Effective one-mode Rabi decay: the multi-mode signal depends on the
    occupations mainly through beta, so the fit model collapses them onto one
    mode with nbar_eff = beta / eta_eff^2 (documented approximation)."""
    nbar = beta / eta_eff**2
    phase = omega_rabi * np.asarray(t, dtype=float)
    core = np.exp(1j * phase) * _geometric_phase_sum(phase * eta_eff**2, nbar)
    return 0.5 - 0.5 * np.real(core)


def fit_beta(dataset: RabiDataset, omega_guess: float, beta_guess: float = 0.05):
    """Weighted fit of (Omega, beta) to one Rabi dataset.

    Weights follow quantum projection noise sigma^2 = p(1-p)/N with a floor
    at p in {0, 1}. Reported uncertainties are scaled by sqrt(chi^2_nu) when
    the fit scatter exceeds the nominal noise (standard WLS practice), which
    keeps the downstream coverage honest. Returns (beta, sigma_beta, omega,
    sigma_omega).
    """
    t = np.asarray(dataset.pulse_times, dtype=float)
    p = np.asarray(dataset.excitation_probabilities, dtype=float)
    if np.std(p) < 1e-12:
        raise FitError("degenerate Rabi data: constant signal")
    eta_eff = max(dataset.modes.etas().items(), key=lambda kv: abs(kv[1]))[1]
    sigma = _projection_sigma(p, dataset.shots_per_point)

    def model(tt, omega, beta):
        return _single_mode_signal(tt, omega, beta, eta_eff)

    try:
        popt, pcov = curve_fit(model, t, p, p0=[omega_guess, beta_guess],
                               sigma=sigma, absolute_sigma=False,
                               bounds=([0.0, 1e-8], [np.inf, 10.0]),
                               maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"Rabi fit did not converge: {exc}") from exc
    omega, beta = popt
    sigma_omega, sigma_beta = np.sqrt(np.diag(pcov))
    return float(beta), float(sigma_beta), float(omega), float(sigma_omega)


def fit_beta_dot(beta_vs_t):
    """Weighted linear fit of beta(t); returns (beta_dot, sigma).

    beta_vs_t: iterable of (wait_time, beta, sigma_beta), at least 3 entries.
    """
    pts = list(beta_vs_t)
    if len(pts) < 3:
        raise FitError("beta_dot fit needs at least 3 wait times")
    tt = [p[0] for p in pts]
    bb = [p[1] for p in pts]
    ss = [p[2] for p in pts]
    slope, slope_err, _b0, _b0e, chi2_nu = weighted_line_fit(tt, bb, ss)
    # same conservative scaling as fit_beta
    scale = math.sqrt(chi2_nu) if chi2_nu > 1.0 else 1.0
    return slope, slope_err * scale


# ---------------------------------------------------------------------------
# synthetic experiments

def synth_experiment(true_rates: dict, modes: ModeSet, wait_times, pulse_times,
                     shots: int, seed: int, nbar0: dict | None = None,
                     omega_rabi: float = 2 * math.pi * 50e3):
    """Generate shot-noise-limited Rabi datasets for a linear heating model.

    nbar_i(t) = nbar0_i + rate_i * t; excitation outcomes are binomial with
    the exact multi-mode signal as success probability. Deterministic for a
    given seed (per-wait RNG streams are derived from it).
    """
    nbar0 = dict(nbar0 or {"x": 3.0, "y": 3.0, "z": 10.0})
    waits = list(wait_times)
    streams = np.random.SeedSequence(seed).spawn(len(waits))
    out = []
    for wt, ss in zip(waits, streams):
        rng = np.random.default_rng(ss)
        nbar = {ax: nbar0[ax] + true_rates.get(ax, 0.0) * wt for ax in ("x", "y", "z")}
        p_model = rabi_signal(np.asarray(pulse_times), nbar, modes, omega_rabi)
        counts = rng.binomial(shots, p_model)
        out.append(RabiDataset(wait_time=float(wt),
                               pulse_times=tuple(float(v) for v in pulse_times),
                               excitation_probabilities=tuple(counts / shots),
                               shots_per_point=shots,
                               modes=modes))
    return out


def recover_rate(datasets, omega_guess: float):
    """fit_beta on every dataset, then fit_beta_dot; returns
    (beta_dot, sigma, per-dataset fits)."""
    pts = []
    fits = []
    for ds in datasets:
        beta, sb, om, so = fit_beta(ds, omega_guess=omega_guess)
        fits.append((ds.wait_time, beta, sb, om, so))
        pts.append((ds.wait_time, beta, sb))
    slope, err = fit_beta_dot(pts)
    return slope, err, fits
