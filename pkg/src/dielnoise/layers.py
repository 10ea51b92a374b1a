"""Analytic electric-field noise above planar layered dielectrics.

A fluctuating charge above a stratified medium sees field noise equal to the
free-space blackbody spectrum modified by a dimensionless surface response
(g_parallel, g_perp), built from s/p reflection coefficients of the stack
integrated over incidence parameter u (sine of the incidence angle; u > 1 is
the evanescent sector, which dominates in the near field z*omega/c << 1).

This module is the independent reference for the finite-geometry solver: a
wide thin cylinder computed with the FV solver must approach these values.

Conventions: blackbody_psd is the per-mode emission spectrum, proportional to
(nbar + 1). The dissipation pipeline in `noise` uses one-sided classical PSDs
(proportional to 2 nbar + 1 = coth(hbar omega / 2 kB T)). plane_noise_psd
bridges the two with the factor (1 + exp(-hbar omega / kB T)), which is 2 to
within 1e-7 at MHz frequencies and room temperature; without it the two
routes would disagree by that factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, EPS0, HBAR, K_B
from .materials import Material


class QuadratureError(RuntimeError):
    """Surface-response integral failed to converge."""


@dataclass(frozen=True)
class LayerStack:
    """Planar stratification: finite layers from the vacuum side inward, then
    an infinitely thick substrate. Entries are (Material | complex eps_rel,
    thickness m); the substrate has no thickness."""

    layers: tuple
    substrate: object

    def __post_init__(self):
        for _, t in self.layers:
            if t <= 0:
                raise ValueError("layer thicknesses must be > 0")

    @staticmethod
    def _eps(m) -> complex:
        if isinstance(m, Material):
            return m.eps_complex
        return complex(m)

    def eps_layers(self):
        return [self._eps(m) for m, _ in self.layers]

    def thicknesses(self):
        return [t for _, t in self.layers]

    def eps_substrate(self) -> complex:
        return self._eps(self.substrate)

    @classmethod
    def half_space(cls, material) -> "LayerStack":
        return cls(layers=(), substrate=material)

    @classmethod
    def slab(cls, material, thickness) -> "LayerStack":
        """Single finite layer with vacuum behind it."""
        return cls(layers=((material, thickness),), substrate=1.0 + 0j)


@dataclass(frozen=True)
class GreenFunctionValue:
    g_parallel: float
    g_perp: float
    z: float
    omega: float


def blackbody_psd(omega: float, T: float) -> float:
    """Free-space blackbody field PSD per axis [V^2 m^-2 Hz^-1].

    Emission convention (proportional to nbar + 1); see module docstring.
    The c^3 power in the denominator is fixed by dimensional analysis.
    """
    if omega <= 0 or T <= 0:
        raise ValueError("omega and T must be > 0")
    x = HBAR * omega / (K_B * T)
    return HBAR * omega**3 / (3 * np.pi * EPS0 * C_LIGHT**3 * (1 - np.exp(-x)))


def _sqrt_upper(w):
    """Complex sqrt with Im >= 0 (evanescent decay branch)."""
    r = np.sqrt(np.asarray(w, dtype=complex))
    return np.where(r.imag < 0, -r, r)


def fresnel(u, eps_i, eps_j):
    """s/p reflection amplitudes of the i|j interface at incidence parameter u.

    r_s = (w_i - w_j)/(w_i + w_j), r_p = (eps_j w_i - eps_i w_j)/(eps_j w_i +
    eps_i w_j) with w = sqrt(eps - u^2), Im w >= 0.
    """
    u = np.asarray(u, dtype=float)
    wi = _sqrt_upper(eps_i - u**2)
    wj = _sqrt_upper(eps_j - u**2)
    rs = (wi - wj) / (wi + wj)
    rp = (eps_j * wi - eps_i * wj) / (eps_j * wi + eps_i * wj)
    return rs, rp


def stack_reflection(u, omega: float, stack: LayerStack, phase: str = "quasistatic"):
    """Total (R_s, R_p) of the stack seen from vacuum, by recursive pairwise
    composition from the substrate outward.

    phase='quasistatic' uses the evanescent round-trip factor exp(-2 t u w/c)
    appropriate for the near field; phase='full' uses exp(2 i t (omega/c)
    sqrt(eps - u^2)), indistinguishable at MHz/micron scales but exposed for
    completeness.
    """
    u = np.asarray(u, dtype=float)
    eps_seq = [1.0 + 0j] + stack.eps_layers() + [stack.eps_substrate()]
    ts = stack.thicknesses()
    Rs, Rp = fresnel(u, eps_seq[-2], eps_seq[-1])
    for j in range(len(ts) - 1, -1, -1):
        if phase == "quasistatic":
            x = np.exp(-2 * ts[j] * u * omega / C_LIGHT)
        elif phase == "full":
            w = _sqrt_upper(eps_seq[j + 1] - u**2)
            x = np.exp(2j * ts[j] * (omega / C_LIGHT) * w)
        else:
            raise ValueError(f"unknown phase model {phase!r}")
        rs, rp = fresnel(u, eps_seq[j], eps_seq[j + 1])
        Rs = (rs + Rs * x) / (1 + rs * Rs * x)
        Rp = (rp + Rp * x) / (1 + rp * Rp * x)
    return Rs, Rp


# ---------------------------------------------------------------------------
# quadrature

def _gauss_nodes(n):
    return np.polynomial.legendre.leggauss(n)


def _panel(f, a, b, n):
    x, w = _gauss_nodes(n)
    xm = 0.5 * (a + b) + 0.5 * (b - a) * x
    fp, ft = f(xm)
    return 0.5 * (b - a) * (w @ fp), 0.5 * (b - a) * (w @ ft)


def _integrate_g(omega, z, stack, n, phase):
    """Raw integrals at fixed Gauss order n per panel."""
    k = omega / C_LIGHT

    def f_prop(theta):
        # u = sin(theta) removes the 1/v branch-point singularity at u = 1
        u = np.sin(theta)
        v = np.cos(theta)
        Rs, Rp = stack_reflection(u, omega, stack, phase=phase)
        ph = np.exp(2j * z * k * v)
        return np.sin(theta) * ph * (Rs + (u**2 - 1) * Rp), \
            u**2 * np.sin(theta) * ph * Rp

    def f_evan(t):
        # u = cosh(t): u du / v = -i cosh(t) dt, regular and real-decaying
        u = np.cosh(t)
        Rs, Rp = stack_reflection(u, omega, stack, phase=phase)
        ph = np.exp(-2 * z * k * np.sinh(t))
        return -1j * np.cosh(t) * ph * (Rs + (u**2 - 1) * Rp), \
            -1j * np.cosh(t) ** 3 * ph * Rp

    gp, gt = _panel(f_prop, 0.0, np.pi / 2, n)

    t0, dt = 0.0, 0.4
    quiet = 0
    for _ in range(200):
        p, q = _panel(f_evan, t0, t0 + dt, n)
        gp += p
        gt += q
        t0 += dt
        dt *= 1.5
        scale = max(abs(gp), abs(gt), 1e-300)
        if max(abs(p), abs(q)) < 1e-13 * scale:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        raise QuadratureError("evanescent tail did not decay within panel budget")
    return 0.75 * gp.real, 1.5 * gt.real


def green_functions(omega: float, z: float, stack: LayerStack, rtol: float = 1e-8,
                    n: int = 48, adaptive: bool = True,

                    phase: str = "quasistatic") -> GreenFunctionValue:
    """Surface response (g_parallel, g_perp) at height z above the stack.

    With adaptive=True the Gauss order is doubled until both components move
    by less than rtol. Vacuum stacks return exactly zero.
    """
    if z <= 0:
        raise ValueError("z must be > 0")
    gp, gt = _integrate_g(omega, z, stack, n, phase)
    if adaptive:
        for _ in range(6):
            gp2, gt2 = _integrate_g(omega, z, stack, 2 * n, phase)
            ok = (abs(gp2 - gp) <= rtol * max(abs(gp2), 1e-300)
                  and abs(gt2 - gt) <= rtol * max(abs(gt2), 1e-300))
            gp, gt = gp2, gt2
            if ok:
                break
            n *= 2
        else:
            raise QuadratureError("node doubling did not converge")
    return GreenFunctionValue(g_parallel=float(gp), g_perp=float(gt), z=z, omega=omega)


def plane_noise_psd(omega: float, z: float, stack: LayerStack, T: float,
                    orientation: str, phase: str = "quasistatic") -> float:
    """One-sided field-noise PSD above the stack [V^2 m^-2 Hz^-1].

    orientation: 'parallel' or 'perpendicular' to the surface. The factor
    (1 + exp(-x)) converts the emission-convention blackbody factor to the
    one-sided convention of the dissipation pipeline (module docstring).
    """
    g = green_functions(omega, z, stack, phase=phase)
    comp = {"parallel": g.g_parallel, "perpendicular": g.g_perp}
    try:
        gval = comp[orientation]
    except KeyError:
        raise ValueError("orientation must be 'parallel' or 'perpendicular'") from None
    x = HBAR * omega / (K_B * T)
    return blackbody_psd(omega, T) * (1 + np.exp(-x)) * gval
