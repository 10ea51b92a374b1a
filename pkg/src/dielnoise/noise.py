"""Fluctuation-dissipation pipeline: loss -> damping -> spectral density ->
heating rate, plus Lamb-Dicke factors and the beta weighting used to compare
multi-mode heating against single-axis conventions.

All spectral densities are one-sided [V^2 m^-2 Hz^-1]; the heating-rate
relation ndot = q^2 S_E / (4 m hbar omega) assumes that convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import EPS0, HBAR, K_B
from .materials import Material


def power_loss(loss_int: float, material: Material, omega: float) -> float:
    """Cycle-averaged dissipated power for one material [W].

    loss_int is the volume integral of |E1|^2 over that material's cells
    [V^2 m]; the dissipation density of a lossy dielectric driven at omega is
    (omega/2) eps0 eps_r tan_delta |E1|^2.
    """
    if loss_int < 0:
        raise ValueError("loss integral must be >= 0")
    if omega <= 0:
        raise ValueError("omega must be > 0")
    return 0.5 * omega * EPS0 * material.eps_r * material.tan_delta * loss_int


def damping_coefficient(p_loss: float, m: float, omega: float, delta_zeta: float) -> float:
    """Real part of the velocity-damping rate gamma [1/s] equivalent to an
    average dissipated power p_loss for oscillation amplitude delta_zeta."""
    return 2.0 * p_loss / (m * omega**2 * delta_zeta**2)


@dataclass(frozen=True)
class NoiseResult:
    """Electric-field noise at the charge position along one axis."""

    omega: float                        # rad/s
    axis: str
    s_e: float                          # V^2 m^-2 Hz^-1, one-sided
    per_material_terms: dict            # material name -> contribution to s_e
    loss_integral_per_region: dict = field(default_factory=dict)
    heating_rate: float | None = None   # phonons/s, set when mass supplied

    def __post_init__(self):
        if self.s_e < 0:
            raise ValueError("spectral density must be >= 0")


def spectral_density(loss_by_material: dict, materials: dict, T: float,
                     omega: float, q: float, delta_zeta: float,
                     axis: str = "z", m: float | None = None,
                     loss_by_region: dict | None = None) -> NoiseResult:
    """Assemble S_E from per-material loss integrals (one-sided FDT form).

    S_E = sum_i 4 k_B T / (delta_zeta^2 q^2 omega) * eps0 eps_r_i tan_delta_i
          * int_Vi |E1|^2. The per-material terms are retained because the
    loss-tangent fit needs S_E as an explicit linear form in each tan_delta.
    """
    pref = 4.0 * K_B * T / (delta_zeta**2 * q**2 * omega) * EPS0
    terms = {}
    for name, loss_int in loss_by_material.items():
        mat = materials[name]
        terms[name] = pref * mat.eps_r * mat.tan_delta * loss_int
    s_e = math.fsum(terms.values())
    ndot = heating_rate(s_e, omega, q, m) if m is not None else None
    return NoiseResult(omega=omega, axis=axis, s_e=s_e, per_material_terms=terms,
                       loss_integral_per_region=dict(loss_by_region or {}),
                       heating_rate=ndot)


def spectral_density_from_field(pf, T: float, omega: float, m: float | None = None) -> NoiseResult:
    """Convenience wrapper taking a PerturbationField directly."""
    scene = pf.scene
    return spectral_density(pf.loss_by_material(), scene.materials(), T, omega,
                            scene.charge.q, pf.delta_zeta, axis=pf.axis_label,
                            m=m if m is not None else scene.charge.m,
                            loss_by_region=pf.loss_by_region())


def heating_rate(s_e: float, omega: float, q: float, m: float) -> float:
    """Motional quantum gain rate of a trapped charge [phonons/s]."""
    return q**2 / (4.0 * m * HBAR * omega) * s_e


def lamb_dicke(wavelength: float, m: float, omega_i: float, phi_i: float) -> float:
    """eta = (2 pi / lambda) sqrt(hbar / (2 m omega)) cos(phi)."""
    if wavelength <= 0 or m <= 0 or omega_i <= 0:
        raise ValueError("wavelength, mass and omega must be > 0")
    return (2 * math.pi / wavelength) * math.sqrt(HBAR / (2 * m * omega_i)) * math.cos(phi_i)


@dataclass(frozen=True)
class ModeSet:
    """Trap mode frequencies and laser-projection angles for the three axes.

    omega / phi map axis labels to rad/s and radians; eta is derived from the
    probe wavelength and ion mass.
    """

    wavelength: float
    mass: float
    omega: dict
    phi: dict

    def __post_init__(self):
        for ax in ("x", "y", "z"):
            if ax not in self.omega or ax not in self.phi:
                raise ValueError(f"ModeSet must define omega and phi for axis {ax!r}")
            if self.omega[ax] <= 0:
                raise ValueError("mode frequencies must be > 0")

    def eta(self, axis: str) -> float:
        return lamb_dicke(self.wavelength, self.mass, self.omega[axis], self.phi[axis])

    def etas(self) -> dict:
        return {ax: self.eta(ax) for ax in ("x", "y", "z")}


def beta_weight(nbar: dict, modes: ModeSet) -> float:
    """beta = sum_i nbar_i eta_i^2 (dimensionless Rabi-decay parameter)."""
    for v in nbar.values():
        if v < 0:
            raise ValueError("nbar must be >= 0")
    return math.fsum(nbar[ax] * modes.eta(ax) ** 2 for ax in nbar)


def beta_rate(nbar_dot: dict, modes: ModeSet) -> float:
    """beta_dot = sum_i ndot_i eta_i^2 [1/s]."""
    return math.fsum(nbar_dot[ax] * modes.eta(ax) ** 2 for ax in nbar_dot)


def project_axial(beta_dot: float, eta_z: float) -> float:
    """Single-axis projection ndot = beta_dot / eta_z^2 [phonons/s].

    With nonzero radial rates this exceeds the true axial rate (the radial
    terms are nonnegative), so treat it as an upper-bound-style summary of a
    multi-mode measurement in single-mode units.
    """
    if eta_z == 0:
        raise ZeroDivisionError("eta_z must be nonzero for the axial projection")
    return beta_dot / eta_z**2
