"""Batch execution of bundled presets: solves, derived tables, CSV artifacts,
and a run manifest. CSV bodies are deterministic for a given configuration
and seed; manifests additionally carry timestamps and timings.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .constants import EPS0, HBAR, K_B, Q_E
from .fits import MeasurementRecord, fit_loss_tangent, fit_power_law, reduced_chi_square
from .layers import LayerStack, plane_noise_psd
from .materials import material_lookup
from .noise import beta_rate, heating_rate, project_axial, spectral_density
from .presets import (CA40_MASS, DISTANCE_SYSTEMATIC, FIBER_SWEEP_DISTANCES,
                      FREQUENCY_SCAN_DISTANCES, PLANE_VALIDATION_DISTANCES,
                      PRESET_NAMES, coating_stack_for_plane_model,
                      default_modeset, fiber_pair_scene, nano_patch_scene,
                      plane_cylinder_scene)
from .solver import assemble, perturbation_field

OMEGA_REF = 2 * math.pi * 1e6           # reference angular frequency for S_E tables
OMEGA_RADIAL = 2 * math.pi * 3.3e6
FREQ_SCAN_HZ = tuple(0.5e6 + 0.1e6 * i for i in range(11))   # 0.5 .. 1.5 MHz
T_ROOM = 300.0


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class RunResult:
    preset: str
    outdir: Path
    tables: dict = field(default_factory=dict)   # name -> list of row dicts
    manifest: dict = field(default_factory=dict)
    ok: bool = True


# ---------------------------------------------------------------------------
# solver-backed sweeps (cached per process: presets and tests share solves)

@lru_cache(maxsize=64)
def fiber_pair_losses(d, resolution, homogenize=False, delta_zeta=5e-6):
    """Loss integrals for the fiber-pair scene at separation d.

    Returns {"z": {...}, "x": {...}} where each entry carries by_material and
    by_region integrals [V^2 m]; y equals x by the x<->y symmetry of the
    coaxial geometry. One assembly serves both displacement axes.
    """
    scene = fiber_pair_scene(d, resolution=resolution, homogenize=homogenize,
                             delta_zeta=delta_zeta)
    system = assemble(scene)
    out = {}
    for axis in ("z", "x"):
        pf = perturbation_field(scene, axis=axis, system=system)
        out[axis] = dict(by_material=pf.loss_by_material(),
                         by_region=pf.loss_by_region(),
                         meta=pf.solve_metadata)
    out["n_cells"] = system.grid.n_cells
    out["n_solves"] = system.solve_count
    return out


@lru_cache(maxsize=64)
def plane_cylinder_losses(d, resolution, delta_zeta=5e-6):
    scene = plane_cylinder_scene(d, resolution=resolution, delta_zeta=delta_zeta)
    system = assemble(scene)
    out = {}
    for axis in ("z", "x"):
        pf = perturbation_field(scene, axis=axis, system=system)
        out[axis] = dict(by_material=pf.loss_by_material(),
                         by_region=pf.loss_by_region(),
                         meta=pf.solve_metadata)
    out["n_cells"] = system.grid.n_cells
    out["n_solves"] = system.solve_count
    return out


@lru_cache(maxsize=8)
def nano_patch_losses(resolution, d=50e-6, delta_zeta=2e-6):
    scene = nano_patch_scene(d=d, resolution=resolution, delta_zeta=delta_zeta)
    system = assemble(scene)
    out = {}
    for axis in ("z", "x"):
        pf = perturbation_field(scene, axis=axis, system=system)
        out[axis] = dict(by_material=pf.loss_by_material(),
                         by_region=pf.loss_by_region(),
                         meta=pf.solve_metadata)
    out["n_cells"] = system.grid.n_cells
    out["n_solves"] = system.solve_count
    return out


def s_e_from_losses(by_material, omega, T=T_ROOM, q=Q_E, delta_zeta=5e-6,
                    m=CA40_MASS, axis="z"):
    mats = {name: material_lookup(name, T) for name in by_material}
    return spectral_density(by_material, mats, T, omega, q, delta_zeta, axis=axis, m=m)


def per_axis_heating(losses, omega_z, T=T_ROOM, delta_zeta=5e-6,
                     omega_radial=OMEGA_RADIAL):
    """ndot per axis from the cached loss integrals (y mirrors x)."""
    res_z = s_e_from_losses(losses["z"]["by_material"], omega_z, T=T,
                            delta_zeta=delta_zeta, axis="z")
    res_x = s_e_from_losses(losses["x"]["by_material"], omega_radial, T=T,
                            delta_zeta=delta_zeta, axis="x")
    return {"z": res_z, "x": res_x, "y": res_x}


def beta_dot_prediction(losses, omega_z, T=T_ROOM, delta_zeta=5e-6,
                        omega_radial=OMEGA_RADIAL, phi=None):
    modes = default_modeset(omega_z, omega_radial, phi=phi)
    res = per_axis_heating(losses, omega_z, T=T, delta_zeta=delta_zeta,
                           omega_radial=omega_radial)
    rates = {ax: res[ax].heating_rate for ax in ("x", "y", "z")}
    bd = beta_rate(rates, modes)
    return bd, rates, modes


def loss_tangent_parts(losses, omega_z, T=T_ROOM, delta_zeta=5e-6,
                       omega_radial=OMEGA_RADIAL, phi=None):
    """beta_dot = offset + slope * tan_delta_T, from per-material integrals.

    Per axis i: coefficient(mat) = eta_i^2 * kB T eps0 eps_r(mat) I(mat,i)
    / (m hbar omega_i^2 delta_zeta^2); SiO2's tan_delta multiplies the
    offset, Ta2O5's is the free parameter.
    """
    modes = default_modeset(omega_z, omega_radial, phi=phi)
    sio2 = material_lookup("SiO2", T)
    ta2o5 = material_lookup("Ta2O5", T)
    offset = 0.0
    slope = 0.0
    for ax in ("x", "y", "z"):
        key = "x" if ax in ("x", "y") else "z"
        omega_i = modes.omega[ax]
        eta2 = modes.eta(ax) ** 2
        pref = eta2 * K_B * T * EPS0 / (CA40_MASS * HBAR * omega_i**2 * delta_zeta**2)
        bym = losses[key]["by_material"]
        offset += pref * sio2.eps_r * bym.get("SiO2", 0.0) * sio2.tan_delta
        slope += pref * ta2o5.eps_r * bym.get("Ta2O5", 0.0)
    return offset, slope, modes


# ---------------------------------------------------------------------------
# presets

def run_infinite_plane_validation(outdir, resolution, seed, threads=1, **kw):
    t0 = time.time()
    omega = OMEGA_REF
    slab = LayerStack.slab(material_lookup("SiO2", T_ROOM), 250e-6)
    half = LayerStack.half_space(material_lookup("SiO2", T_ROOM))
    rows = []
    for d in PLANE_VALIDATION_DISTANCES:
        losses = plane_cylinder_losses(d, resolution)
        se_ax = s_e_from_losses(losses["z"]["by_material"], omega, axis="z").s_e
        se_rad = s_e_from_losses(losses["x"]["by_material"], omega, axis="x").s_e
        an_ax = plane_noise_psd(omega, d, slab, T_ROOM, "perpendicular")
        an_rad = plane_noise_psd(omega, d, slab, T_ROOM, "parallel")
        hs_ax = plane_noise_psd(omega, d, half, T_ROOM, "perpendicular")
        hs_rad = plane_noise_psd(omega, d, half, T_ROOM, "parallel")
        rows.append((d * 1e6, se_ax, se_rad, an_ax, an_rad, hs_ax, hs_rad,
                     se_ax / an_ax - 1, se_rad / an_rad - 1))
    header = ["d_um", "s_e_axial_fd", "s_e_radial_fd",
              "s_e_axial_analytic", "s_e_radial_analytic",
              "s_e_axial_halfspace", "s_e_radial_halfspace",
              "rel_dev_axial", "rel_dev_radial"]
    write_csv(outdir / "plane_validation.csv", header, rows)
    return dict(tables={"plane_validation": rows},
                params=dict(omega=omega, distances_um=[d * 1e6 for d in PLANE_VALIDATION_DISTANCES]),
                runtime_s=time.time() - t0)


def run_distance_interpolation(outdir, resolution, seed, threads=1, **kw):
    t0 = time.time()
    half = LayerStack.half_space(material_lookup("SiO2", T_ROOM))
    rows = []
    se = {"z": [], "x": []}
    for d in FIBER_SWEEP_DISTANCES:
        losses = fiber_pair_losses(d, resolution)
        res = per_axis_heating(losses, OMEGA_REF)
        se["z"].append(res["z"].s_e)
        se["x"].append(res["x"].s_e)
        rows.append((d * 1e6, res["z"].s_e, res["x"].s_e,
                     res["z"].per_material_terms.get("SiO2", 0.0),
                     res["z"].per_material_terms.get("Ta2O5", 0.0),
                     plane_noise_psd(OMEGA_REF, d, half, T_ROOM, "perpendicular"),
                     plane_noise_psd(OMEGA_REF, d, half, T_ROOM, "parallel")))
    d_arr = np.array(FIBER_SWEEP_DISTANCES)
    fit_ax = fit_power_law(d_arr, np.array(se["z"]))
    fit_rad = fit_power_law(d_arr, np.array(se["x"]))
    header = ["d_um", "s_e_axial", "s_e_radial", "s_e_axial_SiO2",
              "s_e_axial_Ta2O5", "s_e_halfspace_perp", "s_e_halfspace_par"]
    write_csv(outdir / "distance_scaling.csv", header, rows)
    fits = dict(
        axial=dict(amplitude=fit_ax.amplitude, alpha=fit_ax.alpha,
                   alpha_err=fit_ax.alpha_err),
        radial=dict(amplitude=fit_rad.amplitude, alpha=fit_rad.alpha,
                    alpha_err=fit_rad.alpha_err),
    )
    with open(outdir / "power_law_fits.json", "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
    return dict(tables={"distance_scaling": rows, "fits": fits},
                params=dict(omega=OMEGA_REF,
                            distances_um=[d * 1e6 for d in FIBER_SWEEP_DISTANCES]),
                runtime_s=time.time() - t0)


def load_trap_frequency_table():
    rows = []
    with resources.files("dielnoise.data").joinpath("trap_frequencies.csv").open() as fh:
        for rec in csv.DictReader(fh):
            rows.append({k: float(v) for k, v in rec.items()})
    return rows


def run_fiber_pair_distance(outdir, resolution, seed, threads=1,
                            distance_band=False, **kw):
    t0 = time.time()
    table = load_trap_frequency_table()
    simulated = {round(d * 1e6): d for d in FIBER_SWEEP_DISTANCES}
    se_sim = {}
    for d in FIBER_SWEEP_DISTANCES:
        losses = fiber_pair_losses(d, resolution)
        se_sim[d] = per_axis_heating(losses, OMEGA_REF)

    fit_ax = fit_power_law(np.array(FIBER_SWEEP_DISTANCES),
                           np.array([se_sim[d]["z"].s_e for d in FIBER_SWEEP_DISTANCES]))
    fit_rad = fit_power_law(np.array(FIBER_SWEEP_DISTANCES),
                            np.array([se_sim[d]["x"].s_e for d in FIBER_SWEEP_DISTANCES]))

    rows = []
    for rec in table:
        d = rec["d_um"] * 1e-6
        omega_z = 2 * math.pi * rec["omega_z_MHz"] * 1e6
        key = round(rec["d_um"])
        if key in simulated:
            losses = fiber_pair_losses(simulated[key], resolution)
            bd, rates, modes = beta_dot_prediction(losses, omega_z)
            source = "simulated"
        else:
            # interpolate S_E(d) with the fitted power law (reference omega),
            # rescale to the row's trap frequency via the exact 1/omega law
            se_z = fit_ax(d) * OMEGA_REF / omega_z
            se_x = fit_rad(d)
            modes = default_modeset(omega_z)
            rates = {"z": heating_rate(se_z, omega_z, Q_E, CA40_MASS),
                     "x": heating_rate(se_x, OMEGA_RADIAL, Q_E, CA40_MASS)}
            rates["y"] = rates["x"]
            bd = beta_rate(rates, modes)
            source = "interpolated"
        ndot_proj = project_axial(bd, modes.eta("z"))
        rows.append((rec["d_um"], rec["d_err_um"], rec["omega_z_MHz"],
                     rec["omega_z_err_MHz"], rates["z"], rates["x"], bd,
                     ndot_proj, source))
    header = ["d_um", "d_err_um", "omega_z_MHz", "omega_z_err_MHz",
              "ndot_axial", "ndot_radial", "beta_dot", "ndot_projected", "source"]
    write_csv(outdir / "distance_scan.csv", header, rows)

    band_rows = []
    if distance_band:
        for rec in table:
            if round(rec["d_um"]) not in simulated:
                continue
            d = simulated[round(rec["d_um"])]
            omega_z = 2 * math.pi * rec["omega_z_MHz"] * 1e6
            vals = []
            for dd in (d - DISTANCE_SYSTEMATIC, d + DISTANCE_SYSTEMATIC):
                if dd <= 100e-6:
                    vals.append(float("nan"))
                    continue
                losses = fiber_pair_losses(dd, resolution)
                bd, _, modes = beta_dot_prediction(losses, omega_z)
                vals.append(project_axial(bd, modes.eta("z")))
            band_rows.append((rec["d_um"], vals[1], vals[0]))
        write_csv(outdir / "distance_scan_band.csv",
                  ["d_um", "ndot_projected_lo", "ndot_projected_hi"], band_rows)

    return dict(tables={"distance_scan": rows, "band": band_rows},
                params=dict(distances_um=[r["d_um"] for r in table],
                            distance_band=distance_band),
                runtime_s=time.time() - t0)


def run_fiber_pair_frequency(outdir, resolution, seed, threads=1, **kw):
    t0 = time.time()
    rows = []
    for d in FREQUENCY_SCAN_DISTANCES:
        losses = fiber_pair_losses(d, resolution)
        for f in FREQ_SCAN_HZ:
            omega_z = 2 * math.pi * f
            bd, rates, modes = beta_dot_prediction(losses, omega_z)
            rows.append((d * 1e6, f / 1e6, rates["z"], rates["x"], bd,
                         project_axial(bd, modes.eta("z"))))
    header = ["d_um", "f_z_MHz", "ndot_axial", "ndot_radial", "beta_dot",
              "ndot_projected"]
    write_csv(outdir / "frequency_scan.csv", header, rows)
    return dict(tables={"frequency_scan": rows},
                params=dict(distances_um=[d * 1e6 for d in FREQUENCY_SCAN_DISTANCES],
                            f_MHz=[f / 1e6 for f in FREQ_SCAN_HZ]),
                runtime_s=time.time() - t0)


MEASURED_DATA_PATH = Path("data") / "measured" / "heating.csv"


def load_measured_records(path=None):
    """External measured heating data (not bundled); see README for the schema.

    Returns [] when the file is absent.
    """
    p = Path(path) if path else MEASURED_DATA_PATH
    if not p.exists():
        return []
    out = []
    with open(p) as fh:
        for rec in csv.DictReader(fh):
            out.append(MeasurementRecord(
                d=float(rec["d_um"]) * 1e-6,
                d_err=float(rec["d_err_um"]) * 1e-6,
                omega_z=2 * math.pi * float(rec["omega_z_MHz"]) * 1e6,
                omega_z_err=2 * math.pi * float(rec["omega_z_err_MHz"]) * 1e6,
                value=float(rec["value"]),
                sigma=float(rec["sigma"]),
                kind=rec["kind"]))
    return out


def run_loss_tangent_fit(outdir, resolution, seed, threads=1,
                         measured_path=None, noise_rel=0.2, **kw):
    """Loss-tangent extraction demo: fit the Ta2O5 loss tangent to frequency
    scans at both separations simultaneously (SiO2 held at its bundled value).

    Uses the external measured dataset when present; otherwise synthesizes
    noisy data from the model's own predictions at the bundled tan_delta.
    """
    t0 = time.time()
    parts = {}
    basis_rows = []
    for d in FREQUENCY_SCAN_DISTANCES:
        losses = fiber_pair_losses(d, resolution)
        for f in FREQ_SCAN_HZ:
            omega_z = 2 * math.pi * f
            off, slope, modes = loss_tangent_parts(losses, omega_z)
            parts[(d, f)] = (off, slope, modes)
            basis_rows.append((d * 1e6, f / 1e6, off, slope))
    write_csv(outdir / "loss_tangent_basis.csv",
              ["d_um", "f_z_MHz", "beta_dot_offset", "beta_dot_slope_per_tan"],
              basis_rows)

    measured = [m for m in load_measured_records(measured_path)
                if m.kind == "frequency-scan"]
    ta2o5 = material_lookup("Ta2O5", T_ROOM)
    data_rows = []
    if measured:
        mode = "external"
        y, sg, off, slo = [], [], [], []
        for m in measured:
            d = min(FREQUENCY_SCAN_DISTANCES, key=lambda dd: abs(dd - m.d))
            f = m.omega_z / (2 * math.pi)
            fk = min(FREQ_SCAN_HZ, key=lambda ff: abs(ff - f))
            o, s, _ = parts[(d, fk)]
            y.append(m.value)
            sg.append(m.sigma)
            off.append(o)
            slo.append(s)
            data_rows.append((d * 1e6, f / 1e6, m.value, m.sigma))
    else:
        mode = "synthetic"
        rng = np.random.default_rng(seed)
        y, sg, off, slo = [], [], [], []
        for (d, f), (o, s, _) in sorted(parts.items()):
            truth = o + s * ta2o5.tan_delta
            sigma = noise_rel * truth
            val = truth + sigma * rng.standard_normal()
            y.append(val)
            sg.append(sigma)
            off.append(o)
            slo.append(s)
            data_rows.append((d * 1e6, f / 1e6, val, sigma))
    write_csv(outdir / "loss_tangent_data.csv",
              ["d_um", "f_z_MHz", "beta_dot", "sigma"], data_rows)

    fit = fit_loss_tangent(y, sg, off, slo)
    result = dict(mode=mode, tan_delta_fit=fit.tan_delta, sigma=fit.sigma,
                  chi2_nu=fit.chi2_nu, tan_delta_reference=ta2o5.tan_delta)
    with open(outdir / "loss_tangent_fit.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    return dict(tables={"fit": result, "basis": basis_rows},
                params=dict(mode=mode, noise_rel=noise_rel),
                runtime_s=time.time() - t0)


def run_nano_patch(outdir, resolution, seed, threads=1, **kw):
    t0 = time.time()
    losses = nano_patch_losses(resolution)
    omega = OMEGA_REF
    rows = []
    for axis in ("x", "y", "z"):
        key = "x" if axis in ("x", "y") else "z"
        res = s_e_from_losses(losses[key]["by_material"], omega,
                              delta_zeta=2e-6, axis=axis)
        rows.append((axis, res.s_e, res.heating_rate))
    write_csv(outdir / "nano_patch.csv", ["axis", "s_e", "ndot"], rows)
    return dict(tables={"nano_patch": rows},
                params=dict(omega=omega, d_um=50.0, radius_um=10.0,
                            thickness_nm=1.0),
                runtime_s=time.time() - t0)


_PRESET_RUNNERS = {
    "infinite-plane-validation": run_infinite_plane_validation,
    "distance-interpolation": run_distance_interpolation,
    "fiber-pair-distance": run_fiber_pair_distance,
    "fiber-pair-frequency": run_fiber_pair_frequency,
    "loss-tangent-fit": run_loss_tangent_fit,
    "nano-patch": run_nano_patch,
}


def run_preset(name, output_dir, resolution="coarse", seed=0, threads=1,
               **kw) -> RunResult:
    if name not in _PRESET_RUNNERS:
        raise KeyError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    outdir = Path(output_dir) / name
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    payload = _PRESET_RUNNERS[name](outdir, resolution, seed, threads=threads, **kw)
    manifest = dict(
        preset=name,
        resolution=resolution,
        seed=seed,
        params=payload.get("params", {}),
        version=__version__,
        solver=dict(tolerance=1e-8),
        runtime_s=round(time.time() - t0, 3),
        created=time.strftime("%Y-%m-%dT%H:%M:%S"),
    )
    manifest["config_hash"] = config_hash(
        dict(preset=name, resolution=resolution, seed=seed,
             params=manifest["params"]))
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return RunResult(preset=name, outdir=outdir, tables=payload.get("tables", {}),
                     manifest=manifest)
