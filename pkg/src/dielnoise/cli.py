"""Command-line front end.

    noise run <preset|scene.json> [-o DIR] [--resolution R] [--seed S]
    noise analytic [--material SiO2|--coating N] --distances ... [-o DIR]
    noise fit powerlaw data.csv / chisq measured.csv predicted.csv
    noise thermometry [--rate R] [--seed S] [-o DIR]

The default output directory is $NOISE_OUTPUT_DIR or ./noise_out.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import load_scene
from .fits import MeasurementRecord, fit_power_law, reduced_chi_square
from .geometry import SceneValidationError
from .layers import LayerStack, green_functions, plane_noise_psd
from .materials import UnknownMaterialError, material_lookup
from .noise import project_axial
from .presets import PRESET_NAMES, coating_stack_for_plane_model, default_modeset
from .runner import run_preset, write_csv
from .solver import ConvergenceError, assemble, perturbation_field
from .thermometry import recover_rate, synth_experiment
from .units import UnitError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _outdir(args) -> Path:
    out = Path(args.output_dir or os.environ.get("NOISE_OUTPUT_DIR", "noise_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    out = _outdir(args)
    if args.scenario in PRESET_NAMES:
        result = run_preset(args.scenario, out, resolution=args.resolution,
                            seed=args.seed, threads=args.threads,
                            distance_band=args.distance_band)
        print(f"{args.scenario}: artifacts in {result.outdir}")
        return EXIT_OK
    # custom scene file: run a single perturbation solve per requested axis
    scene = load_scene(args.scenario)
    from .noise import spectral_density_from_field
    outdir = out / Path(args.scenario).stem
    outdir.mkdir(parents=True, exist_ok=True)
    system = assemble(scene, resolution=args.resolution)
    rows = []
    for axis in ("z", "x"):
        pf = perturbation_field(scene, axis=axis, system=system)
        res = spectral_density_from_field(pf, T=300.0, omega=2 * math.pi * args.frequency * 1e6)
        rows.append((axis, res.s_e, res.heating_rate))
    write_csv(outdir / "noise.csv", ["axis", "s_e", "ndot"], rows)
    print(f"scene {args.scenario}: artifacts in {outdir}")
    return EXIT_OK


def _cmd_analytic(args) -> int:
    out = _outdir(args)
    if args.coating:
        stack = coating_stack_for_plane_model(args.coating)
        label = f"coating{args.coating}"
    else:
        mat = material_lookup(args.material)
        stack = LayerStack.half_space(mat) if args.thickness is None else \
            LayerStack.slab(mat, args.thickness * 1e-6)
        label = args.material
    omega = 2 * math.pi * args.frequency * 1e6
    rows = []
    for d_um in args.distances:
        z = d_um * 1e-6
        g = green_functions(omega, z, stack)
        rows.append((d_um, args.frequency, g.g_parallel, g.g_perp,
                     plane_noise_psd(omega, z, stack, args.temperature, "parallel"),
                     plane_noise_psd(omega, z, stack, args.temperature, "perpendicular")))
    path = out / f"analytic_{label}.csv"
    write_csv(path, ["d_um", "f_MHz", "g_parallel", "g_perp", "s_parallel",
                     "s_perpendicular"], rows)
    print(f"analytic table: {path}")
    return EXIT_OK


def _read_xy_csv(path):
    with open(path) as fh:
        recs = list(csv.DictReader(fh))
    return recs


def _cmd_fit(args) -> int:
    if args.kind == "powerlaw":
        recs = _read_xy_csv(args.data)
        d = np.array([float(r["d_um"]) * 1e-6 for r in recs])
        key = [k for k in recs[0] if k != "d_um"][0]
        s = np.array([float(r[key]) for r in recs])
        fit = fit_power_law(d, s)
        print(json.dumps(dict(alpha=fit.alpha, alpha_err=fit.alpha_err,
                              amplitude=fit.amplitude), indent=2))
        return EXIT_OK
    # chisq
    meas = _read_xy_csv(args.data)
    pred = _read_xy_csv(args.predicted)
    records = [MeasurementRecord(d=float(m.get("d_um", 0)) * 1e-6, d_err=1e-9,
                                 omega_z=1.0, omega_z_err=0.0,
                                 value=float(m["value"]), sigma=float(m["sigma"]))
               for m in meas]
    pvals = [float(p["value"]) for p in pred]
    chi2 = reduced_chi_square(records, pvals, n_params=args.n_params)
    print(json.dumps(dict(chi2_nu=chi2, n=len(records)), indent=2))
    return EXIT_OK


def _cmd_thermometry(args) -> int:
    out = _outdir(args)
    modes = default_modeset(omega_z=2 * math.pi * 1e6)
    omega_rabi = 2 * math.pi * 50e3
    waits = [0.0, 0.5, 1.0, 1.5, 2.0]
    pulses = np.linspace(1e-6, 120e-6, 60)
    datasets = synth_experiment({"z": args.rate, "x": 0.0, "y": 0.0}, modes,
                                waits, pulses, shots=args.shots, seed=args.seed,
                                omega_rabi=omega_rabi)
    rows = []
    for ds in datasets:
        for t, p in zip(ds.pulse_times, ds.excitation_probabilities):
            rows.append((ds.wait_time, t, p))
    write_csv(out / "thermometry_data.csv", ["wait_s", "pulse_s", "p"], rows)
    beta_dot, err, fits = recover_rate(datasets, omega_guess=omega_rabi)
    ndot = project_axial(beta_dot, modes.eta("z"))
    ndot_err = project_axial(err, modes.eta("z"))
    summary = dict(injected_rate=args.rate, beta_dot=beta_dot,
                   beta_dot_sigma=err, ndot_projected=ndot,
                   ndot_sigma=ndot_err, seed=args.seed,
                   beta_fits=[dict(wait=w, beta=b, sigma=s) for w, b, s, *_ in fits])
    with open(out / "thermometry_fit.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(dict(injected=args.rate, recovered=ndot, sigma=ndot_err),
                     indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="noise", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a bundled preset or a scene file")
    pr.add_argument("scenario", help=f"preset ({', '.join(PRESET_NAMES)}) or scene JSON path")
    pr.add_argument("-o", "--output-dir", default=None)
    pr.add_argument("--resolution", choices=("coarse", "paper"), default="coarse")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--threads", type=int, default=1)
    pr.add_argument("--frequency", type=float, default=1.0, help="MHz, custom scenes")
    pr.add_argument("--distance-band", action="store_true",
                    help="also evaluate at d +/- the 55um systematic")
    pr.set_defaults(fn=_cmd_run)

    pa = sub.add_parser("analytic", help="layered-plane noise tables")
    pa.add_argument("--material", default="SiO2")
    pa.add_argument("--thickness", type=float, default=None, help="layer thickness in um (default: half-space)")
    pa.add_argument("--coating", type=int, default=None, help="mirror-coating stack with N layers")
    pa.add_argument("--distances", type=float, nargs="+", required=True, help="um")
    pa.add_argument("--frequency", type=float, default=1.0, help="MHz")
    pa.add_argument("--temperature", type=float, default=300.0)
    pa.add_argument("-o", "--output-dir", default=None)
    pa.set_defaults(fn=_cmd_analytic)

    pf = sub.add_parser("fit", help="fit utilities on CSV inputs")
    pf.add_argument("kind", choices=("powerlaw", "chisq"))
    pf.add_argument("data")
    pf.add_argument("predicted", nargs="?")
    pf.add_argument("--n-params", type=int, default=0)
    pf.set_defaults(fn=_cmd_fit)

    pt = sub.add_parser("thermometry", help="synthetic heating-rate measurement")
    pt.add_argument("--rate", type=float, default=100.0, help="injected axial phonons/s")
    pt.add_argument("--shots", type=int, default=200)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("-o", "--output-dir", default=None)
    pt.set_defaults(fn=_cmd_thermometry)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SceneValidationError, UnitError, UnknownMaterialError,
            FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
