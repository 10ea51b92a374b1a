"""Bundled scenario presets: scene builders and default mode sets."""
from __future__ import annotations

import math

from .constants import AMU, Q_E
from .geometry import (Box, Charge, Cylinder, DielectricRegion, GridSpec,
                       Scene, homogenize_layers, layer_stack_regions)
from .materials import material_lookup
from .noise import ModeSet

# fiber-mirror geometry: 230 um diameter fibers, 300 um modeled length,
# coatings of alternating quarter-wave layers meshed at 250 nm
FIBER_RADIUS = 115e-6
FIBER_LENGTH = 300e-6
LAYER_THICKNESS = 250e-9
N_LAYERS_TOP = 41       # photonic-crystal fiber side (+z)
N_LAYERS_BOTTOM = 47    # multi-mode fiber side (-z)

CA40_MASS = 40 * AMU
PROBE_WAVELENGTH = 729e-9

# laser-to-mode projection angles; the probe beam overlaps all three modes.
# Not a measured quantity: configurable harness defaults.
DEFAULT_PHI = {"x": math.radians(60.0), "y": math.radians(60.0), "z": math.radians(45.0)}

PLANE_VALIDATION_DISTANCES = (100e-6, 150e-6, 220e-6, 320e-6, 450e-6, 600e-6)
FIBER_SWEEP_DISTANCES = (250e-6, 275e-6, 300e-6, 350e-6, 400e-6, 450e-6, 500e-6, 600e-6)
FREQUENCY_SCAN_DISTANCES = (450e-6, 600e-6)
DISTANCE_SYSTEMATIC = 55e-6       # ion-fiber distance systematic uncertainty


def default_modeset(omega_z, omega_radial=2 * math.pi * 3.3e6,
                    phi=None, wavelength=PROBE_WAVELENGTH, mass=CA40_MASS) -> ModeSet:
    phi = dict(DEFAULT_PHI if phi is None else phi)
    return ModeSet(wavelength=wavelength, mass=mass,
                   omega={"x": omega_radial, "y": omega_radial, "z": omega_z},
                   phi=phi)


def _alternating_materials(n, temperature):
    """Coating sequence from the vacuum side inward: SiO2 topmost, alternating."""
    sio2 = material_lookup("SiO2", temperature)
    ta2o5 = material_lookup("Ta2O5", temperature)
    return [sio2 if i % 2 == 0 else ta2o5 for i in range(n)]


def _mirror_fiber_regions(tag, d, n_layers, direction, temperature, homogenize):
    """One mirror-coated fiber with its facet at |z| = d, pointing away from
    the origin along `direction` (+1 or -1)."""
    mats = _alternating_materials(n_layers, temperature)
    ts = [LAYER_THICKNESS] * n_layers
    start = direction * d
    builder = homogenize_layers if homogenize else layer_stack_regions
    stack = builder(name=f"{tag}-coating", axis="z", radius=FIBER_RADIUS,
                    start=start, materials=mats, thicknesses=ts, direction=direction)
    stack = list(stack) if isinstance(stack, list) else [stack]
    body_start = d + n_layers * LAYER_THICKNESS
    body = DielectricRegion(
        name=f"{tag}-body",
        shape=Cylinder(center=(0.0, 0.0, direction * (body_start + FIBER_LENGTH / 2)),
                       radius=FIBER_RADIUS, length=FIBER_LENGTH, axis="z"),
        material=material_lookup("SiO2", temperature),
    )
    return stack + [body]


def fiber_pair_scene(d, resolution="coarse", temperature=300.0, delta_zeta=5e-6,
                     homogenize=False, grid_overrides=None) -> Scene:
    """Ion centered between two mirror-coated fibers, each at distance d."""
    regions = (_mirror_fiber_regions("pcf", d, N_LAYERS_TOP, +1, temperature, homogenize)
               + _mirror_fiber_regions("mmf", d, N_LAYERS_BOTTOM, -1, temperature, homogenize))
    z_extent = max(5 * d, d + N_LAYERS_BOTTOM * LAYER_THICKNESS + FIBER_LENGTH + 2 * d)
    lat = max(5 * d, 3.0 * FIBER_RADIUS)
    dom = Box((-lat, -lat, -z_extent), (lat, lat, z_extent))
    charge = Charge(q=Q_E, m=CA40_MASS, position=(0.0, 0.0, 0.0),
                    displacement_axis=(0.0, 0.0, 1.0), delta_zeta=delta_zeta)
    gs = GridSpec(resolution=resolution, **(grid_overrides or {}))
    return Scene(charge=charge, regions=tuple(regions), domain=dom, grid_spec=gs)


def plane_cylinder_scene(d, resolution="coarse", temperature=300.0,
                         radius=3e-3, thickness=250e-6, material="SiO2",
                         delta_zeta=5e-6, grid_overrides=None) -> Scene:
    """Wide thin cylinder approximating an infinite plane, facet at z = -d."""
    disc = DielectricRegion(
        name="plane",
        shape=Cylinder(center=(0.0, 0.0, -(d + thickness / 2)),
                       radius=radius, length=thickness, axis="z"),
        material=material_lookup(material, temperature),
    )
    lat = max(5 * d, radius * 1.1)
    z_lo = -max(5 * d, d + thickness + 0.5 * d)
    z_hi = 5 * d
    dom = Box((-lat, -lat, z_lo), (lat, lat, z_hi))
    charge = Charge(q=Q_E, m=CA40_MASS, position=(0.0, 0.0, 0.0),
                    displacement_axis=(0.0, 0.0, 1.0), delta_zeta=delta_zeta)
    gs = GridSpec(resolution=resolution, **(grid_overrides or {}))
    return Scene(charge=charge, regions=(disc,), domain=dom, grid_spec=gs)


def nano_patch_scene(d=50e-6, resolution="coarse", temperature=300.0,
                     radius=10e-6, thickness=1e-9, delta_zeta=2e-6,
                     grid_overrides=None) -> Scene:
    """Nanometer-thin oxide patch: face-on disc at distance d below the charge."""
    disc = DielectricRegion(
        name="patch",
        shape=Cylinder(center=(0.0, 0.0, -(d + thickness / 2)),
                       radius=radius, length=thickness, axis="z"),
        material=material_lookup("SiO2", temperature),
    )
    lat = 5 * d
    dom = Box((-lat, -lat, -max(5 * d, d + thickness + d)), (lat, lat, 5 * d))
    charge = Charge(q=Q_E, m=CA40_MASS, position=(0.0, 0.0, 0.0),
                    displacement_axis=(0.0, 0.0, 1.0), delta_zeta=delta_zeta)
    gs = GridSpec(resolution=resolution, **(grid_overrides or {}))
    return Scene(charge=charge, regions=(disc,), domain=dom, grid_spec=gs)


def coating_stack_for_plane_model(n_layers, temperature=300.0):
    """LayerStack mirror model (layers from vacuum inward, fused-silica
    substrate standing in for the fiber body)."""
    from .layers import LayerStack
    mats = _alternating_materials(n_layers, temperature)
    return LayerStack(layers=tuple((m, LAYER_THICKNESS) for m in mats),
                      substrate=material_lookup("SiO2", temperature))


PRESET_NAMES = (
    "infinite-plane-validation",
    "distance-interpolation",
    "fiber-pair-distance",
    "fiber-pair-frequency",
    "loss-tangent-fit",
    "nano-patch",
)
