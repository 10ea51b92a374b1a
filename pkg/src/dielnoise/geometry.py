"""Scene geometry: dielectric shapes, regions, the probe charge, and validation.

Scenes are immutable after construction and safe to share across workers.
All coordinates are SI meters. Shapes are axis-aligned primitives; cylinders
may point along x, y or z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .materials import Material

_AXES = {"x": 0, "y": 1, "z": 2}


class SceneValidationError(ValueError):
    """Raised when a scene violates a construction invariant."""


# ---------------------------------------------------------------------------
# shapes

@dataclass(frozen=True)
class Cylinder:
    """Circular cylinder with axis along one coordinate direction.

    `center` is the midpoint of the axis segment; `length` the full extent
    along `axis`; `radius` the lateral radius.
    """

    center: tuple
    radius: float
    length: float
    axis: str = "z"

    def __post_init__(self):
        if self.radius <= 0 or self.length <= 0:
            raise SceneValidationError("cylinder dimensions must be > 0")
        if self.axis not in _AXES:
            raise SceneValidationError(f"cylinder axis must be x, y or z, got {self.axis!r}")

    @property
    def iax(self):
        return _AXES[self.axis]

    def bounding_box(self):
        lo = list(self.center)
        hi = list(self.center)
        for i in range(3):
            h = self.length / 2 if i == self.iax else self.radius
            lo[i] -= h
            hi[i] += h
        return np.array(lo), np.array(hi)

    def contains(self, x, y, z):
        """Vectorized membership test for points (cell centers)."""
        p = (x, y, z)
        a = self.iax
        lat = [i for i in range(3) if i != a]
        r2 = (p[lat[0]] - self.center[lat[0]]) ** 2 + (p[lat[1]] - self.center[lat[1]]) ** 2
        ax = np.abs(p[a] - self.center[a])
        return (r2 < self.radius**2) & (ax < self.length / 2)

    def distance_to(self, point):
        """Euclidean distance from an exterior point to the cylinder surface."""
        a = self.iax
        lat = [i for i in range(3) if i != a]
        rho = math.hypot(point[lat[0]] - self.center[lat[0]],
                         point[lat[1]] - self.center[lat[1]])
        dax = abs(point[a] - self.center[a]) - self.length / 2
        drad = rho - self.radius
        if dax <= 0 and drad <= 0:
            return 0.0
        return math.hypot(max(dax, 0.0), max(drad, 0.0))

    def critical_planes(self):
        """Coordinate planes the mesh must honor, per axis index."""
        a = self.iax
        lat = [i for i in range(3) if i != a]
        planes = {a: [self.center[a] - self.length / 2, self.center[a] + self.length / 2]}
        for i in lat:
            planes[i] = [self.center[i] - self.radius, self.center[i] + self.radius]
        return planes

    def scaled(self, s):
        return Cylinder(tuple(c * s for c in self.center), self.radius * s,
                        self.length * s, self.axis)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangular slab."""

    min_corner: tuple
    max_corner: tuple

    def __post_init__(self):
        for lo, hi in zip(self.min_corner, self.max_corner):
            if hi <= lo:
                raise SceneValidationError("box must have positive extent on every axis")

    def bounding_box(self):
        return np.array(self.min_corner), np.array(self.max_corner)

    def contains(self, x, y, z):
        p = (x, y, z)
        out = np.ones(np.broadcast(x, y, z).shape, dtype=bool)
        for i in range(3):
            out &= (p[i] > self.min_corner[i]) & (p[i] < self.max_corner[i])
        return out

    def distance_to(self, point):
        d = 0.0
        for i in range(3):
            lo, hi = self.min_corner[i], self.max_corner[i]
            if point[i] < lo:
                d += (lo - point[i]) ** 2
            elif point[i] > hi:
                d += (point[i] - hi) ** 2
        return math.sqrt(d)

    def critical_planes(self):
        return {i: [self.min_corner[i], self.max_corner[i]] for i in range(3)}

    def scaled(self, s):
        return Box(tuple(c * s for c in self.min_corner), tuple(c * s for c in self.max_corner))


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class DielectricRegion:
    """A shape filled with a single lossy dielectric."""

    name: str
    shape: object
    material: Material

    def eps_rel_diag(self):
        e = self.material.eps_r
        return (e, e, e)

    def loss_split(self, e_sq_tangential, e_sq_normal, volumes):
        """Volume integral of |E1|^2 attributed per material name."""
        return {self.material.name: float(np.sum((e_sq_tangential + e_sq_normal) * volumes))}

    def materials(self):
        return {self.material.name: self.material}

    def scaled(self, s):
        return DielectricRegion(self.name, self.shape.scaled(s), self.material)


@dataclass(frozen=True)
class HomogenizedStack:
    """Alternating thin layers collapsed into one anisotropic effective medium.

    Normal to the layers the effective permittivity is the thickness-weighted
    harmonic mean (capacitors in series); in the layer plane it is the
    arithmetic mean. Per-material loss bookkeeping reconstructs the in-layer
    fields from the homogenized cell fields: tangential E is shared by all
    layers, normal E in layer i is (eps_n_eff / eps_i) * E_n.
    """

    name: str
    shape: Cylinder
    layer_materials: tuple        # (Material, ...) one entry per layer
    layer_fractions: tuple        # volume fractions, sum to 1

    def __post_init__(self):
        if abs(sum(self.layer_fractions) - 1.0) > 1e-12:
            raise SceneValidationError("homogenized stack fractions must sum to 1")

    @property
    def normal_axis(self):
        return self.shape.axis

    def eps_normal_eff(self):
        return 1.0 / sum(f / m.eps_r for m, f in zip(self.layer_materials, self.layer_fractions))

    def eps_tangential_eff(self):
        return sum(f * m.eps_r for m, f in zip(self.layer_materials, self.layer_fractions))

    def eps_rel_diag(self):
        en = self.eps_normal_eff()
        et = self.eps_tangential_eff()
        d = [et, et, et]
        d[_AXES[self.normal_axis]] = en
        return tuple(d)

    def loss_split(self, e_sq_tangential, e_sq_normal, volumes):
        en = self.eps_normal_eff()
        out = {}
        for m, f in zip(self.layer_materials, self.layer_fractions):
            term = f * np.sum((e_sq_tangential + (en / m.eps_r) ** 2 * e_sq_normal) * volumes)
            out[m.name] = out.get(m.name, 0.0) + float(term)
        return out

    def materials(self):
        return {m.name: m for m in self.layer_materials}

    def scaled(self, s):
        return HomogenizedStack(self.name, self.shape.scaled(s),
                                self.layer_materials, self.layer_fractions)


def layer_stack_regions(name, axis, radius, start, materials, thicknesses,
                        lateral_center=(0.0, 0.0), direction=+1):
    """Expand a coaxial layer stack into one cylinder region per layer.

    `start` is the coordinate (along `axis`) of the stack face closest to
    vacuum; layers are listed from that face inward and extend in
    `direction` (+1 / -1).
    """
    regions = []
    pos = start
    ia = _AXES[axis]
    lat = [i for i in range(3) if i != ia]
    for i, (mat, t) in enumerate(zip(materials, thicknesses)):
        center = [0.0, 0.0, 0.0]
        center[lat[0]], center[lat[1]] = lateral_center
        center[ia] = pos + direction * t / 2
        regions.append(DielectricRegion(
            name=f"{name}-layer{i:02d}-{mat.name}",
            shape=Cylinder(tuple(center), radius, t, axis),
            material=mat,
        ))
        pos += direction * t
    return regions


def homogenize_layers(name, axis, radius, start, materials, thicknesses,
                      lateral_center=(0.0, 0.0), direction=+1):
    """Single anisotropic region equivalent to layer_stack_regions."""
    total = sum(thicknesses)
    ia = _AXES[axis]
    lat = [i for i in range(3) if i != ia]
    center = [0.0, 0.0, 0.0]
    center[lat[0]], center[lat[1]] = lateral_center
    center[ia] = start + direction * total / 2
    return HomogenizedStack(
        name=name,
        shape=Cylinder(tuple(center), radius, total, axis),
        layer_materials=tuple(materials),
        layer_fractions=tuple(t / total for t in thicknesses),
    )


# ---------------------------------------------------------------------------
# charge and scene

@dataclass(frozen=True)
class Charge:
    """Point probe charge with displacement metadata for perturbation solves."""

    q: float
    m: float
    position: tuple
    displacement_axis: tuple = (0.0, 0.0, 1.0)
    delta_zeta: float = 5e-6

    def __post_init__(self):
        n = math.sqrt(sum(c * c for c in self.displacement_axis))
        if abs(n - 1.0) > 1e-9:
            raise SceneValidationError(f"displacement_axis must be a unit vector, |v|={n}")
        if self.delta_zeta <= 0:
            raise SceneValidationError("delta_zeta must be > 0")


@dataclass(frozen=True)
class GridSpec:
    """Mesh density rules; `resolution` selects a bundled parameter set and
    individual knobs may be overridden."""

    resolution: str = "coarse"
    h_charge: float | None = None       # spacing at the charge [m]
    h_interface: float | None = None    # spacing normal to region faces [m]
    h_lateral: float | None = None      # lateral spacing at region faces [m]
    cells_per_layer: int | None = None  # min cells across a thin layer
    growth: float | None = None         # geometric growth of cell size
    h_max: float | None = None          # cap on cell size [m]
    explicit_nodes: tuple | None = None  # (nodes_x, nodes_y, nodes_z) overrides rules


@dataclass(frozen=True)
class Scene:
    charge: Charge
    regions: tuple
    domain: Box
    grid_spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        validate_scene(self)

    @property
    def min_charge_distance(self):
        if not self.regions:
            return math.inf
        return min(r.shape.distance_to(self.charge.position) for r in self.regions)

    def materials(self):
        out = {}
        for r in self.regions:
            out.update(r.materials())
        return out

    def scaled(self, s):
        """Scene with all geometry (and delta_zeta) scaled by s; validity is scale-free."""
        ch = Charge(self.charge.q, self.charge.m,
                    tuple(c * s for c in self.charge.position),
                    self.charge.displacement_axis, self.charge.delta_zeta * s)
        return Scene(ch, tuple(r.scaled(s) for r in self.regions),
                     self.domain.scaled(s), self.grid_spec)


def _bbox_gap(lo1, hi1, lo2, hi2):
    """Largest separation between two axis-aligned boxes (negative if overlapping)."""
    return max(float(np.max(lo1 - hi2)), float(np.max(lo2 - hi1)))


def _shapes_overlap(s1, s2, samples=7):
    lo1, hi1 = s1.bounding_box()
    lo2, hi2 = s2.bounding_box()
    gap = _bbox_gap(lo1, hi1, lo2, hi2)
    scale = max(np.max(hi1 - lo1), np.max(hi2 - lo2))
    if gap > -1e-12 * scale:
        return False  # disjoint or merely touching
    lo = np.maximum(lo1, lo2)
    hi = np.minimum(hi1, hi2)
    axes = [np.linspace(lo[i] + (hi[i] - lo[i]) / (2 * samples),
                        hi[i] - (hi[i] - lo[i]) / (2 * samples), samples)
            for i in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return bool(np.any(s1.contains(X, Y, Z) & s2.contains(X, Y, Z)))


def validate_scene(scene: Scene):
    ch = scene.charge
    dom = scene.domain
    pos = np.asarray(ch.position, dtype=float)

    if not bool(dom.contains(*pos)):
        raise SceneValidationError("charge position must lie strictly inside the domain")

    for r in scene.regions:
        lo, hi = r.shape.bounding_box()
        dlo = np.asarray(dom.min_corner)
        dhi = np.asarray(dom.max_corner)
        if np.any(lo <= dlo) or np.any(hi >= dhi):
            raise SceneValidationError(f"region {r.name!r} extends outside the domain")
        if bool(r.shape.contains(*pos)):
            raise SceneValidationError(f"charge lies inside region {r.name!r}")

    for i, r1 in enumerate(scene.regions):
        for r2 in scene.regions[i + 1:]:
            if _shapes_overlap(r1.shape, r2.shape):
                raise SceneValidationError(f"regions {r1.name!r} and {r2.name!r} overlap")

    d_min = scene.min_charge_distance
    if scene.regions:
        if ch.delta_zeta >= d_min / 10:
            raise SceneValidationError(
                f"delta_zeta={ch.delta_zeta:g} m must be < d_min/10 = {d_min/10:g} m")
        need = 5 * d_min * (1.0 - 1e-9)
        for i in range(3):
            lo_ext = pos[i] - dom.min_corner[i]
            hi_ext = dom.max_corner[i] - pos[i]
            if lo_ext < need or hi_ext < need:
                raise SceneValidationError(
                    f"domain too small along axis {i}: needs >= 5 x charge-region "
                    f"distance ({5 * d_min:g} m) on each side of the charge")
