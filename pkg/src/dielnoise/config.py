"""Scene documents: JSON in, validated Scene out, and back.

All lengths in documents are strings with explicit unit suffixes; see
units.py. Materials are bundled names ("SiO2") or inline definitions
{"name": ..., "eps_r": ..., "tan_delta": ...}.
"""
from __future__ import annotations

import json
from importlib import resources

import jsonschema

from .geometry import (Box, Charge, Cylinder, DielectricRegion, GridSpec,
                       Scene, SceneValidationError, homogenize_layers,
                       layer_stack_regions)
from .materials import Material, material_lookup
from .units import parse_charge, parse_length, parse_mass, parse_temperature

_SCHEMA = None


def scene_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        with resources.files("dielnoise.data").joinpath("scene.schema.json").open() as fh:
            _SCHEMA = json.load(fh)
    return _SCHEMA


def _resolve_material(spec, temperature):
    if isinstance(spec, str):
        return material_lookup(spec, temperature=temperature)
    return Material(name=spec["name"], eps_r=spec["eps_r"],
                    tan_delta=spec["tan_delta"], temperature=temperature)


def build_scene(doc: dict) -> Scene:
    """Validate a scene document against the schema and construct the Scene.

    Raises SceneValidationError on schema violations or invariant breaches,
    UnknownMaterialError for unknown material names.
    """
    try:
        jsonschema.validate(doc, scene_schema())
    except jsonschema.ValidationError as exc:
        raise SceneValidationError(f"scene document invalid: {exc.message}") from exc

    temperature = parse_temperature(doc.get("temperature", "300K"))

    ch = doc["charge"]
    charge = Charge(
        q=parse_charge(ch["q"]),
        m=parse_mass(ch["m"]),
        position=tuple(parse_length(v) for v in ch["position"]),
        displacement_axis=tuple(ch.get("displacement_axis", (0.0, 0.0, 1.0))),
        delta_zeta=parse_length(ch.get("delta_zeta", "5um")),
    )

    regions = []
    for i, r in enumerate(doc["regions"]):
        name = r.get("name", f"region{i:02d}")
        kind = r["type"]
        if kind == "cylinder":
            shape = Cylinder(center=tuple(parse_length(v) for v in r["center"]),
                             radius=parse_length(r["radius"]),
                             length=parse_length(r["length"]),
                             axis=r.get("axis", "z"))
            regions.append(DielectricRegion(name, shape,
                                            _resolve_material(r["material"], temperature)))
        elif kind == "box":
            shape = Box(min_corner=tuple(parse_length(v) for v in r["min_corner"]),
                        max_corner=tuple(parse_length(v) for v in r["max_corner"]))
            regions.append(DielectricRegion(name, shape,
                                            _resolve_material(r["material"], temperature)))
        elif kind == "stack":
            mats = [_resolve_material(l["material"], temperature) for l in r["layers"]]
            ts = [parse_length(l["thickness"]) for l in r["layers"]]
            lat = tuple(parse_length(v) for v in r.get("lateral_center", ("0m", "0m")))
            args = dict(name=name, axis=r.get("axis", "z"),
                        radius=parse_length(r["radius"]),
                        start=parse_length(r["start"]),
                        materials=mats, thicknesses=ts,
                        lateral_center=lat, direction=r.get("direction", 1))
            if r.get("homogenize", False):
                regions.append(homogenize_layers(**args))
            else:
                regions.extend(layer_stack_regions(**args))
        else:  # unreachable behind the schema
            raise SceneValidationError(f"unknown region type {kind!r}")

    dom = Box(min_corner=tuple(parse_length(v) for v in doc["domain"]["min_corner"]),
              max_corner=tuple(parse_length(v) for v in doc["domain"]["max_corner"]))

    g = doc.get("grid", {})
    grid = GridSpec(
        resolution=g.get("resolution", "coarse"),
        h_charge=parse_length(g["h_charge"]) if "h_charge" in g else None,
        h_interface=parse_length(g["h_interface"]) if "h_interface" in g else None,
        h_lateral=parse_length(g["h_lateral"]) if "h_lateral" in g else None,
        cells_per_layer=g.get("cells_per_layer"),
        growth=g.get("growth"),
        h_max=parse_length(g["h_max"]) if "h_max" in g else None,
    )
    return Scene(charge=charge, regions=tuple(regions), domain=dom, grid_spec=grid)


def load_scene(path) -> Scene:
    with open(path) as fh:
        return build_scene(json.load(fh))


def _fmt_len(v: float) -> str:
    return f"{v!r}m"


def scene_to_doc(scene: Scene) -> dict:
    """Serialize a Scene back to a document; floats use repr so that the
    round trip is bit-identical."""
    ch = scene.charge
    doc = {
        "charge": {
            "q": f"{ch.q!r}C",
            "m": f"{ch.m!r}kg",
            "position": [_fmt_len(v) for v in ch.position],
            "displacement_axis": list(ch.displacement_axis),
            "delta_zeta": _fmt_len(ch.delta_zeta),
        },
        "regions": [],
        "domain": {
            "min_corner": [_fmt_len(v) for v in scene.domain.min_corner],
            "max_corner": [_fmt_len(v) for v in scene.domain.max_corner],
        },
    }
    for r in scene.regions:
        mat = r.material if isinstance(r, DielectricRegion) else None
        if mat is None:
            raise SceneValidationError(
                "homogenized stacks serialize via their originating stack entry; "
                "build them from documents rather than serializing")
        entry = {"name": r.name,
                 "material": {"name": mat.name, "eps_r": mat.eps_r,
                              "tan_delta": mat.tan_delta}}
        s = r.shape
        if isinstance(s, Cylinder):
            entry.update(type="cylinder", axis=s.axis,
                         center=[_fmt_len(v) for v in s.center],
                         radius=_fmt_len(s.radius), length=_fmt_len(s.length))
        else:
            entry.update(type="box",
                         min_corner=[_fmt_len(v) for v in s.min_corner],
                         max_corner=[_fmt_len(v) for v in s.max_corner])
        doc["regions"].append(entry)
    gs = scene.grid_spec
    grid = {"resolution": gs.resolution}
    if gs.h_charge is not None:
        grid["h_charge"] = _fmt_len(gs.h_charge)
    if gs.h_lateral is not None:
        grid["h_lateral"] = _fmt_len(gs.h_lateral)
    if gs.h_interface is not None:
        grid["h_interface"] = _fmt_len(gs.h_interface)
    if gs.cells_per_layer is not None:
        grid["cells_per_layer"] = gs.cells_per_layer
    if gs.growth is not None:
        grid["growth"] = gs.growth
    if gs.h_max is not None:
        grid["h_max"] = _fmt_len(gs.h_max)
    doc["grid"] = grid
    tset = {m.temperature for m in scene.materials().values()}
    if len(tset) == 1:
        doc["temperature"] = f"{tset.pop()!r}K"
    return doc
