"""Dielectric material constants and the bundled lookup database."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources


class UnknownMaterialError(KeyError):
    """Raised when a material name is not in the bundled database."""


@dataclass(frozen=True)
class Material:
    """Lossy dielectric: eps_r relative permittivity, tan_delta loss tangent,
    temperature in kelvin. Immutable; safe to share across workers."""

    name: str
    eps_r: float
    tan_delta: float
    temperature: float = 300.0

    def __post_init__(self):
        if self.eps_r < 1.0:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r}")
        if self.tan_delta < 0.0:
            raise ValueError(f"tan_delta must be >= 0, got {self.tan_delta}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0 K, got {self.temperature}")

    @property
    def eps_complex(self) -> complex:
        """Relative complex permittivity eps_r * (1 + i tan_delta)."""
        return self.eps_r * (1.0 + 1j * self.tan_delta)

    def at_temperature(self, temperature: float) -> "Material":
        return replace(self, temperature=temperature)


def _load_database() -> dict:
    with resources.files("dielnoise.data").joinpath("materials.json").open() as fh:
        return json.load(fh)


_DATABASE = None


def material_lookup(name: str, temperature: float = 300.0) -> Material:
    """Return the bundled material constants for `name` at the given temperature.

    Raises UnknownMaterialError for names not in the database.
    """
    global _DATABASE
    if _DATABASE is None:
        _DATABASE = _load_database()
    try:
        entry = _DATABASE[name]
    except KeyError:
        raise UnknownMaterialError(
            f"unknown material {name!r}; bundled names: {sorted(_DATABASE)}") from None
    return Material(name=name, eps_r=entry["eps_r"], tan_delta=entry["tan_delta"],
                    temperature=temperature)
