"""Wall materials, layer stacks and steady-state resistance arithmetic."""

from __future__ import annotations

from dataclasses import dataclass, replace

MIN_THICKNESS = 0.001  # m
MAX_THICKNESS = 1.0  # m

DEFAULT_EXTERIOR_FILM = 0.04  # m2K/W
DEFAULT_INTERIOR_FILM = 0.13  # m2K/W
DEFAULT_SOLAR_ABSORPTANCE = 0.6


@dataclass(frozen=True)
class Material:
    name: str
    conductivity: float  # W/(m K)
    density: float  # kg/m3
    specific_heat: float  # J/(kg K)

    def __post_init__(self):
        for field in ("conductivity", "density", "specific_heat"):
            value = getattr(self, field)
            if not value > 0:
                raise ValueError(f"material {self.name!r}: {field} must be > 0, got {value}")


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness: float  # m

    def __post_init__(self):
        check_thickness(self.thickness)

    @property
    def resistance(self) -> float:
        return self.thickness / self.material.conductivity


@dataclass(frozen=True)
class WallAssembly:
    """Ordered layer stack, outside to inside, plus surface films.

    Instances are immutable; use :func:`with_layer_thickness` to derive a
    variant with one layer resized.
    """

    layers: tuple[Layer, ...]
    exterior_film: float = DEFAULT_EXTERIOR_FILM
    interior_film: float = DEFAULT_INTERIOR_FILM
    solar_absorptance: float = DEFAULT_SOLAR_ABSORPTANCE
    name: str = "wall"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a wall assembly needs at least one layer")
        if self.exterior_film < 0 or self.interior_film < 0:
            raise ValueError("film resistances must be >= 0")
        if not 0.0 <= self.solar_absorptance <= 1.0:
            raise ValueError(f"solar absorptance must lie in [0, 1], got {self.solar_absorptance}")

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def index_of(self, material_name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.material.name == material_name:
                return i
        raise KeyError(f"no layer made of {material_name!r} in assembly {self.name!r}")

    def __add__(self, other: WallAssembly) -> WallAssembly:
        # Concatenation keeps this assembly's films and absorptance.
        return replace(self, layers=self.layers + other.layers)


def check_thickness(thickness: float) -> float:
    if not MIN_THICKNESS <= thickness <= MAX_THICKNESS:
        raise ValueError(
            f"layer thickness {thickness} m outside [{MIN_THICKNESS}, {MAX_THICKNESS}] m"
        )
    return thickness


WOOD = Material("wood", conductivity=0.15, density=608.0, specific_heat=1630.0)
GLASS_WOOL = Material("glass_wool", conductivity=0.04, density=11.0, specific_heat=800.0)
CONCRETE_BLOCK = Material("concrete_block", conductivity=1.11, density=800.0, specific_heat=920.0)

# Index of each optimisable layer in the baseline stack.
LAYER_INDEX = {"wood": 0, "insulation": 1, "concrete": 2}


def baseline_reunion_wall(
    exterior_film: float = DEFAULT_EXTERIOR_FILM,
    interior_film: float = DEFAULT_INTERIOR_FILM,
    solar_absorptance: float = DEFAULT_SOLAR_ABSORPTANCE,
) -> WallAssembly:
    """Wood / glass wool / concrete block exterior wall, outside to inside."""
    return WallAssembly(
        layers=(
            Layer(WOOD, 0.025),
            Layer(GLASS_WOOL, 0.025),
            Layer(CONCRETE_BLOCK, 0.2032),
        ),
        exterior_film=exterior_film,
        interior_film=interior_film,
        solar_absorptance=solar_absorptance,
        name="exterior_wall",
    )


def conduction_resistance(assembly: WallAssembly) -> float:
    """Sum of layer resistances in m2K/W, films excluded."""
    return sum(layer.resistance for layer in assembly.layers)


def total_resistance(assembly: WallAssembly) -> float:
    return assembly.exterior_film + conduction_resistance(assembly) + assembly.interior_film


def u_value(assembly: WallAssembly) -> float:
    r = total_resistance(assembly)
    if r <= 0:
        raise ZeroDivisionError("total thermal resistance is zero")
    return 1.0 / r


def with_layer_thickness(assembly: WallAssembly, layer_index: int, thickness: float) -> WallAssembly:
    """Return a copy of `assembly` with one layer's thickness replaced."""
    if not 0 <= layer_index < len(assembly.layers):
        raise IndexError(
            f"layer index {layer_index} out of range for {len(assembly.layers)} layers"
        )
    check_thickness(thickness)
    layers = list(assembly.layers)
    layers[layer_index] = replace(layers[layer_index], thickness=thickness)
    return replace(assembly, layers=tuple(layers))
