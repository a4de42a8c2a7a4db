"""Sectioned key-value configuration files.

Format::

    # comment
    [material wood]
    conductivity = 0.15        ; W/(m K)
    density = 608              ; kg/m3
    specific_heat = 1630       ; J/(kg K)

    [assembly exterior_wall]
    layers = wood 0.025, glass_wool 0.025, concrete_block 0.2032   ; material thickness_m, outside -> inside
    exterior_film = 0.04       ; m2K/W
    interior_film = 0.13       ; m2K/W
    solar_absorptance = 0.6

    [zone kitchen]
    floor_area = 30            ; m2
    volume = 81                ; m3
    infiltration = 0.5         ; ach
    surfaces = exterior_wall 16.2 90, exterior_wall 13.5 180   ; assembly area_m2 azimuth_deg
    max_occupants = 4

    [occupancy]
    sensible_gain = 70         ; W per occupant
    latent_gain = 45           ; W per occupant

    [schedule kitchen]
    weekday = 24 comma-separated counts, used Monday-Friday
    weekend = 24 counts, used Saturday-Sunday
    ; mon ... sun override individual days

Python's configparser is not used because errors must cite the line of the
offending value, not just of syntax problems.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bridge import CouplingSpec
from .building import Building, OccupancySchedule, Surface, Zone
from .materials import Layer, Material, WallAssembly

# Comments start at a '#' or ';' that opens the line or follows whitespace.
_COMMENT = re.compile(r"(^|\s)[#;].*$")

DAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


class ConfigError(ValueError):
    pass


@dataclass
class Section:
    kind: str
    name: str
    line: int
    entries: dict[str, tuple[str, int]] = field(default_factory=dict)
    source: str = "<config>"

    def where(self, key: str | None = None) -> str:
        line = self.entries[key][1] if key in self.entries else self.line
        return f"{self.source}:{line}"

    def raw(self, key: str, default=None) -> str:
        if key in self.entries:
            return self.entries[key][0]
        if default is None:
            label = f"{self.kind} {self.name}".strip()
            raise ConfigError(f"{self.where()}: section [{label}] missing key {key!r}")
        return default

    def number(self, key: str, default: float | None = None) -> float:
        if key not in self.entries and default is not None:
            return float(default)
        text = self.raw(key)
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{self.where(key)}: {key} must be a number, got {text!r}") from None


def parse_sections(text: str, source: str = "<config>") -> list[Section]:
    sections: list[Section] = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: unterminated section header")
            parts = line[1:-1].split()
            if not parts or len(parts) > 2:
                raise ConfigError(f"{source}:{lineno}: section header must be [kind] or [kind name]")
            current = Section(parts[0], parts[1] if len(parts) == 2 else "", lineno, source=source)
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside of any section")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in current.entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        current.entries[key] = (value, lineno)
    return sections


def _items(section: Section, key: str, width: int) -> list[tuple[list[str], str]]:
    text = section.raw(key)
    out = []
    for item in (i.strip() for i in text.split(",")):
        fields = item.split()
        if len(fields) != width:
            raise ConfigError(f"{section.where(key)}: malformed {key} entry {item!r}")
        out.append((fields, item))
    return out


def _float(section: Section, key: str, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"{section.where(key)}: {token!r} is not a number") from None


def _day(section: Section, key: str) -> list[int]:
    text = section.raw(key)
    try:
        counts = [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{section.where(key)}: occupant counts must be integers") from None
    if len(counts) != 24:
        raise ConfigError(f"{section.where(key)}: expected 24 hourly counts, got {len(counts)}")
    if min(counts) < 0:
        raise ConfigError(f"{section.where(key)}: occupant counts must be >= 0")
    return counts


def _wrap(section: Section, key: str | None, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        if key is None:
            # Point at the offending key when the message names one.
            key = next((k for k in section.entries if re.search(rf"\b{re.escape(k)}\b", str(exc))), None)
        raise ConfigError(f"{section.where(key)}: {exc}") from None


def load_building(path) -> Building:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"building file not found: {path}")
    return building_from_text(path.read_text(encoding="utf-8"), str(path))


def building_from_text(text: str, source: str = "<config>") -> Building:
    sections = parse_sections(text, source)
    materials: dict[str, Material] = {}
    assemblies: dict[str, WallAssembly] = {}
    zones: list[Zone] = []
    grids: dict[str, np.ndarray] = {}
    gains = {}

    for s in sections:
        if s.kind == "material":
            materials[s.name] = _wrap(s, None, Material, s.name, s.number("conductivity"),
                                      s.number("density"), s.number("specific_heat"))
    for s in sections:
        if s.kind == "assembly":
            layers = []
            for (mat, thick), item in _items(s, "layers", 2):
                if mat not in materials:
                    raise ConfigError(f"{s.where('layers')}: unknown material {mat!r}")
                layers.append(_wrap(s, "layers", Layer, materials[mat], _float(s, "layers", thick)))
            assemblies[s.name] = _wrap(
                s, None, WallAssembly, tuple(layers),
                exterior_film=s.number("exterior_film", 0.04),
                interior_film=s.number("interior_film", 0.13),
                solar_absorptance=s.number("solar_absorptance", 0.6),
                name=s.name,
            )
    for s in sections:
        if s.kind == "zone":
            surfaces = []
            for (asm, area, az), item in _items(s, "surfaces", 3):
                if asm not in assemblies:
                    raise ConfigError(f"{s.where('surfaces')}: unknown assembly {asm!r}")
                surfaces.append(_wrap(s, "surfaces", Surface, asm, _float(s, "surfaces", area),
                                      _float(s, "surfaces", az)))
            zones.append(_wrap(s, None, Zone, s.name, s.number("floor_area"), s.number("volume"),
                               s.number("infiltration", 0.5), tuple(surfaces),
                               int(s.number("max_occupants", 4))))
        elif s.kind == "schedule":
            rows = {}
            if "weekday" in s.entries:
                rows.update({d: _day(s, "weekday") for d in DAYS[:5]})
            if "weekend" in s.entries:
                rows.update({d: _day(s, "weekend") for d in DAYS[5:]})
            for d in DAYS:
                if d in s.entries:
                    rows[d] = _day(s, d)
            absent = [d for d in DAYS if d not in rows]
            if absent:
                raise ConfigError(f"{s.where()}: schedule {s.name!r} has no counts for {', '.join(absent)}")
            grids[s.name] = np.array([rows[d] for d in DAYS])
        elif s.kind == "occupancy":
            gains = {"sensible_gain": s.number("sensible_gain", 70.0),
                     "latent_gain": s.number("latent_gain", 45.0)}
        elif s.kind not in ("material", "assembly"):
            raise ConfigError(f"{s.where()}: unknown section kind {s.kind!r}")

    if not zones:
        raise ConfigError(f"{source}: no [zone ...] sections")
    for z in zones:
        grids.setdefault(z.name, np.zeros((7, 24), dtype=int))
    extra = set(grids) - {z.name for z in zones}
    if extra:
        raise ConfigError(f"{source}: schedule for unknown zone(s) {', '.join(sorted(extra))}")
    try:
        return Building(tuple(zones), OccupancySchedule(grids, **gains), assemblies)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _g(v: float) -> str:
    return repr(float(v))


def dump_building(building: Building) -> str:
    """Serialise a building in the format read by :func:`building_from_text`."""
    out = []
    materials = {}
    for asm in building.assemblies.values():
        for layer in asm.layers:
            materials[layer.material.name] = layer.material
    for m in materials.values():
        out += [f"[material {m.name}]", f"conductivity = {_g(m.conductivity)}",
                f"density = {_g(m.density)}", f"specific_heat = {_g(m.specific_heat)}", ""]
    for name, asm in building.assemblies.items():
        layers = ", ".join(f"{l.material.name} {_g(l.thickness)}" for l in asm.layers)
        out += [f"[assembly {name}]", f"layers = {layers}", f"exterior_film = {_g(asm.exterior_film)}",
                f"interior_film = {_g(asm.interior_film)}",
                f"solar_absorptance = {_g(asm.solar_absorptance)}", ""]
    for z in building.zones:
        surfaces = ", ".join(f"{s.assembly} {_g(s.area)} {_g(s.azimuth)}" for s in z.surfaces)
        out += [f"[zone {z.name}]", f"floor_area = {_g(z.floor_area)}", f"volume = {_g(z.volume)}",
                f"infiltration = {_g(z.infiltration)}", f"surfaces = {surfaces}",
                f"max_occupants = {z.max_occupants}", ""]
    s = building.schedule
    out += ["[occupancy]", f"sensible_gain = {_g(s.sensible_gain)}", f"latent_gain = {_g(s.latent_gain)}", ""]
    for z in building.zones:
        grid = s.grid(z.name)
        out.append(f"[schedule {z.name}]")
        out += [f"{d} = {','.join(str(int(c)) for c in grid[i])}" for i, d in enumerate(DAYS)]
        out.append("")
    return "\n".join(out)


def load_coupling(path) -> CouplingSpec:
    """Read a ``[coupling]`` file; relative template paths resolve next to it."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"coupling spec not found: {path}")
    sections = [s for s in parse_sections(path.read_text(encoding="utf-8"), str(path)) if s.kind == "coupling"]
    if len(sections) != 1:
        raise ConfigError(f"{path}: expected exactly one [coupling] section")
    s = sections[0]
    template = Path(s.raw("template"))
    if not template.is_absolute():
        template = path.parent / template
    if not template.is_file():
        raise FileNotFoundError(f"{s.where('template')}: template not found: {template}")
    strict = s.raw("strict_unused", "false").lower()
    if strict not in ("true", "false"):
        raise ConfigError(f"{s.where('strict_unused')}: strict_unused must be true or false")
    return _wrap(s, None, CouplingSpec,
                 template_path=template,
                 rendered_input_path=s.raw("input"),
                 command=s.raw("command"),
                 output_path=s.raw("output"),
                 objective_key=s.raw("objective_key", "PMV_total"),
                 timeout=s.number("timeout", 600.0),
                 strict_unused=strict == "true")
