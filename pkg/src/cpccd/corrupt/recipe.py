"""Corruption recipe: tunable knobs plus pinned parameter values.

Plain ``key = value`` lines, ``#`` comments::

    phi = 0.1                 # fraction of points hit by D_JT
    r_occ_factor = 2.0        # occlusion radius / mean NN spacing
    primitive_scale = 0.25    # shape size / largest object extent
    wall_density = 1.0        # background density / object density
    wall_max_points = 4096
    floor_frame = -0.5, 0.5   # vertical reference extent for the BI_F trigger
    occluder_samples = 256
    T_R.theta = 0, 0, 0       # pin a parameter instead of sampling it
    I_S.s = 1
    R_CC.S = I_S, T_R
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from cpccd.corrupt.spec import DEFAULT_PHI, CorruptionKind
from cpccd.errors import FormatError

_PARAM_FIELDS = {
    "N_o": ("n_objects", int),
    "N_p": ("n_points", Fraction),
    "N_s": ("n_shapes", int),
    "N_d": ("distance", float),
    "J_a": ("jitter", float),
    "T_d": ("trail", float),
    "phi": ("phi", float),
    "theta": ("theta", lambda v: tuple(float(x) for x in v.split(","))),
    "s": ("scale", float),
    "S": ("subset", lambda v: tuple(CorruptionKind.parse(x) for x in v.split(","))),
}


@dataclass
class Recipe:
    phi: float = DEFAULT_PHI
    r_occ_factor: float = 2.0
    primitive_scale: float = 0.25
    wall_density: float = 1.0
    wall_max_points: int = 4096
    floor_frame: tuple[float, float] = (-0.5, 0.5)
    floor_margin: float = 0.1
    occluder_samples: int = 256
    placement_attempts: int = 48
    fixed: dict = field(default_factory=dict)

    def pin(self, kind: CorruptionKind | str, **values) -> Recipe:
        self.fixed.setdefault(CorruptionKind(kind), {}).update(values)
        return self


_KNOBS = {
    "phi": float,
    "r_occ_factor": float,
    "primitive_scale": float,
    "wall_density": float,
    "wall_max_points": int,
    "floor_frame": lambda v: tuple(float(x) for x in v.split(",")),
    "floor_margin": float,
    "occluder_samples": int,
    "placement_attempts": int,
}


def parse_recipe(text: str, source: str = "<recipe>") -> Recipe:
    recipe = Recipe()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if "." in key:
                kind_name, param = key.split(".", 1)
                kind = CorruptionKind.parse(kind_name)
                name, conv = _PARAM_FIELDS[param]
                recipe.pin(kind, **{name: conv(value)})
            elif key in _KNOBS:
                setattr(recipe, key, _KNOBS[key](value))
            else:
                raise KeyError(key)
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"{source}:{lineno}: bad entry {key!r} ({exc})") from exc
    return recipe


def load_recipe(path) -> Recipe:
    path = Path(path)
    return parse_recipe(path.read_text(), str(path))
