"""Corruption kinds, parameter domains and seeded parameter sampling."""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from fractions import Fraction

from cpccd.errors import DomainError, InvalidArgument
from cpccd.pcgeom.rng import RngStream


class CorruptionKind(str, enum.Enum):
    E_OI = "E_OI"
    BI_W = "BI_W"
    BI_F = "BI_F"
    O_BOO = "O_BOO"
    D_JT = "D_JT"
    T_R = "T_R"
    I_S = "I_S"
    R_CC = "R_CC"

    @property
    def short(self) -> str:
        return self.value.replace("_", "").lower()

    @classmethod
    def parse(cls, name: str) -> CorruptionKind:
        key = name.strip().replace("_", "").lower()
        for k in cls:
            if k.short == key:
                return k
        raise InvalidArgument(f"unknown corruption kind {name!r}")


ALL_KINDS = tuple(CorruptionKind)
# members R_CC may combine
COMBINABLE = tuple(k for k in CorruptionKind if k is not CorruptionKind.R_CC)
# application order inside R_CC: transforms first, clutter last
RCC_ORDER = (
    CorruptionKind.I_S, CorruptionKind.T_R, CorruptionKind.D_JT, CorruptionKind.O_BOO,
    CorruptionKind.E_OI, CorruptionKind.BI_W, CorruptionKind.BI_F,
)

N_SHAPES = 12
EOI_OBJECTS = (1, 2, 3)
EOI_POINTS = (Fraction(1, 16), Fraction(1, 12), Fraction(1, 8), Fraction(1, 4))
EOI_DISTANCE = (0.05, 0.2)
BIW_DISTANCE = (0.01, 0.05)
OBOO_OBJECTS = (1, 2, 3, 4)
OBOO_POINTS = tuple(Fraction(1, d) for d in (8, 7, 6, 5, 4, 3))
OBOO_DISTANCE = (0.05, 0.2)
JITTER = (0.01, 0.05)
TRAIL = (0.02, 0.04)
THETA = (0.0, 10.0)
SCALE = (0.25, 2.0)
SUBSET_SIZE = (2, 7)
DEFAULT_PHI = 0.1


@dataclass(frozen=True)
class CorruptionSpec:
    """A corruption kind with every parameter it uses resolved.

    Fields not used by ``kind`` stay ``None``. For ``R_CC``, ``subset`` lists
    the combined kinds in application order and ``sub_specs`` their resolved
    specs in the same order.
    """

    kind: CorruptionKind
    n_objects: int | None = None
    n_points: Fraction | None = None
    n_shapes: int | None = None
    distance: float | None = None
    jitter: float | None = None
    trail: float | None = None
    phi: float | None = None
    theta: tuple[float, float, float] | None = None
    scale: float | None = None
    subset: tuple[CorruptionKind, ...] | None = None
    sub_specs: tuple[CorruptionSpec, ...] | None = None

    def sub_spec(self, kind: CorruptionKind) -> CorruptionSpec:
        for s in self.sub_specs or ():
            if s.kind is kind:
                return s
        raise KeyError(kind)

    def params(self) -> dict[str, str]:
        """Ordered ``name -> text`` view, as written to manifests and sidecars."""
        out = {}
        if self.n_objects is not None:
            out["N_o"] = str(self.n_objects)
        if self.n_points is not None:
            out["N_p"] = str(self.n_points)
        if self.n_shapes is not None:
            out["N_s"] = str(self.n_shapes)
        if self.distance is not None:
            out["N_d"] = repr(self.distance)
        if self.jitter is not None:
            out["J_a"] = repr(self.jitter)
        if self.trail is not None:
            out["T_d"] = repr(self.trail)
        if self.phi is not None:
            out["phi"] = repr(self.phi)
        if self.theta is not None:
            out["theta"] = ",".join(repr(t) for t in self.theta)
        if self.scale is not None:
            out["s"] = repr(self.scale)
        if self.subset is not None:
            out["S"] = ",".join(k.value for k in self.subset)
            for sub in self.sub_specs or ():
                for name, value in sub.params().items():
                    out[f"{sub.kind.value}.{name}"] = value
        return out

    def params_text(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.params().items())


def round_half_up(x: Fraction | float) -> int:
    """Round to nearest integer, halves upward (exact for Fractions)."""
    x = Fraction(x)
    return int((x + Fraction(1, 2)).__floor__())


def _in(value, lo, hi):
    return value is not None and lo <= value <= hi


def validate(spec: CorruptionSpec) -> CorruptionSpec:
    """Raise ``DomainError`` unless every parameter sits in its domain."""
    k = spec.kind
    bad = []
    if k is CorruptionKind.E_OI:
        if spec.n_objects not in EOI_OBJECTS:
            bad.append(f"N_o={spec.n_objects}")
        if spec.n_points not in EOI_POINTS:
            bad.append(f"N_p={spec.n_points}")
        if spec.n_shapes != N_SHAPES:
            bad.append(f"N_s={spec.n_shapes}")
        if not _in(spec.distance, *EOI_DISTANCE):
            bad.append(f"N_d={spec.distance}")
    elif k is CorruptionKind.BI_W:
        if not _in(spec.distance, *BIW_DISTANCE):
            bad.append(f"N_d={spec.distance}")
    elif k is CorruptionKind.O_BOO:
        if spec.n_objects not in OBOO_OBJECTS:
            bad.append(f"N_o={spec.n_objects}")
        if spec.n_points not in OBOO_POINTS:
            bad.append(f"N_p={spec.n_points}")
        if spec.n_shapes != N_SHAPES:
            bad.append(f"N_s={spec.n_shapes}")
        if not _in(spec.distance, *OBOO_DISTANCE):
            bad.append(f"N_d={spec.distance}")
    elif k is CorruptionKind.D_JT:
        if not _in(spec.jitter, *JITTER):
            bad.append(f"J_a={spec.jitter}")
        if not _in(spec.trail, *TRAIL):
            bad.append(f"T_d={spec.trail}")
        if not _in(spec.phi, 0.0, 1.0):
            bad.append(f"phi={spec.phi}")
    elif k is CorruptionKind.T_R:
        if spec.theta is None or len(spec.theta) != 3 or not all(_in(t, *THETA) for t in spec.theta):
            bad.append(f"theta={spec.theta}")
    elif k is CorruptionKind.I_S:
        if not _in(spec.scale, *SCALE):
            bad.append(f"s={spec.scale}")
    elif k is CorruptionKind.R_CC:
        subset = spec.subset or ()
        if not SUBSET_SIZE[0] <= len(subset) <= SUBSET_SIZE[1]:
            bad.append(f"|S|={len(subset)}")
        if len(set(subset)) != len(subset) or any(s not in COMBINABLE for s in subset):
            bad.append(f"S={subset}")
        if tuple(s.kind for s in spec.sub_specs or ()) != tuple(subset):
            bad.append("sub_specs do not match S")
        for sub in spec.sub_specs or ():
            validate(sub)
    if bad:
        raise DomainError(f"{k.value}: parameters out of domain: {', '.join(bad)}")
    return spec


def _draw(kind: CorruptionKind, rng: RngStream, phi: float) -> CorruptionSpec:
    if kind is CorruptionKind.E_OI:
        return CorruptionSpec(
            kind,
            n_objects=int(rng.choice(EOI_OBJECTS)),
            n_points=EOI_POINTS[int(rng.integers(len(EOI_POINTS)))],
            n_shapes=N_SHAPES,
            distance=float(rng.uniform(*EOI_DISTANCE)),
        )
    if kind is CorruptionKind.BI_W:
        return CorruptionSpec(kind, distance=float(rng.uniform(*BIW_DISTANCE)))
    if kind is CorruptionKind.BI_F:
        return CorruptionSpec(kind)
    if kind is CorruptionKind.O_BOO:
        return CorruptionSpec(
            kind,
            n_objects=int(rng.choice(OBOO_OBJECTS)),
            n_points=OBOO_POINTS[int(rng.integers(len(OBOO_POINTS)))],
            n_shapes=N_SHAPES,
            distance=float(rng.uniform(*OBOO_DISTANCE)),
        )
    if kind is CorruptionKind.D_JT:
        return CorruptionSpec(
            kind,
            jitter=float(rng.uniform(*JITTER)),
            trail=float(rng.uniform(*TRAIL)),
            phi=float(phi),
        )
    if kind is CorruptionKind.T_R:
        return CorruptionSpec(kind, theta=tuple(float(t) for t in rng.uniform(*THETA, size=3)))
    if kind is CorruptionKind.I_S:
        return CorruptionSpec(kind, scale=float(rng.uniform(*SCALE)))
    raise AssertionError(kind)


def sample_params(kind: CorruptionKind | str, rng: RngStream, recipe=None) -> CorruptionSpec:
    """Draw a fully resolved spec for ``kind``.

    Discrete parameters are uniform over their listed values, continuous ones
    uniform over their interval. ``R_CC`` draws ``|S|`` uniformly from 2..7,
    then a uniform subset of that size, then each member's parameters from a
    child stream named after the member. Fixed values from ``recipe``
    override the draws.
    """
    from cpccd.corrupt.recipe import Recipe

    kind = CorruptionKind(kind)
    recipe = recipe or Recipe()
    if kind is CorruptionKind.R_CC:
        fixed_subset = recipe.fixed.get(CorruptionKind.R_CC, {}).get("subset")
        if fixed_subset is not None:
            members = set(fixed_subset)
        else:
            size = int(rng.integers(SUBSET_SIZE[0], SUBSET_SIZE[1] + 1))
            picks = rng.choice(len(COMBINABLE), size=size, replace=False)
            members = {COMBINABLE[int(i)] for i in picks}
        subset = tuple(k for k in RCC_ORDER if k in members)
        subs = tuple(sample_params(k, rng.child(k.value), recipe) for k in subset)
        spec = CorruptionSpec(kind, subset=subset, sub_specs=subs)
    else:
        spec = _draw(kind, rng, recipe.phi)
        overrides = recipe.fixed.get(kind)
        if overrides:
            spec = dataclasses.replace(spec, **overrides)
    return validate(spec)
