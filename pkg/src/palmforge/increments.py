"""Stationary-increment displacement fields.

A field is only ever materialized at finitely many locations (the atoms
of a configuration plus whatever an identity check needs): every formula
downstream evaluates the path at atoms and shifted atoms, so there is no
path object.  Each sampler draws a jointly consistent table anchored at
``B_0 = 0``.

Samplers carry a ``mass`` so a field law can represent a finite measure
of total mass other than one (the sampled table is tagged with it and
batch weights multiply by it on perturbation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatchError
from .groups import GroupDomain, GroupKind
from .configs import DisplacementTable

__all__ = [
    "ZeroField",
    "NegationField",
    "LinearDrift",
    "TwoSidedBrownian",
    "IidWalk",
    "HeavyTailWalk",
    "UniformCyclic",
    "sample_field",
    "shift_table",
    "sublinear_diagnostic",
    "parse_field_spec",
]


@dataclass(frozen=True)
class ZeroField:
    """B = 0 identically; the identity perturbation on any group."""

    mass: float = 1.0
    pointwise_non_atomic = False

    def supports(self, domain: GroupDomain) -> bool:
        return True

    def label(self) -> str:
        return "zero"


@dataclass(frozen=True)
class NegationField:
    """B_x = -x on any group; collapses every configuration onto zero."""

    mass: float = 1.0
    pointwise_non_atomic = False

    def supports(self, domain: GroupDomain) -> bool:
        return True

    def label(self) -> str:
        return "negation"


@dataclass(frozen=True)
class LinearDrift:
    """B_t = c*t on the real line, |c| < 1; deterministic, used for exact
    (non-statistical) identity checks."""

    c: float
    mass: float = 1.0
    pointwise_non_atomic = False

    def __post_init__(self):
        if not abs(self.c) < 1:
            raise ValueError("drift slope must satisfy |c| < 1")

    def supports(self, domain: GroupDomain) -> bool:
        return domain.kind is GroupKind.REAL_LINE

    def label(self) -> str:
        return f"drift:c={self.c:g}"


@dataclass(frozen=True)
class TwoSidedBrownian:
    """Two-sided Wiener path on the real line, scale ``sigma``.

    Increments over a gap g are independent N(0, sigma^2 * g),
    accumulated outward from the anchor B_0 = 0 on each side (right side
    first).  The only pointwise non-atomic sampler, hence the one that
    preserves simplicity.
    """

    sigma: float
    mass: float = 1.0
    pointwise_non_atomic = True

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def supports(self, domain: GroupDomain) -> bool:
        return domain.kind is GroupKind.REAL_LINE

    def label(self) -> str:
        return f"brownian:sigma={self.sigma:g}"


@dataclass(frozen=True)
class IidWalk:
    """Two-sided lattice walk with i.i.d. Poisson(``step_mean``) unit steps."""

    step_mean: float
    mass: float = 1.0
    pointwise_non_atomic = False

    def __post_init__(self):
        if self.step_mean < 0:
            raise ValueError("step mean must be nonnegative")

    def supports(self, domain: GroupDomain) -> bool:
        return domain.kind is GroupKind.INTEGER_LATTICE

    def label(self) -> str:
        return f"iidwalk:mean={self.step_mean:g}"

    def draw_steps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.poisson(self.step_mean, n).astype(np.int64)


@dataclass(frozen=True)
class HeavyTailWalk:
    """Strictly increasing lattice walk with infinite-mean steps.

    Unit steps are ceil of a Pareto(alpha) variable with scale 1, so each
    step is an integer >= 1 and E[step] = +infinity for alpha <= 1.
    """

    alpha: float
    mass: float = 1.0
    pointwise_non_atomic = False

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    def supports(self, domain: GroupDomain) -> bool:
        return domain.kind is GroupKind.INTEGER_LATTICE

    def label(self) -> str:
        return f"heavytail:alpha={self.alpha:g}"

    def draw_steps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        return np.ceil((1.0 - u) ** (-1.0 / self.alpha)).astype(np.int64)


@dataclass(frozen=True)
class UniformCyclic:
    """Independent uniform displacements on a cyclic group, B_0 = 0.

    On a finite group, i.i.d. uniform marginals off zero have exactly
    stationary increments: conditioning on B_t, the shifted increments
    B_{t+s} - B_t are again i.i.d. uniform.  This is the random field
    used for compact-group scenarios.
    """

    mass: float = 1.0
    pointwise_non_atomic = False  # uniform on a finite group is atomic

    def supports(self, domain: GroupDomain) -> bool:
        return domain.kind is GroupKind.CYCLIC

    def label(self) -> str:
        return "uniform"


def sample_field(sampler, domain: GroupDomain, locations, rng: np.random.Generator,
                 ) -> DisplacementTable:
    """Draw one jointly consistent field table at the given locations.

    Locations must be sorted, distinct, and contain zero.  Deterministic
    samplers consume no randomness, so pipelines that differ only by a
    deterministic field share all other draws.
    """
    if not sampler.supports(domain):
        raise DomainMismatchError(f"{sampler.label()} does not support {domain.label()}")
    locs = np.asarray(locations)
    if locs.ndim != 1 or len(locs) == 0 or np.any(np.diff(locs) <= 0):
        raise ValueError("locations must be a sorted, distinct, nonempty 1-d array")
    zero = domain.zero()
    i0 = np.searchsorted(locs, zero)
    if i0 >= len(locs) or locs[i0] != zero:
        raise ValueError("locations must contain zero")

    if isinstance(sampler, ZeroField):
        disp = np.zeros(len(locs), dtype=locs.dtype)
    elif isinstance(sampler, NegationField):
        disp = domain.negate(locs)
    elif isinstance(sampler, LinearDrift):
        disp = sampler.c * locs
    elif isinstance(sampler, TwoSidedBrownian):
        disp = np.zeros(len(locs))
        right = locs[i0:]  # starts at 0
        if len(right) > 1:
            gaps = np.diff(right)
            disp[i0 + 1:] = np.cumsum(rng.normal(0.0, sampler.sigma * np.sqrt(gaps)))
        left = locs[: i0 + 1][::-1]  # starts at 0, walks leftward
        if len(left) > 1:
            gaps = -np.diff(left)
            disp[:i0] = np.cumsum(rng.normal(0.0, sampler.sigma * np.sqrt(gaps)))[::-1]
    elif isinstance(sampler, (IidWalk, HeavyTailWalk)):
        disp = np.zeros(len(locs), dtype=np.int64)
        hi = int(locs[-1])
        if hi > 0:
            walk = np.cumsum(sampler.draw_steps(rng, hi))
            disp[i0 + 1:] = walk[locs[i0 + 1:] - 1]
        lo = int(locs[0])
        if lo < 0:
            walk = np.cumsum(sampler.draw_steps(rng, -lo))
            disp[:i0] = -walk[-locs[:i0] - 1]
    elif isinstance(sampler, UniformCyclic):
        disp = rng.integers(0, domain.order, size=len(locs))
        disp[i0] = 0
    else:
        raise TypeError(f"unknown sampler {sampler!r}")

    disp = np.asarray(disp)
    disp.setflags(write=False)
    locs = locs.copy()
    locs.setflags(write=False)
    return DisplacementTable(domain, locs, disp, mass=sampler.mass)


def shift_table(d: DisplacementTable, t) -> DisplacementTable:
    """The increment view from ``t``:  s  |->  d(t+s) - d(t).

    Output locations are u - t for every tabulated u; the entry (0, 0)
    is present by construction since d contains t.
    """
    dt = d.at(t)  # raises IncompleteTableError if t is not tabulated
    domain = d.domain
    if domain.kind is GroupKind.CYCLIC:
        locs = (d.locations - t) % domain.order
        disps = (d.displacements - dt) % domain.order
        order = np.argsort(locs, kind="stable")
        locs, disps = locs[order], disps[order]
    else:
        locs = d.locations - t
        disps = d.displacements - dt
    locs.setflags(write=False)
    disps.setflags(write=False)
    return DisplacementTable(domain, locs, disps, mass=d.mass)


def sublinear_diagnostic(sampler, domain: GroupDomain, radius, n: int,
                         rng: np.random.Generator, grid_points: int = 8) -> float:
    """Monte Carlo gauge of the growth rate max |B_t| / |t| far out.

    Samples the field at +/- ``grid_points`` locations with |t| in
    [radius/2, radius], takes the per-path maximum of |B_t|/|t| and
    averages over ``n`` paths.  Deterministic samplers return their exact
    slope.  Perturbation scenarios on non-compact groups require a value
    below one.
    """
    if isinstance(sampler, ZeroField):
        return 0.0
    if isinstance(sampler, LinearDrift):
        return abs(sampler.c)
    if isinstance(sampler, NegationField):
        return 1.0
    if domain.kind is GroupKind.CYCLIC:
        raise DomainMismatchError("sub-linear growth is a non-compact notion")
    if domain.kind is GroupKind.REAL_LINE:
        pos = np.linspace(radius / 2.0, radius, grid_points)
    else:
        pos = np.unique(np.round(np.linspace(radius / 2.0, radius, grid_points)).astype(np.int64))
        pos = pos[pos > 0]
    locs = np.concatenate((-pos[::-1], [domain.zero()], pos))
    if domain.kind is GroupKind.INTEGER_LATTICE:
        locs = locs.astype(np.int64)
    total = 0.0
    for _ in range(n):
        table = sample_field(sampler, domain, locs, rng)
        nz = table.locations != 0
        ratios = np.abs(table.displacements[nz]) / np.abs(table.locations[nz])
        total += float(ratios.max())
    return total / n


def parse_field_spec(spec: str):
    """Parse a CLI field spec like ``brownian:sigma=0.5,mass=2``."""
    name, _, rest = spec.partition(":")
    kwargs = {}
    if rest:
        for part in rest.split(","):
            key, _, value = part.partition("=")
            if not value:
                raise ValueError(f"malformed field option {part!r} in {spec!r}")
            kwargs[key.strip()] = float(value)
    name = name.strip().lower()
    mass = kwargs.pop("mass", 1.0)
    if name == "zero":
        return ZeroField(mass=mass, **kwargs)
    if name == "negation":
        return NegationField(mass=mass, **kwargs)
    if name == "drift":
        return LinearDrift(c=kwargs.pop("c"), mass=mass, **kwargs)
    if name == "brownian":
        return TwoSidedBrownian(sigma=kwargs.pop("sigma"), mass=mass, **kwargs)
    if name == "iidwalk":
        return IidWalk(step_mean=kwargs.pop("mean"), mass=mass, **kwargs)
    if name == "heavytail":
        return HeavyTailWalk(alpha=kwargs.pop("alpha"), mass=mass, **kwargs)
    if name == "uniform":
        return UniformCyclic(mass=mass, **kwargs)
    raise ValueError(f"unknown field kind {name!r}")
