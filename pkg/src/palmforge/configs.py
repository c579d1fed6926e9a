"""Windowed counting-measure configurations and the operators on them.

A ``PointConfig`` is a finite truncation of an ideal infinite counting
measure: sorted atom locations with positive weights inside an
observation window.  Operations never fabricate atoms outside the stored
window; boundary bias is the harness's problem (functionals are evaluated
on a core sub-window only, see :mod:`palmforge.verify`).

On the real line two displaced atoms count as "the same location" iff
they differ by at most ``MERGE_TOL``.  Diffusive perturbations produce
exact collisions with probability zero, so the tolerance only guards
floating-point noise; it is surfaced in the CLI as ``--merge-tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IncompleteTableError,
    InsufficientWindowError,
    SimplicityError,
)
from .groups import GroupDomain, GroupKind, Window

__all__ = [
    "MERGE_TOL",
    "PointConfig",
    "DisplacementTable",
    "point_config",
    "displacement_table",
    "translate",
    "perturb",
    "collision_count",
    "neighbors_of_zero",
    "voronoi_zero_volume",
    "config_to_json",
    "config_from_json",
]

#: Real-line merge tolerance: displaced atoms closer than this collide.
MERGE_TOL = 1e-9


def _location_dtype(domain: GroupDomain):
    return np.float64 if domain.kind is GroupKind.REAL_LINE else np.int64


@dataclass(frozen=True, eq=False)
class PointConfig:
    """Sorted atoms with positive weights inside a window.

    ``locations`` is strictly increasing (residues on cyclic groups);
    co-located mass has been merged into a single entry.  Instances are
    immutable; the arrays must not be written to.
    """

    domain: GroupDomain
    window: Window
    locations: np.ndarray
    weights: np.ndarray

    @property
    def n_atoms(self) -> int:
        return len(self.locations)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def is_simple(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def atoms(self) -> list[tuple]:
        return [
            (loc.item(), w.item()) for loc, w in zip(self.locations, self.weights)
        ]

    def same_atoms(self, other: "PointConfig", tol: float = 0.0) -> bool:
        """Atom-for-atom, weight-for-weight equality up to ``tol``."""
        if self.n_atoms != other.n_atoms:
            return False
        if tol == 0.0:
            return bool(
                np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights)
            )
        return bool(
            np.all(np.abs(self.locations - other.locations) <= tol)
            and np.all(np.abs(self.weights - other.weights) <= tol)
        )


def _merge_sorted(domain, locations, weights, merge_tol):
    """Merge consecutive co-located atoms of a sorted location array."""
    if len(locations) == 0:
        return locations, weights
    if domain.kind is GroupKind.REAL_LINE:
        new_group = np.diff(locations) > merge_tol
    else:
        new_group = np.diff(locations) != 0
    if new_group.all():
        return locations, weights
    # Group ids: 0 for the first atom, +1 whenever a gap opens.
    group = np.concatenate(([0], np.cumsum(new_group)))
    n_groups = group[-1] + 1
    merged_locs = locations[np.concatenate(([True], new_group))]
    merged_wts = np.bincount(group, weights=weights, minlength=n_groups)
    return merged_locs, merged_wts


def point_config(domain: GroupDomain, window: Window, atoms, *,
                 merge_tol: float = MERGE_TOL) -> PointConfig:
    """Build a normalized configuration from (location, weight) pairs.

    Atoms are sorted, co-located mass is merged (exactly on discrete
    groups, within ``merge_tol`` on the real line), and invariants are
    checked: locations inside the window, weights positive.
    """
    if domain != window.domain:
        raise ValueError("window belongs to a different domain")
    dtype = _location_dtype(domain)
    if isinstance(atoms, tuple) and len(atoms) == 2 and isinstance(atoms[0], np.ndarray):
        locs = np.asarray(atoms[0], dtype=dtype)
        wts = np.asarray(atoms[1], dtype=np.float64)
    else:
        pairs = list(atoms)
        locs = np.array([p[0] for p in pairs], dtype=dtype)
        wts = np.array([p[1] for p in pairs], dtype=np.float64)
    if domain.kind is GroupKind.CYCLIC:
        locs = locs % domain.order
    order = np.argsort(locs, kind="stable")
    locs, wts = locs[order], wts[order]
    locs, wts = _merge_sorted(domain, locs, wts, merge_tol)
    if np.any(wts <= 0):
        raise ValueError("atom weights must be positive")
    if len(locs) and not (window.contains(locs[0]) and window.contains(locs[-1])):
        raise ValueError("atom locations must lie in the window")
    locs.setflags(write=False)
    wts.setflags(write=False)
    return PointConfig(domain, window, locs, wts)


@dataclass(frozen=True, eq=False)
class DisplacementTable:
    """A displacement path evaluated at finitely many locations.

    Always contains an entry at zero; locations are distinct and sorted.
    Sampled field tables anchor that entry at displacement zero, but the
    type admits arbitrary values there so ad-hoc tables (e.g. collision
    fixtures) stay expressible.  Lookups are exact: tables are built at
    the very element values they will be queried with.
    """

    domain: GroupDomain
    locations: np.ndarray
    displacements: np.ndarray
    mass: float = 1.0  # total mass of the field law the sample represents

    def __post_init__(self):
        idx = np.searchsorted(self.locations, self.domain.zero())
        if not (idx < len(self.locations) and self.locations[idx] == self.domain.zero()):
            raise ValueError("table must contain an entry at zero")

    def lookup(self, locations: np.ndarray) -> np.ndarray:
        """Displacements at the given locations; all must be present."""
        idx = np.searchsorted(self.locations, locations)
        bad = (idx >= len(self.locations)) | (self.locations[np.minimum(idx, len(self.locations) - 1)] != locations)
        if np.any(bad):
            missing = np.asarray(locations)[bad][:3]
            raise IncompleteTableError(f"no displacement for locations {missing.tolist()}")
        return self.displacements[idx]

    def at(self, location):
        out = self.lookup(np.array([location], dtype=self.locations.dtype))
        return out[0].item()


def displacement_table(domain: GroupDomain, entries, *, mass: float = 1.0) -> DisplacementTable:
    """Build a table from (location, displacement) pairs; adds nothing."""
    dtype = _location_dtype(domain)
    pairs = sorted(entries)
    locs = np.array([p[0] for p in pairs], dtype=dtype)
    disp_dtype = dtype
    disps = np.array([p[1] for p in pairs], dtype=disp_dtype)
    if len(np.unique(locs)) != len(locs):
        raise ValueError("table locations must be distinct")
    locs.setflags(write=False)
    disps.setflags(write=False)
    return DisplacementTable(domain, locs, disps, mass)


# ---------------------------------------------------------------------------
# Deterministic operators
# ---------------------------------------------------------------------------

def translate(c: PointConfig, t) -> PointConfig:
    """Re-center the configuration so the location ``t`` moves to zero.

    Every atom at x moves to x - t (mod order on cyclic groups); the
    window shifts along.  ``translate(c, x)`` for an atom x places that
    atom at zero, which is the single sign convention used everywhere.
    """
    d = c.domain
    if d.kind is GroupKind.CYCLIC:
        locs = (c.locations - t) % d.order
        order = np.argsort(locs, kind="stable")
        return PointConfig(d, c.window, _readonly(locs[order]), _readonly(c.weights[order]))
    locs = c.locations - t
    return PointConfig(d, c.window.shift(t), _readonly(locs), c.weights)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _displaced(c: PointConfig, d: DisplacementTable) -> np.ndarray:
    if c.domain != d.domain:
        raise ValueError("table belongs to a different domain")
    moved = c.locations + d.lookup(c.locations)
    if c.domain.kind is GroupKind.CYCLIC:
        moved = moved % c.domain.order
    return moved


def perturb(c: PointConfig, d: DisplacementTable, *,
            merge_tol: float = MERGE_TOL) -> PointConfig:
    """Push every atom x to x + d(x), keeping its weight.

    Atoms landing at the same location merge with summed weights; the
    window is enlarged to cover all displaced atoms.  Total mass is
    preserved exactly.
    """
    moved = _displaced(c, d)
    order = np.argsort(moved, kind="stable")
    locs, wts = _merge_sorted(c.domain, moved[order], c.weights[order], merge_tol)
    window = c.window.hull(locs.tolist())
    return PointConfig(c.domain, window, _readonly(locs), _readonly(wts))


def collision_count(c: PointConfig, d: DisplacementTable, *,
                    merge_tol: float = MERGE_TOL) -> int:
    """Ordered pairs of distinct atoms of a simple config that collide.

    Counts (s, t), s != t, with s + d(s) = t + d(t) (within ``merge_tol``
    on the real line).  Zero iff the perturbed configuration is again
    simple.
    """
    if not c.is_simple():
        raise SimplicityError("collision_count is defined on simple configurations")
    moved = np.sort(_displaced(c, d))
    if len(moved) == 0:
        return 0
    if c.domain.kind is GroupKind.REAL_LINE:
        new_group = np.diff(moved) > merge_tol
    else:
        new_group = np.diff(moved) != 0
    group = np.concatenate(([0], np.cumsum(new_group)))
    counts = np.bincount(group)
    return int(np.sum(counts * (counts - 1)))


def neighbors_of_zero(c: PointConfig):
    """The atoms straddling the origin: (largest < 0, smallest >= 0,
    next one above that)."""
    if c.domain.kind is GroupKind.CYCLIC:
        raise ValueError("neighbors_of_zero needs an ordered (non-compact) group")
    locs = c.locations
    i0 = np.searchsorted(locs, c.domain.zero(), side="left")
    if i0 == 0:
        raise InsufficientWindowError("no atom below zero; widen the window")
    if i0 + 1 >= len(locs):
        raise InsufficientWindowError("fewer than two atoms at or above zero; widen the window")
    return locs[i0 - 1].item(), locs[i0].item(), locs[i0 + 1].item()


def voronoi_zero_volume(c: PointConfig) -> float:
    """Length of the cell of points closer to the atom at 0 than to any
    other atom: (xi_1 - xi_{-1}) / 2 with xi_{-1} the largest negative
    and xi_1 the smallest positive atom."""
    if c.domain.kind is GroupKind.CYCLIC:
        raise ValueError("voronoi_zero_volume needs an ordered (non-compact) group")
    locs = c.locations
    i0 = np.searchsorted(locs, c.domain.zero(), side="left")
    if i0 >= len(locs) or locs[i0] != c.domain.zero():
        raise ValueError("zero must be an atom of the configuration")
    if i0 == 0:
        raise InsufficientWindowError("no atom below zero; widen the window")
    if i0 + 1 >= len(locs):
        raise InsufficientWindowError("no atom above zero; widen the window")
    return float(locs[i0 + 1] - locs[i0 - 1]) / 2.0


# ---------------------------------------------------------------------------
# JSON fixtures
# ---------------------------------------------------------------------------

def config_to_json(c: PointConfig) -> dict:
    """JSON-serializable form: {domain, window, atoms: [[loc, weight], ...]}."""
    dom = {"kind": c.domain.kind.value}
    if c.domain.order is not None:
        dom["order"] = c.domain.order
    return {
        "domain": dom,
        "window": [c.window.lo, c.window.hi],
        "atoms": [[loc, w] for loc, w in c.atoms()],
    }


def config_from_json(data: dict) -> PointConfig:
    from .groups import GroupDomain as _GD

    dom = _GD(GroupKind(data["domain"]["kind"]), data["domain"].get("order"))
    window = Window(dom, data["window"][0], data["window"][1])
    return point_config(dom, window, [tuple(a) for a in data["atoms"]])
