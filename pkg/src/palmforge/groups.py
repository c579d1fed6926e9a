"""The three concrete Abelian groups and their Haar structure.

Everything downstream is generic over a ``GroupDomain``: the real line,
the integer lattice, or a cyclic group Z/m.  The interface is a closed
enum rather than an open abstraction because every sampler needs
group-specific code (Gaussian fields exist only on the real line, exact
modular arithmetic only on cyclic groups).

Elements are plain Python scalars: ``float`` on the real line, ``int``
on the lattice and on cyclic groups (residues in ``[0, order)``).
Vectorised variants accept numpy arrays with the matching dtype.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatchError

__all__ = [
    "GroupKind",
    "GroupDomain",
    "Window",
    "real_line",
    "integer_lattice",
    "cyclic_group",
]


class GroupKind(enum.Enum):
    REAL_LINE = "real_line"
    INTEGER_LATTICE = "integer_lattice"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class GroupDomain:
    """One of the three supported groups; ``order`` is set only for cyclic."""

    kind: GroupKind
    order: int | None = None

    def __post_init__(self):
        if self.kind is GroupKind.CYCLIC:
            if self.order is None or self.order < 1:
                raise ValueError("cyclic group needs a positive order")
        elif self.order is not None:
            raise ValueError(f"{self.kind.value} takes no order")

    # -- predicates ------------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return self.kind is not GroupKind.REAL_LINE

    @property
    def is_compact(self) -> bool:
        return self.kind is GroupKind.CYCLIC

    def _check_same(self, other: "GroupDomain") -> None:
        if self != other:
            raise DomainMismatchError(f"domains differ: {self} vs {other}")

    # -- group arithmetic --------------------------------------------------
    # All three accept scalars or numpy arrays.  Cyclic arithmetic is exact
    # integer arithmetic mod `order`; there is no floating-point path.

    def add(self, x, y):
        if self.kind is GroupKind.CYCLIC:
            return (x + y) % self.order
        return x + y

    def negate(self, x):
        if self.kind is GroupKind.CYCLIC:
            return (-x) % self.order
        return -x

    def sub(self, x, y):
        return self.add(x, self.negate(y))

    def zero(self):
        return 0.0 if self.kind is GroupKind.REAL_LINE else 0

    # -- windows and Haar measure -----------------------------------------

    def window(self, lo, hi) -> "Window":
        return Window(self, lo, hi)

    def full_window(self) -> "Window":
        """The whole group; only available for cyclic groups."""
        if self.kind is not GroupKind.CYCLIC:
            raise ValueError("only cyclic groups have a full window")
        return Window(self, 0, self.order - 1)

    def centered_window(self, radius) -> "Window":
        """[-radius, radius], the standard simulation window."""
        if self.kind is GroupKind.CYCLIC:
            return self.full_window()
        if self.kind is GroupKind.INTEGER_LATTICE:
            r = int(radius)
            return Window(self, -r, r)
        return Window(self, -float(radius), float(radius))

    def haar_volume(self, w: "Window") -> float:
        """Haar mass of a window: length, cardinality, or group order."""
        self._check_same(w.domain)
        if self.kind is GroupKind.REAL_LINE:
            return w.hi - w.lo
        if self.kind is GroupKind.INTEGER_LATTICE:
            return float(w.hi - w.lo + 1)
        return float(self.order)

    def sample_haar(self, w: "Window", rng: np.random.Generator, size=None):
        """Uniform draw(s) from the window under the Haar measure."""
        self._check_same(w.domain)
        if self.kind is GroupKind.REAL_LINE:
            out = rng.uniform(w.lo, w.hi, size=size)
        elif self.kind is GroupKind.INTEGER_LATTICE:
            out = rng.integers(w.lo, w.hi + 1, size=size)
        else:
            out = rng.integers(0, self.order, size=size)
        if size is None:
            return float(out) if self.kind is GroupKind.REAL_LINE else int(out)
        return out

    def label(self) -> str:
        if self.kind is GroupKind.CYCLIC:
            return f"Z/{self.order}"
        return "R" if self.kind is GroupKind.REAL_LINE else "Z"


@dataclass(frozen=True)
class Window:
    """Finite observation region ``[lo, hi]``; always contains zero.

    Cyclic windows cover the whole group (``[0, order-1]`` as residues).
    """

    domain: GroupDomain
    lo: float | int
    hi: float | int

    def __post_init__(self):
        if self.domain.kind is GroupKind.CYCLIC:
            if (self.lo, self.hi) != (0, self.domain.order - 1):
                raise ValueError("cyclic windows must cover the full group")
            return
        if self.lo > 0 or self.hi < 0:
            raise ValueError(f"window [{self.lo}, {self.hi}] must contain zero")
        if self.domain.haar_volume(self) <= 0:
            raise ValueError("window must have positive Haar volume")

    def contains(self, x) -> bool:
        if self.domain.kind is GroupKind.CYCLIC:
            return 0 <= x < self.domain.order
        return self.lo <= x <= self.hi

    def shift(self, t) -> "Window":
        """Window of ``translate(c, t)``: every location moves to x - t."""
        if self.domain.kind is GroupKind.CYCLIC:
            return self
        return Window(self.domain, min(self.lo - t, 0), max(self.hi - t, 0))

    def hull(self, locations) -> "Window":
        """Smallest enlargement covering the given locations."""
        if self.domain.kind is GroupKind.CYCLIC or len(locations) == 0:
            return self
        lo = min(self.lo, min(locations))
        hi = max(self.hi, max(locations))
        return Window(self.domain, lo, hi)

    @property
    def core_radius(self) -> float:
        """Radius of the core sub-window on which functionals may be
        evaluated without boundary bias: half the distance from zero to
        the nearest window edge."""
        if self.domain.kind is GroupKind.CYCLIC:
            return float(self.domain.order)
        return min(-self.lo, self.hi) / 2.0


def real_line() -> GroupDomain:
    return GroupDomain(GroupKind.REAL_LINE)


def integer_lattice() -> GroupDomain:
    return GroupDomain(GroupKind.INTEGER_LATTICE)


def cyclic_group(order: int) -> GroupDomain:
    return GroupDomain(GroupKind.CYCLIC, order)
