"""Scenario descriptions and the flat key=value scenario-file format.

A scenario file is plain text, one ``key = value`` per line, ``#`` for
comments; no nesting, so any tooling can parse or generate one.  Keys
mirror the CLI flags of the subcommand the file is passed to, e.g.::

    # perturbed-lattice certification
    palm = lattice
    field = brownian:sigma=0.5
    n = 10000
    seed = 7
    window = 16
"""

from __future__ import annotations

from .errors import PalmForgeError
from .palm import ExpGaps, FixedGap, GammaGaps, LatticePalm, PoissonPalm, RenewalPalm

__all__ = ["ScenarioKeyError", "parse_scenario_file", "parse_palm_spec", "KNOWN_KEYS"]

KNOWN_KEYS = frozenset({
    "id", "palm", "lam", "gap", "field", "window", "n", "seed", "level",
    "offsets", "bin", "alpha", "sizes", "seeds", "windows", "replicas",
    "cases", "order", "merge-tol", "quick",
})


class ScenarioKeyError(PalmForgeError):
    """A scenario file contains a key the runner does not know."""


def parse_scenario_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key or not value:
                raise ScenarioKeyError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            if key not in KNOWN_KEYS:
                raise ScenarioKeyError(f"{path}:{lineno}: unknown scenario key {key!r}")
            out[key] = value
    return out


def parse_palm_spec(spec: str, lam: float = 2.0, gap: str = "gamma:2,0.5"):
    """Palm source from a CLI spec: lattice | poisson | renewal."""
    name = spec.strip().lower()
    if name == "lattice":
        return LatticePalm()
    if name == "poisson":
        return PoissonPalm(rate=lam)
    if name == "renewal":
        return RenewalPalm(gaps=parse_gap_spec(gap))
    raise ValueError(f"unknown Palm source {spec!r}")


def parse_gap_spec(spec: str):
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    parts = [p for p in rest.split(",") if p]
    if name == "gamma":
        shape, scale = float(parts[0]), float(parts[1])
        return GammaGaps(shape, scale)
    if name == "exp":
        return ExpGaps(float(parts[0]))
    if name == "fixed":
        return FixedGap(float(parts[0]))
    raise ValueError(f"unknown gap distribution {spec!r}")
