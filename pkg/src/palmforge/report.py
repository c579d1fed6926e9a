"""Delimited and JSON output for the experiment runner.

``results.csv`` carries one row per estimator/test with the columns
(scenario, estimator, value, se, n, seed, verdict).  A timestamp comment
line is prepended unless the run is deterministic; everything else is a
pure function of the inputs, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

__all__ = ["Row", "write_results_csv", "write_report_json"]

CSV_COLUMNS = ("scenario", "estimator", "value", "se", "n", "seed", "verdict")


@dataclass(frozen=True)
class Row:
    scenario: str
    estimator: str
    value: float
    se: float | None = None
    n: int | None = None
    seed: int | None = None
    verdict: bool | None = None

    def formatted(self) -> dict:
        return {
            "scenario": self.scenario,
            "estimator": self.estimator,
            "value": _fmt(self.value),
            "se": _fmt(self.se),
            "n": "" if self.n is None else str(self.n),
            "seed": "" if self.seed is None else str(self.seed),
            "verdict": "" if self.verdict is None else ("pass" if self.verdict else "fail"),
        }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    return f"{x:.12g}"


def write_results_csv(rows, path, deterministic: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if not deterministic:
            fh.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.formatted())


def write_report_json(payload: dict, path, deterministic: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(payload)
    if not deterministic:
        doc["generated"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
