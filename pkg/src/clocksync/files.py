"""File formats for measurements, ground truth, and reports.

Everything is JSON with every rational serialized as an exact string
("p/q" or a plain integer; exact decimal strings are accepted on
input), so a written file re-parses losslessly.  Report dictionaries
are emitted with stable key order and a trailing newline so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .linalg import LinAlgError, as_rational
from .model import (
    FaultAssignment,
    GroundTruth,
    MeasurementSet,
    ModelError,
    Pair,
    PairIndex,
)


class FileFormatError(ValueError):
    """A measurement/truth/report file failed to parse or validate."""


def parse_rational(text: str | int) -> Fraction:
    """Parse "p/q", integer, or exact decimal strings to a Fraction."""
    if isinstance(text, bool) or isinstance(text, float):
        raise FileFormatError(f"inexact or boolean offset value {text!r}")
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError, LinAlgError) as exc:
        raise FileFormatError(f"cannot parse rational from {text!r}: {exc}") from exc


def format_rational(value: Fraction) -> str:
    return str(value)


def _require(obj: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in obj:
        raise FileFormatError(f"{path}: missing required field {key!r}")
    return obj[key]


def _load_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON: {exc}") from exc


def measurement_document(n: int, meas: MeasurementSet, unit: str = "") -> dict[str, Any]:
    return {
        "n": n,
        "unit": unit,
        "measurements": [
            {"i": i, "j": j, "offset": format_rational(meas.value_of((i, j)))}
            for (i, j) in PairIndex(n).pairs
        ],
    }


def load_measurements(path: str | Path) -> tuple[MeasurementSet, str]:
    """Load and validate a measurement file; returns (measurements, unit)."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: expected a JSON object at top level")
    n = _require(doc, "n", str(path))
    if not isinstance(n, int) or n < 3:
        raise FileFormatError(f"{path}: node count must be an integer >= 3, got {n!r}")
    entries = _require(doc, "measurements", str(path))
    values: dict[Pair, Fraction] = {}
    for idx, entry in enumerate(entries):
        where = f"{path}: measurements[{idx}]"
        i = _require(entry, "i", where)
        j = _require(entry, "j", where)
        if not (isinstance(i, int) and isinstance(j, int) and 0 <= j < i < n):
            raise FileFormatError(f"{where}: bad session pair ({i!r},{j!r}) for n={n}")
        if (i, j) in values:
            raise FileFormatError(f"{where}: duplicate session pair ({i},{j})")
        values[(i, j)] = parse_rational(_require(entry, "offset", where))
    try:
        meas = MeasurementSet.from_map(n, values)
    except ModelError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return meas, str(doc.get("unit", ""))


def truth_document(
    truth: GroundTruth, faults: FaultAssignment, period: Fraction
) -> dict[str, Any]:
    return {
        "n": truth.n,
        "period": format_rational(period),
        "offsets": [format_rational(x) for x in truth.offsets],
        "faults": [
            {"i": i, "j": j, "magnitude": format_rational(m)}
            for (i, j), m in sorted(
                (faults.magnitudes if faults.has_magnitudes else {}).items(),
                key=lambda item: (item[0][1], item[0][0]),
            )
        ],
    }


def load_truth(path: str | Path) -> tuple[GroundTruth, FaultAssignment, Fraction]:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: expected a JSON object at top level")
    n = _require(doc, "n", str(path))
    offsets = [parse_rational(x) for x in _require(doc, "offsets", str(path))]
    if len(offsets) != n - 1:
        raise FileFormatError(f"{path}: expected {n - 1} offsets, got {len(offsets)}")
    period = parse_rational(doc.get("period", "1"))
    raw_faults = doc.get("faults", [])
    magnitudes: dict[Pair, Fraction] = {}
    for idx, entry in enumerate(raw_faults):
        where = f"{path}: faults[{idx}]"
        i = _require(entry, "i", where)
        j = _require(entry, "j", where)
        magnitudes[(i, j)] = parse_rational(_require(entry, "magnitude", where))
    try:
        truth = GroundTruth.of(offsets)
        faults = (
            FaultAssignment.with_magnitudes(magnitudes)
            if magnitudes
            else FaultAssignment.positions([])
        )
    except ModelError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return truth, faults, period


def render_document(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_document(doc: Mapping[str, Any], path: str | Path) -> None:
    Path(path).write_text(render_document(doc), encoding="utf-8")
