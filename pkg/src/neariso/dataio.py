"""Dataset files and path reports.

Datasets are CSV (header ``index,value`` or ``index,value,weight``,
``#``-prefixed comment lines kept as provenance) or columnar JSON.  The
value column holds the recorded observation for the family at hand
(count for binomial/poisson, statistic for chi-square/gamma, measurement
for normal); the weight column holds trials, exposure, degrees of
freedom, shape, or precision respectively.

Path reports serialize a solution path knot by knot.  All numeric output
is rendered with 17 significant digits, so serialization round-trips
64-bit floats exactly and identical inputs produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IoError, ParseError, SchemaError

TOOL_VERSION = "0.1.0"


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (exact round-trip)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _parse_float(text: str, line: int | None = None) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line=line) from None


@dataclass(frozen=True)
class Dataset:
    """Rows of (index, value, optional weight) plus file-level metadata."""

    index: np.ndarray
    values: np.ndarray
    weights: np.ndarray | None
    family: str | None = None
    provenance: tuple = ()
    digest: str = ""

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def has_weights(self) -> bool:
        return self.weights is not None

    def effective_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones_like(self.values)
        return self.weights


def _validate_dataset(index, values, weights) -> None:
    if values.size == 0:
        raise SchemaError("dataset has no data rows")
    if np.any(np.diff(index) <= 0):
        raise SchemaError("indices must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise SchemaError("values must be finite")
    if weights is not None:
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise SchemaError("weights must be positive and finite")


def _read_bytes(source) -> bytes:
    if hasattr(source, "read"):
        raw = source.read()
        return raw.encode() if isinstance(raw, str) else bytes(raw)
    try:
        with open(source, "rb") as handle:
            return handle.read()
    except OSError as exc:
        raise IoError(f"cannot read {source}: {exc}") from exc


def _digest(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _dataset_from_csv(text: str, digest: str) -> Dataset:
    provenance = []
    header = None
    idx, vals, wts = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            provenance.append(stripped.lstrip("#").strip())
            continue
        try:
            row = next(csv.reader([line]))
        except csv.Error as exc:
            raise ParseError(str(exc), line=lineno) from None
        cells = [c.strip() for c in row]
        if header is None:
            header = [c.lower() for c in cells]
            if header not in (["index", "value"], ["index", "value", "weight"]):
                raise SchemaError(
                    f"header must be 'index,value' or 'index,value,weight', got {','.join(cells)!r}"
                )
            continue
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} columns, got {len(cells)}", line=lineno
            )
        try:
            idx.append(int(cells[0]))
        except ValueError:
            raise ParseError(f"index is not an integer: {cells[0]!r}", line=lineno) from None
        vals.append(_parse_float(cells[1], lineno))
        if len(header) == 3:
            wts.append(_parse_float(cells[2], lineno))
    if header is None:
        raise SchemaError("missing header line")
    index = np.asarray(idx, dtype=int)
    values = np.asarray(vals, dtype=float)
    weights = np.asarray(wts, dtype=float) if wts else None
    _validate_dataset(index, values, weights)
    return Dataset(index, values, weights, provenance=tuple(provenance), digest=digest)


def _dataset_from_json(text: str, digest: str) -> Dataset:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise SchemaError("dataset JSON must be an object")
    for key in ("index", "value"):
        if key not in obj:
            raise SchemaError(f"missing column: {key!r}")
    index = np.asarray(obj["index"], dtype=int)
    values = np.asarray(obj["value"], dtype=float)
    weights = None
    if obj.get("weight") is not None:
        weights = np.asarray(obj["weight"], dtype=float)
        if weights.shape != values.shape:
            raise SchemaError("weight column length differs from value column")
    if index.shape != values.shape:
        raise SchemaError("index column length differs from value column")
    provenance = obj.get("provenance", ())
    if isinstance(provenance, str):
        provenance = (provenance,)
    _validate_dataset(index, values, weights)
    return Dataset(
        index,
        values,
        weights,
        family=obj.get("family"),
        provenance=tuple(provenance),
        digest=digest,
    )


def read_dataset(source, format: str = "csv") -> Dataset:
    """Parse a dataset from a path or stream in CSV or JSON format."""
    raw = _read_bytes(source)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}") from None
    digest = _digest(raw)
    if format == "csv":
        return _dataset_from_csv(text, digest)
    if format == "json":
        return _dataset_from_json(text, digest)
    raise SchemaError(f"unknown dataset format: {format!r}")


def write_dataset(dataset: Dataset, stream) -> None:
    """Write a dataset as CSV with provenance comments (deterministic)."""
    for note in dataset.provenance:
        stream.write(f"# {note}\n")
    if dataset.has_weights:
        stream.write("index,value,weight\n")
        for i, v, w in zip(dataset.index, dataset.values, dataset.weights):
            stream.write(f"{int(i)},{format_float(v)},{format_float(w)}\n")
    else:
        stream.write("index,value\n")
        for i, v in zip(dataset.index, dataset.values):
            stream.write(f"{int(i)},{format_float(v)}\n")


class KnotRecord(NamedTuple):
    lam: float
    pieces: int
    criterion: float | None
    eta: tuple
    theta: tuple


@dataclass(frozen=True)
class PathReport:
    """Serialized view of a solution path, knot by knot."""

    family: str
    direction: str
    knots: tuple
    selected_lambda: float | None = None
    input_digest: str = ""
    version: str = TOOL_VERSION


def _emit_float_json(x) -> str:
    if x is None:
        return "null"
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return f'"{format_float(x)}"'
    return format_float(x)


def _emit_vector(values) -> str:
    return "[" + ", ".join(_emit_float_json(v) for v in values) + "]"


def write_report(report: PathReport, stream, format: str = "json") -> None:
    """Serialize a report deterministically as JSON or long-format CSV."""
    try:
        if format == "json":
            _write_report_json(report, stream)
        elif format == "csv":
            _write_report_csv(report, stream)
        else:
            raise SchemaError(f"unknown report format: {format!r}")
    except OSError as exc:
        raise IoError(f"cannot write report: {exc}") from exc


def _write_report_json(report: PathReport, stream) -> None:
    out = stream.write
    out("{\n")
    out('  "format": "neariso-path-report",\n')
    out(f'  "version": {json.dumps(report.version)},\n')
    out(f'  "family": {json.dumps(report.family)},\n')
    out(f'  "direction": {json.dumps(report.direction)},\n')
    out(f'  "input_digest": {json.dumps(report.input_digest)},\n')
    out(f'  "selected_lambda": {_emit_float_json(report.selected_lambda)},\n')
    out('  "knots": [\n')
    for k, rec in enumerate(report.knots):
        out("    {")
        out(f'"lambda": {_emit_float_json(rec.lam)}, ')
        out(f'"pieces": {int(rec.pieces)}, ')
        out(f'"criterion": {_emit_float_json(rec.criterion)}, ')
        out(f'"eta": {_emit_vector(rec.eta)}, ')
        out(f'"theta": {_emit_vector(rec.theta)}')
        out("}")
        out(",\n" if k + 1 < len(report.knots) else "\n")
    out("  ]\n")
    out("}\n")


def _write_report_csv(report: PathReport, stream) -> None:
    out = stream.write
    out(f"# neariso path report {report.version}\n")
    out(f"# family {report.family}\n")
    out(f"# direction {report.direction}\n")
    if report.input_digest:
        out(f"# input_digest {report.input_digest}\n")
    if report.selected_lambda is not None:
        out(f"# selected_lambda {format_float(report.selected_lambda)}\n")
    out("lambda,index,eta,theta\n")
    for rec in report.knots:
        lam_txt = format_float(rec.lam)
        for i, (e, t) in enumerate(zip(rec.eta, rec.theta)):
            out(f"{lam_txt},{i},{format_float(e)},{format_float(t)}\n")


def _parse_report_float(value, what: str):
    if value is None:
        return None
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise SchemaError(f"bad {what}: {value!r}") from None
    if isinstance(value, (int, float)):
        return float(value)
    raise SchemaError(f"bad {what}: {value!r}")


def read_report(source, format: str = "json") -> PathReport:
    """Parse a JSON path report (the round-trippable format)."""
    if format != "json":
        raise SchemaError("only JSON reports can be read back")
    raw = _read_bytes(source)
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(str(exc), line=line) from None
    if not isinstance(obj, dict) or obj.get("format") != "neariso-path-report":
        raise SchemaError("not a path report")
    knots = []
    for rec in obj.get("knots", ()):
        knots.append(
            KnotRecord(
                lam=_parse_report_float(rec.get("lambda"), "lambda"),
                pieces=int(rec.get("pieces", 0)),
                criterion=_parse_report_float(rec.get("criterion"), "criterion"),
                eta=tuple(_parse_report_float(v, "eta") for v in rec.get("eta", ())),
                theta=tuple(_parse_report_float(v, "theta") for v in rec.get("theta", ())),
            )
        )
    return PathReport(
        family=obj.get("family", ""),
        direction=obj.get("direction", ""),
        knots=tuple(knots),
        selected_lambda=_parse_report_float(obj.get("selected_lambda"), "selected_lambda"),
        input_digest=obj.get("input_digest", ""),
        version=obj.get("version", TOOL_VERSION),
    )


def report_to_string(report: PathReport, format: str = "json") -> str:
    buffer = io.StringIO()
    write_report(report, buffer, format=format)
    return buffer.getvalue()
