"""File formats: runs CSV ingestion, report envelopes, and SVG chart emission.

Report JSON is canonical: keys sorted, no whitespace, floats in shortest
round-trip decimal form, one trailing newline. Two runs with the same seed
and config therefore produce byte-identical files except for the ``created``
timestamp. CSV output uses comma separators, ``\\n`` line endings, UTF-8, and
no quoting (fields never contain commas).

CSV column orders, by payload kind:

- ``curve``:        estimator,n,estimate,ci_lo,ci_hi (ci cells empty when absent)
- ``probe``:        n,underestimates,samples,proportion,ci_lo,ci_hi
- ``coverage``:     n,hits,samples,ecp,ci_lo,ci_hi
- ``curves``:       model,n,estimate,true,stderr
- ``failure_scan``: n,true_leader,estimated_leader
- ``ks_bound``:     n,bound
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from xml.etree import ElementTree as ET

from .estimators import CurvePoint, EstimatorKind, ExpectedMaxCurve, ScoreSample
from .experiments import (
    CoverageReport,
    CoverageRow,
    CurveReport,
    ModelCurves,
    ProbeReport,
    ProbeRow,
)
from .resampling import Interval

SCHEMA_VERSION = "1"
"""Incremented on any breaking change to the envelope or payload layout;
readers reject schema versions they do not know."""


class RunsFileError(ValueError):
    """Base for problems with a runs CSV file."""


class MalformedRowError(RunsFileError):
    """A row that does not parse as `score[,run_id]`."""

    def __init__(self, path, line: int, detail: str):
        super().__init__(f"{path}: line {line}: {detail}")
        self.line = line


class NonFiniteScoreError(RunsFileError):
    """A score cell that parses but is NaN or infinite."""

    def __init__(self, path, line: int, raw: str):
        super().__init__(f"{path}: line {line}: score {raw!r} is not finite")
        self.line = line


class EmptyRunsError(RunsFileError):
    """A runs file with no data rows."""


@dataclass(frozen=True)
class RunsFile:
    """Parsed runs CSV: scores in file order, with optional run identifiers."""

    path: str
    scores: tuple[float, ...]
    run_ids: tuple[str, ...] | None


def parse_runs(path) -> RunsFile:
    """Parse a runs CSV into scores (file order) and optional run ids.

    The file holds one score per row, optionally followed by a run id cell.
    A header row is auto-detected: if the first cell of row 1 does not parse
    as a number, row 1 is treated as a header. Blank lines are skipped.
    """
    text = Path(path).read_text(encoding="utf-8")
    scores: list[float] = []
    run_ids: list[str] = []
    saw_id = False
    first_data_row = True
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) > 2:
            raise MalformedRowError(path, lineno, f"expected 1 or 2 cells, got {len(cells)}")
        if first_data_row:
            first_data_row = False
            try:
                float(cells[0])
            except ValueError:
                continue  # header row
        try:
            value = float(cells[0])
        except ValueError:
            raise MalformedRowError(
                path, lineno, f"score cell {cells[0]!r} is not a number"
            ) from None
        if not math.isfinite(value):
            raise NonFiniteScoreError(path, lineno, cells[0])
        scores.append(value)
        if len(cells) == 2:
            saw_id = True
            run_ids.append(cells[1])
        else:
            run_ids.append(str(len(scores) - 1))
    if not scores:
        raise EmptyRunsError(f"{path}: no data rows")
    return RunsFile(
        path=str(path),
        scores=tuple(scores),
        run_ids=tuple(run_ids) if saw_id else None,
    )


def read_runs(path) -> ScoreSample:
    """Read a runs CSV into a ScoreSample; file order becomes ingestion order."""
    return ScoreSample(parse_runs(path).scores)


def write_runs(sample: ScoreSample, path) -> None:
    """Write a sample as a runs CSV (header + one score per row, ingestion order)."""
    lines = ["score"]
    lines.extend(repr(v) for v in sample.ingested_values.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ReportEnvelope:
    """A report payload wrapped with everything needed to reproduce it.

    ``config`` echoes every parameter and seed that went into the payload;
    re-running the tool with that config reproduces the payload bit for bit.
    """

    schema_version: str
    tool_version: str
    created: str
    config: dict
    payload_kind: str
    payload: object


def make_envelope(payload_kind: str, payload, config: dict) -> ReportEnvelope:
    from . import __version__

    return ReportEnvelope(
        schema_version=SCHEMA_VERSION,
        tool_version=__version__,
        created=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        config=config,
        payload_kind=payload_kind,
        payload=payload,
    )


def _interval_to_json(ci: Interval) -> list[float]:
    return [ci.lo, ci.hi]


def payload_to_jsonable(kind: str, payload) -> dict:
    if kind == "curve":
        return {
            "curves": [
                {
                    "estimator": str(c.estimator),
                    "sample_size": c.sample_size,
                    "points": [
                        {
                            "n": p.n,
                            "estimate": p.estimate,
                            "ci": None if p.ci is None else [p.ci[0], p.ci[1]],
                        }
                        for p in c.points
                    ],
                }
                for c in payload
            ]
        }
    if kind == "probe":
        return {
            "rows": [
                {
                    "n": r.n,
                    "underestimates": r.underestimates,
                    "samples": r.samples,
                    "proportion": r.proportion,
                    "ci": _interval_to_json(r.ci),
                }
                for r in payload.rows
            ],
            "B": payload.B,
            "estimator": str(payload.kind),
            "dist_id": payload.dist_id,
            "seed": payload.seed,
            "stream": payload.stream,
        }
    if kind == "coverage":
        return {
            "rows": [
                {
                    "n": r.n,
                    "hits": r.hits,
                    "samples": r.samples,
                    "ecp": r.ecp,
                    "ci": _interval_to_json(r.ci),
                }
                for r in payload.rows
            ],
            "B": payload.B,
            "resamples": payload.resamples,
            "nominal": payload.nominal,
            "estimator": str(payload.kind),
            "dist_id": payload.dist_id,
            "seed": payload.seed,
            "stream": payload.stream,
        }
    if kind == "curves":
        return {
            "models": [
                {
                    "name": m.name,
                    "budgets": list(m.budgets),
                    "averaged": list(m.averaged),
                    "true": list(m.true),
                    "stderr": list(m.stderr),
                }
                for m in payload.models
            ],
            "B": payload.B,
            "num_samples": payload.num_samples,
            "estimator": str(payload.kind),
            "seed": payload.seed,
            "stream": payload.stream,
        }
    if kind in ("failure_scan", "ks_bound"):
        return payload  # already a plain JSON-shaped dict
    raise ValueError(f"unknown payload kind {kind!r}")


def payload_from_jsonable(kind: str, obj: dict):
    if kind == "curve":
        return tuple(
            ExpectedMaxCurve(
                points=tuple(
                    CurvePoint(
                        n=p["n"],
                        estimate=p["estimate"],
                        ci=None if p["ci"] is None else (p["ci"][0], p["ci"][1]),
                    )
                    for p in c["points"]
                ),
                estimator=EstimatorKind.parse(c["estimator"]),
                sample_size=c["sample_size"],
            )
            for c in obj["curves"]
        )
    if kind == "probe":
        return ProbeReport(
            rows=tuple(
                ProbeRow(
                    n=r["n"],
                    underestimates=r["underestimates"],
                    samples=r["samples"],
                    proportion=r["proportion"],
                    ci=Interval(*r["ci"]),
                )
                for r in obj["rows"]
            ),
            B=obj["B"],
            kind=EstimatorKind.parse(obj["estimator"]),
            dist_id=obj["dist_id"],
            seed=obj["seed"],
            stream=obj["stream"],
        )
    if kind == "coverage":
        return CoverageReport(
            rows=tuple(
                CoverageRow(
                    n=r["n"],
                    hits=r["hits"],
                    samples=r["samples"],
                    ecp=r["ecp"],
                    ci=Interval(*r["ci"]),
                )
                for r in obj["rows"]
            ),
            B=obj["B"],
            resamples=obj["resamples"],
            nominal=obj["nominal"],
            kind=EstimatorKind.parse(obj["estimator"]),
            dist_id=obj["dist_id"],
            seed=obj["seed"],
            stream=obj["stream"],
        )
    if kind == "curves":
        return CurveReport(
            models=tuple(
                ModelCurves(
                    name=m["name"],
                    budgets=tuple(m["budgets"]),
                    averaged=tuple(m["averaged"]),
                    true=tuple(m["true"]),
                    stderr=tuple(m["stderr"]),
                )
                for m in obj["models"]
            ),
            B=obj["B"],
            num_samples=obj["num_samples"],
            kind=EstimatorKind.parse(obj["estimator"]),
            seed=obj["seed"],
            stream=obj["stream"],
        )
    if kind in ("failure_scan", "ks_bound"):
        return obj
    raise ValueError(f"unknown payload kind {kind!r}")


def envelope_to_jsonable(envelope: ReportEnvelope) -> dict:
    return {
        "schema_version": envelope.schema_version,
        "tool_version": envelope.tool_version,
        "created": envelope.created,
        "config": envelope.config,
        "payload_kind": envelope.payload_kind,
        "payload": payload_to_jsonable(envelope.payload_kind, envelope.payload),
    }


def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, compact, newline-terminated."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def report_json_text(envelope: ReportEnvelope) -> str:
    return canonical_json(envelope_to_jsonable(envelope))


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def report_csv_text(envelope: ReportEnvelope) -> str:
    """Flatten the payload's per-n rows to CSV (header + data rows only)."""
    kind = envelope.payload_kind
    payload = envelope.payload
    rows: list[list] = []
    if kind == "curve":
        header = ["estimator", "n", "estimate", "ci_lo", "ci_hi"]
        for c in payload:
            for p in c.points:
                lo, hi = (None, None) if p.ci is None else p.ci
                rows.append([str(c.estimator), p.n, p.estimate, lo, hi])
    elif kind == "probe":
        header = ["n", "underestimates", "samples", "proportion", "ci_lo", "ci_hi"]
        for r in payload.rows:
            rows.append([r.n, r.underestimates, r.samples, r.proportion, r.ci.lo, r.ci.hi])
    elif kind == "coverage":
        header = ["n", "hits", "samples", "ecp", "ci_lo", "ci_hi"]
        for r in payload.rows:
            rows.append([r.n, r.hits, r.samples, r.ecp, r.ci.lo, r.ci.hi])
    elif kind == "curves":
        header = ["model", "n", "estimate", "true", "stderr"]
        for m in payload.models:
            for n, est, tru, se in zip(m.budgets, m.averaged, m.true, m.stderr):
                rows.append([m.name, n, est, tru, se])
    elif kind == "failure_scan":
        header = ["n", "true_leader", "estimated_leader"]
        for inv in payload["inversions"]:
            rows.append([inv["n"], inv["true_leader"], inv["estimated_leader"]])
    elif kind == "ks_bound":
        header = ["n", "bound"]
        for r in payload["rows"]:
            rows.append([r["n"], r["bound"]])
    else:
        raise ValueError(f"unknown payload kind {kind!r}")
    lines = [",".join(header)]
    lines.extend(",".join(_cell(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_report(envelope: ReportEnvelope, path, format: str = "json") -> None:
    """Write the envelope as canonical JSON or flattened CSV."""
    if format == "json":
        text = report_json_text(envelope)
    elif format == "csv":
        text = report_csv_text(envelope)
    else:
        raise ValueError(f"unknown report format {format!r}; expected json or csv")
    Path(path).write_text(text, encoding="utf-8")


def read_report(path) -> ReportEnvelope:
    """Read a JSON report back into an envelope with a typed payload."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported schema version {version!r} (this build reads {SCHEMA_VERSION!r})"
        )
    return ReportEnvelope(
        schema_version=obj["schema_version"],
        tool_version=obj["tool_version"],
        created=obj["created"],
        config=obj["config"],
        payload_kind=obj["payload_kind"],
        payload=payload_from_jsonable(obj["payload_kind"], obj["payload"]),
    )


# ---------------------------------------------------------------------------
# SVG emission
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 720, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 46
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

_ALLOWED_SVG_ELEMENTS = {"svg", "rect", "line", "polyline", "polygon", "text", "g"}


@dataclass(frozen=True)
class _Series:
    label: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    dashed: bool = False
    band: tuple[tuple[float, ...], tuple[float, ...]] | None = None  # (los, his)


def _plot_series(envelope: ReportEnvelope):
    """Extract (series, y_label, reference_y, y_bounds) for the payload."""
    kind = envelope.payload_kind
    payload = envelope.payload
    if kind == "curve":
        series = []
        for c in payload:
            xs = tuple(float(p.n) for p in c.points)
            ys = tuple(p.estimate for p in c.points)
            band = None
            if all(p.ci is not None for p in c.points):
                band = (
                    tuple(p.ci[0] for p in c.points),
                    tuple(p.ci[1] for p in c.points),
                )
            series.append(_Series(label=str(c.estimator), xs=xs, ys=ys, band=band))
        return series, "expected max score", None, None
    if kind == "probe":
        xs = tuple(float(r.n) for r in payload.rows)
        series = [
            _Series(
                label=str(payload.kind),
                xs=xs,
                ys=tuple(r.proportion for r in payload.rows),
                band=(
                    tuple(r.ci.lo for r in payload.rows),
                    tuple(r.ci.hi for r in payload.rows),
                ),
            )
        ]
        return series, "underestimate proportion", 0.5, (0.0, 1.0)
    if kind == "coverage":
        xs = tuple(float(r.n) for r in payload.rows)
        series = [
            _Series(
                label=str(payload.kind),
                xs=xs,
                ys=tuple(r.ecp for r in payload.rows),
                band=(
                    tuple(r.ci.lo for r in payload.rows),
                    tuple(r.ci.hi for r in payload.rows),
                ),
            )
        ]
        return series, "empirical coverage", payload.nominal, (0.0, 1.0)
    if kind == "curves":
        series = []
        for m in payload.models:
            xs = tuple(float(n) for n in m.budgets)
            series.append(_Series(label=m.name, xs=xs, ys=m.averaged))
            series.append(_Series(label=f"{m.name} (true)", xs=xs, ys=m.true, dashed=True))
        return series, "expected max score", None, None
    if kind == "ks_bound":
        xs = tuple(float(r["n"]) for r in payload["rows"])
        ys = tuple(r["bound"] for r in payload["rows"])
        return [_Series(label="KS lower bound", xs=xs, ys=ys)], "KS distance", None, (0.0, 1.0)
    raise ValueError(f"payload kind {kind!r} has no chart form")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def emit_plot(envelope: ReportEnvelope, path) -> None:
    """Write a self-contained SVG chart plus a sidecar CSV of the series.

    Solid polylines are estimates, dashed polylines are true curves,
    translucent polygons are confidence bands; probe and coverage charts get
    a horizontal reference line (0.5 and the nominal level respectively).
    The sidecar CSV lands next to the SVG with a ``.csv`` suffix.
    """
    series, y_label, reference, y_bounds = _plot_series(envelope)
    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    for s in series:
        if s.band is not None:
            ys_all.extend(s.band[0])
            ys_all.extend(s.band[1])
    x_lo, x_hi = min(xs_all), max(xs_all)
    if y_bounds is not None:
        y_lo, y_hi = y_bounds
    else:
        y_lo, y_hi = min(ys_all), max(ys_all)
        pad = 0.05 * (y_hi - y_lo) or 1.0
        y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    px_w = _SVG_W - _MARGIN_L - _MARGIN_R
    px_h = _SVG_H - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * px_w

    def sy(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * px_h

    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(_SVG_W),
            "height": str(_SVG_H),
            "viewBox": f"0 0 {_SVG_W} {_SVG_H}",
        },
    )
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": str(_SVG_W),
                                 "height": str(_SVG_H), "fill": "white"})
    axes = ET.SubElement(root, "g", {"stroke": "#333333", "stroke-width": "1"})
    ET.SubElement(axes, "line", {"x1": f"{_MARGIN_L}", "y1": f"{_SVG_H - _MARGIN_B}",
                                 "x2": f"{_SVG_W - _MARGIN_R}", "y2": f"{_SVG_H - _MARGIN_B}"})
    ET.SubElement(axes, "line", {"x1": f"{_MARGIN_L}", "y1": f"{_MARGIN_T}",
                                 "x2": f"{_MARGIN_L}", "y2": f"{_SVG_H - _MARGIN_B}"})
    labels = ET.SubElement(root, "g", {"font-family": "sans-serif", "font-size": "11",
                                       "fill": "#333333"})
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        ET.SubElement(axes, "line", {"x1": f"{px:.2f}", "y1": f"{_SVG_H - _MARGIN_B}",
                                     "x2": f"{px:.2f}", "y2": f"{_SVG_H - _MARGIN_B + 4}"})
        t = ET.SubElement(labels, "text", {"x": f"{px:.2f}", "y": f"{_SVG_H - _MARGIN_B + 16}",
                                           "text-anchor": "middle"})
        t.text = _fmt(tx)
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        ET.SubElement(axes, "line", {"x1": f"{_MARGIN_L - 4}", "y1": f"{py:.2f}",
                                     "x2": f"{_MARGIN_L}", "y2": f"{py:.2f}"})
        t = ET.SubElement(labels, "text", {"x": f"{_MARGIN_L - 7}", "y": f"{py + 3.5:.2f}",
                                           "text-anchor": "end"})
        t.text = _fmt(ty)
    x_title = ET.SubElement(labels, "text", {"x": f"{_MARGIN_L + px_w / 2:.2f}",
                                             "y": f"{_SVG_H - 10}", "text-anchor": "middle"})
    x_title.text = "budget n"
    y_title = ET.SubElement(labels, "text", {
        "x": "14", "y": f"{_MARGIN_T + px_h / 2:.2f}", "text-anchor": "middle",
        "transform": f"rotate(-90 14 {_MARGIN_T + px_h / 2:.2f})"})
    y_title.text = y_label

    data = ET.SubElement(root, "g")
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        if s.band is not None:
            los, his = s.band
            forward = [f"{sx(x):.2f},{sy(lo):.2f}" for x, lo in zip(s.xs, los)]
            backward = [f"{sx(x):.2f},{sy(hi):.2f}" for x, hi in zip(reversed(s.xs), reversed(his))]
            ET.SubElement(data, "polygon", {
                "points": " ".join(forward + backward),
                "fill": color, "fill-opacity": "0.18", "stroke": "none"})
        attrs = {
            "points": " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.xs, s.ys)),
            "fill": "none", "stroke": color, "stroke-width": "1.6",
        }
        if s.dashed:
            attrs["stroke-dasharray"] = "6,4"
        ET.SubElement(data, "polyline", attrs)
    if reference is not None:
        ET.SubElement(data, "line", {
            "x1": f"{_MARGIN_L}", "y1": f"{sy(reference):.2f}",
            "x2": f"{_SVG_W - _MARGIN_R}", "y2": f"{sy(reference):.2f}",
            "stroke": "#888888", "stroke-width": "1", "stroke-dasharray": "4,3"})
    legend = ET.SubElement(root, "g", {"font-family": "sans-serif", "font-size": "11",
                                       "fill": "#333333"})
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        ly = _MARGIN_T + 6 + 15 * i
        line_attrs = {"x1": f"{_MARGIN_L + 10}", "y1": f"{ly}",
                      "x2": f"{_MARGIN_L + 34}", "y2": f"{ly}",
                      "stroke": color, "stroke-width": "1.6"}
        if s.dashed:
            line_attrs["stroke-dasharray"] = "6,4"
        ET.SubElement(legend, "line", line_attrs)
        t = ET.SubElement(legend, "text", {"x": f"{_MARGIN_L + 39}", "y": f"{ly + 3.5}"})
        t.text = s.label

    svg_text = '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
    out = Path(path)
    out.write_text(svg_text, encoding="utf-8")
    out.with_suffix(".csv").write_text(report_csv_text(envelope), encoding="utf-8")
