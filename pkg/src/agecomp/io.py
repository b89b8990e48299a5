"""File formats: schedule/weight/covariate CSV, basis and model JSON, PPM, SVG.

Numbers serialized to JSON are written as full-precision decimal strings
(shortest round-trip repr) so a load restores the exact float.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .regress import CovariateTable, LinearModel
from .schedule import ComponentBasis, ScheduleMatrix


def fmt_number(value) -> str:
    """Shortest decimal string that round-trips to the exact float."""
    return repr(float(value))


# ---------------------------------------------------------------------------
# CSV

def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
    return rows


def _parse_cell(path, rows, r, c) -> float:
    try:
        return float(rows[r][c])
    except ValueError:
        raise DataError(
            f"{path}: non-numeric cell {rows[r][c]!r} at row {r + 1}, column {c + 1}"
        ) from None


def load_schedule_csv(path, log: bool = False) -> ScheduleMatrix:
    """Read an age-by-schedule matrix: header 'age,<label>...', one row per group."""
    rows = _read_rows(path)
    if rows[0][0].strip().lower() != "age":
        raise DataError(f"{path}: first header cell must be 'age', got {rows[0][0]!r}")
    schedule_labels = [c.strip() for c in rows[0][1:]]
    group_labels = [row[0].strip() for row in rows[1:]]
    data = np.array(
        [[_parse_cell(path, rows, r, c) for c in range(1, len(rows[0]))]
         for r in range(1, len(rows))]
    )
    matrix = ScheduleMatrix(group_labels, schedule_labels, data)
    return matrix.to_log() if log else matrix


def write_schedule_csv(matrix: ScheduleMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", *matrix.schedule_labels])
        for g, label in enumerate(matrix.group_labels):
            writer.writerow([label, *(fmt_number(v) for v in matrix.data[g])])


def load_covariates_csv(path) -> CovariateTable:
    """Read a covariate table: label column first, one named column per covariate."""
    rows = _read_rows(path)
    names = [c.strip() for c in rows[0][1:]]
    labels = [row[0].strip() for row in rows[1:]]
    columns = {
        name: np.array([_parse_cell(path, rows, r, c + 1) for r in range(1, len(rows))])
        for c, name in enumerate(names)
    }
    return CovariateTable(labels, columns)


def write_weights_csv(labels, weights, path, residual_norms=None) -> None:
    """Weight rows (one per schedule), columns v1..vc, optional residual norm."""
    w = np.asarray(weights, dtype=float)
    header = ["schedule"] + [f"v{i + 1}" for i in range(w.shape[1])]
    if residual_norms is not None:
        header.append("residual_norm")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, label in enumerate(labels):
            row = [label, *(fmt_number(v) for v in w[i])]
            if residual_norms is not None:
                row.append(fmt_number(residual_norms[i]))
            writer.writerow(row)


def load_weights_csv(path):
    """Return (labels, H x c weight array); extra columns are ignored."""
    rows = _read_rows(path)
    names = [c.strip() for c in rows[0][1:]]
    keep = [c + 1 for c, name in enumerate(names) if name.startswith("v")]
    if not keep:
        raise DataError(f"{path}: no weight columns (v1, v2, ...) found")
    labels = [row[0].strip() for row in rows[1:]]
    data = np.array(
        [[_parse_cell(path, rows, r, c) for c in keep] for r in range(1, len(rows))]
    )
    return labels, data


# ---------------------------------------------------------------------------
# JSON

def basis_to_json(basis: ComponentBasis) -> str:
    payload = {
        "group_labels": list(basis.group_labels),
        "singular_values": [fmt_number(v) for v in basis.singular_values],
        "components": [[fmt_number(v) for v in basis.components[:, i]] for i in range(basis.c)],
        "c": basis.c,
        "scale": basis.scale,
        "source_id": basis.source_id,
    }
    return json.dumps(payload, indent=2)


def basis_from_json(text: str) -> ComponentBasis:
    try:
        payload = json.loads(text)
        components = np.array(
            [[float(v) for v in comp] for comp in payload["components"]]
        ).T
        return ComponentBasis(
            group_labels=payload["group_labels"],
            components=components,
            singular_values=[float(v) for v in payload["singular_values"]],
            scale=payload["scale"],
            source_id=payload.get("source_id", ""),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed basis JSON: {exc}") from exc


def models_to_json(models) -> str:
    payload = {
        "models": [
            {
                "response": f"v{i + 1}",
                "predictor_names": list(m.predictor_names),
                "with_intercept": m.with_intercept,
                "coefficients": [fmt_number(v) for v in m.coefficients],
                "standard_errors": [fmt_number(v) for v in m.standard_errors],
                "t_values": [fmt_number(v) for v in m.t_values],
                "p_values": [fmt_number(v) for v in m.p_values],
                "r_squared": fmt_number(m.r_squared),
                "n": m.n,
            }
            for i, m in enumerate(models)
        ]
    }
    return json.dumps(payload, indent=2)


def models_from_json(text: str):
    try:
        payload = json.loads(text)
        models = []
        for entry in payload["models"]:
            models.append(
                LinearModel(
                    predictor_names=tuple(entry["predictor_names"]),
                    coefficients=np.array([float(v) for v in entry["coefficients"]]),
                    standard_errors=np.array(
                        [float(v) for v in entry["standard_errors"]]
                    ),
                    t_values=np.array([float(v) for v in entry["t_values"]]),
                    p_values=np.array([float(v) for v in entry["p_values"]]),
                    r_squared=float(entry["r_squared"]),
                    n=int(entry["n"]),
                    residuals=np.array([]),
                    with_intercept=bool(entry["with_intercept"]),
                )
            )
        return models
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed models JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# PPM (P3 ascii / P6 binary, 8-bit)

def read_ppm(path):
    """Read a PPM image; returns (pixels H x W x 3 float array, magic)."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P3", b"P6"):
        raise DataError(f"{path}: unsupported format {raw[:2]!r}, need P3 or P6")
    magic = raw[:2].decode()

    # tokenize the header, skipping '#' comments
    tokens = []
    pos = 2
    while len(tokens) < 3 and pos < len(raw):
        ch = raw[pos:pos + 1]
        if ch == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(raw) and not raw[pos:pos + 1].isspace():
                pos += 1
            tokens.append(raw[start:pos])
    if len(tokens) < 3:
        raise DataError(f"{path}: truncated PPM header")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise DataError(f"{path}: malformed PPM header") from None
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit channels supported, maxval={maxval}")

    count = width * height * 3
    if magic == "P6":
        pos += 1  # exactly one whitespace byte separates maxval from the raster
        body = raw[pos:pos + count]
        if len(body) != count:
            raise DataError(f"{path}: expected {count} pixel bytes, got {len(body)}")
        flat = np.frombuffer(body, dtype=np.uint8).astype(float)
    else:
        try:
            values = raw[pos:].split()
            flat = np.array([int(v) for v in values[:count]], dtype=float)
        except ValueError:
            raise DataError(f"{path}: non-numeric P3 pixel data") from None
        if flat.size != count:
            raise DataError(f"{path}: expected {count} pixel values, got {flat.size}")
        if np.any(flat < 0) or np.any(flat > 255):
            raise DataError(f"{path}: P3 pixel value out of 0..255")
    return flat.reshape(height, width, 3), magic


def write_ppm(pixels, path, magic: str = "P6") -> None:
    arr = np.clip(np.rint(np.asarray(pixels, dtype=float)), 0, 255).astype(np.uint8)
    height, width, _ = arr.shape
    header = f"{magic}\n{width} {height}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode())
        if magic == "P6":
            fh.write(arr.tobytes())
        else:
            flat = arr.reshape(-1, 3)
            lines = [" ".join(f"{r} {g} {b}" for r, g, b in flat[i:i + 5])
                     for i in range(0, len(flat), 5)]
            fh.write(("\n".join(lines) + "\n").encode())


# ---------------------------------------------------------------------------
# SVG plots

_PALETTE = ("#1f6fb4", "#d1342c", "#2c8a4b", "#8a5cb4", "#c97f1e", "#4f4f4f")
_WIDTH, _HEIGHT = 800, 560
_MARGIN = 70


def _scale(lo, hi):
    if hi == lo:
        pad = abs(lo) if lo != 0 else 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render_plot(series, kind: str = "line", x_label: str = "", y_label: str = "") -> str:
    """Self-contained SVG line or scatter plot with axes and a legend.

    ``series`` is a list of (label, x values, y values) triples.
    """
    if not series:
        raise DataError("nothing to plot")
    cleaned = []
    for label, xs, ys in series:
        xv = np.asarray(xs, dtype=float)
        yv = np.asarray(ys, dtype=float)
        if xv.size == 0 or xv.shape != yv.shape:
            raise DataError(f"series {label!r} is empty or has mismatched x/y")
        cleaned.append((str(label), xv, yv))

    x_lo, x_hi = _scale(min(s[1].min() for s in cleaned), max(s[1].max() for s in cleaned))
    y_lo, y_hi = _scale(min(s[2].min() for s in cleaned), max(s[2].max() for s in cleaned))
    inner_w = _WIDTH - 2 * _MARGIN
    inner_h = _HEIGHT - 2 * _MARGIN

    def px(x):
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * inner_w

    def py(y):
        return _HEIGHT - _MARGIN - (y - y_lo) / (y_hi - y_lo) * inner_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{px(xv):.1f}" y="{_HEIGHT - _MARGIN + 20}" font-size="11" '
            f'text-anchor="middle">{xv:.4g}</text>'
        )
        parts.append(
            f'<text x="{_MARGIN - 8}" y="{py(yv):.1f}" font-size="11" '
            f'text-anchor="end">{yv:.4g}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_WIDTH / 2:.0f}" y="{_HEIGHT - 15}" font-size="13" '
            f'text-anchor="middle">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="18" y="{_HEIGHT / 2:.0f}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 18 {_HEIGHT / 2:.0f})">{y_label}</text>'
        )

    for idx, (label, xs, ys) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        if kind == "line" and xs.size > 1:
            points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        else:
            for x, y in zip(xs, ys):
                parts.append(
                    f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}" '
                    f'fill-opacity="0.6"/>'
                )
        ly = _MARGIN + 18 * idx + 6
        lx = _WIDTH - _MARGIN - 150
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="12" height="12" fill="{color}"/>')
        parts.append(
            f'<text x="{lx + 18}" y="{ly + 1}" font-size="12" class="legend">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
