"""Grid wire format and numeric reports.

A grid travels as a JSON envelope::

    {"spec": {...}, "meta": {...}, "warnings": [...],
     "encoding": "f32le-rowmajor-base64", "values": "<base64>"}

Values are IEEE-754 binary32, little-endian, row-major with rows running
north to south. Encoding is lossy exactly once (float64 -> float32);
decode(encode(x)) is bit-exact on float32 input. Envelopes are serialized
with sorted keys and no whitespace so that equal content means equal
bytes.

Reports render one line per cell (lon, lat of the cell center to six
decimals, then the value) in payload order. The value is printed as the
shortest decimal string that round-trips the float32, so report and
payload carry identical numbers.
"""

from __future__ import annotations

import base64
import html
import json

import numpy as np

from .engine import GridSpec

__all__ = [
    "ENCODING",
    "encode_values",
    "decode_values",
    "make_payload",
    "decode_payload",
    "canonical_json",
    "report_text",
    "report_html",
]

ENCODING = "f32le-rowmajor-base64"


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, compact separators, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def encode_values(values: np.ndarray) -> str:
    arr = np.ascontiguousarray(values, dtype="<f4")
    return base64.b64encode(arr.tobytes()).decode("ascii")


def decode_values(data: str, width: int, height: int) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    if len(raw) != 4 * width * height:
        raise ValueError(f"payload carries {len(raw)} bytes, expected {4 * width * height} for {width}x{height}")
    return np.frombuffer(raw, dtype="<f4").reshape(height, width)


def make_payload(spec: GridSpec, meta: dict, warnings: list[str], values: np.ndarray) -> dict:
    """Assemble the envelope; `values` is cast to float32 here."""
    return {
        "spec": spec.to_dict(),
        "meta": meta,
        "warnings": list(warnings),
        "encoding": ENCODING,
        "values": encode_values(values),
    }


def decode_payload(payload: dict) -> np.ndarray:
    if payload.get("encoding") != ENCODING:
        raise ValueError(f"unsupported encoding {payload.get('encoding')!r}")
    spec = payload["spec"]
    return decode_values(payload["values"], spec["width"], spec["height"])


def _payload_cells(payload: dict):
    spec = payload["spec"]
    bbox = spec["bbox"]
    width, height = spec["width"], spec["height"]
    dlat = (bbox["north"] - bbox["south"]) / height
    dlon = (bbox["east"] - bbox["west"]) / width
    values = decode_payload(payload)
    for i in range(height):
        lat = bbox["north"] - (i + 0.5) * dlat
        for j in range(width):
            lon = bbox["west"] + (j + 0.5) * dlon
            yield lon, lat, values[i, j]


def _render_value(v: np.float32) -> str:
    # str() of a float32 is its shortest round-tripping decimal form.
    return str(np.float32(v))


def report_text(payload: dict) -> str:
    lines = ["lon,lat,value"]
    for lon, lat, v in _payload_cells(payload):
        lines.append(f"{lon:.6f},{lat:.6f},{_render_value(v)}")
    return "\n".join(lines) + "\n"


def report_html(payload: dict) -> str:
    rows = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>potential grid report</title></head><body>",
        "<table>",
        "<tr><th>lon</th><th>lat</th><th>value</th></tr>",
    ]
    for lon, lat, v in _payload_cells(payload):
        rows.append(f"<tr><td>{lon:.6f}</td><td>{lat:.6f}</td><td>{html.escape(_render_value(v))}</td></tr>")
    rows.append("</table></body></html>")
    return "\n".join(rows) + "\n"
