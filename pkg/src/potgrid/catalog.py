"""Dataset ingestion, validation, and on-disk catalog.

CSV contract (bit-exact): UTF-8, comma separator, decimal point, header
row ``id,lon,lat,<var1>[,<var2>...]``. Every row needs a value for every
variable; coordinates must be valid; stocks must be nonnegative; unit ids
must be unique. Violations are reported with the offending row number and
column name.

Catalog layout: one serialized dataset per id (``<id>.json``, optionally
``<id>.geojson`` for boundary overlays) plus ``index.json`` keeping
insertion order. Writes go through a temp file and an atomic rename, so a
failed re-ingest leaves the previous dataset intact and readers never see
a partial file.
"""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .geodesy import GeoPoint
from .spatial_index import StockPoint

__all__ = ["Dataset", "DatasetSummary", "ingest_csv", "Catalog", "IngestError"]

_SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


class IngestError(ValueError):
    """Malformed dataset input; message carries row/column diagnostics."""


@dataclass(frozen=True)
class Dataset:
    id: str
    name: str
    points: tuple[StockPoint, ...]
    variables: tuple[str, ...]
    boundaries: dict | None = None  # GeoJSON FeatureCollection, overlay only

    def stock_sum(self, variable: str) -> float:
        return sum(p.stocks[variable] for p in self.points)


@dataclass(frozen=True)
class DatasetSummary:
    id: str
    name: str
    n_points: int
    variables: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "n_points": self.n_points, "variables": list(self.variables)}


def _check_id(dataset_id: str) -> str:
    if not _SLUG_RE.match(dataset_id):
        raise IngestError(f"dataset id {dataset_id!r} is not a slug ([a-z0-9_-], lowercase)")
    return dataset_id


def ingest_csv(path: str | Path, dataset_id: str, name: str, boundaries: dict | None = None) -> Dataset:
    """Parse and validate a CSV file into a Dataset (no persistence)."""
    _check_id(dataset_id)
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file, expected header id,lon,lat,<var>...") from None
        header = [h.strip() for h in header]
        if len(header) < 4 or [h.lower() for h in header[:3]] != ["id", "lon", "lat"]:
            raise IngestError(f"{path}: header must start with id,lon,lat and carry at least one variable, got {header}")
        variables = tuple(header[3:])
        if len(set(variables)) != len(variables):
            raise IngestError(f"{path}: duplicate variable names in header: {variables}")

        points: list[StockPoint] = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}:{row_no}: expected {len(header)} fields, got {len(row)}")
            unit_id = row[0].strip()
            if not unit_id:
                raise IngestError(f"{path}:{row_no}: column 'id' is empty")
            if unit_id in seen:
                raise IngestError(f"{path}:{row_no}: duplicate unit id {unit_id!r}")
            seen.add(unit_id)

            def number(col_idx: int, col_name: str) -> float:
                try:
                    return float(row[col_idx])
                except ValueError:
                    raise IngestError(f"{path}:{row_no}: column {col_name!r} is not numeric: {row[col_idx]!r}") from None

            lon = number(1, "lon")
            lat = number(2, "lat")
            try:
                location = GeoPoint(lat=lat, lon=lon)
            except ValueError as exc:
                raise IngestError(f"{path}:{row_no}: column 'lat'/'lon': {exc}") from None
            stocks = {}
            for k, var in enumerate(variables):
                value = number(3 + k, var)
                if not value >= 0.0:
                    raise IngestError(f"{path}:{row_no}: column {var!r} must be >= 0, got {value}")
                stocks[var] = value
            points.append(StockPoint(id=unit_id, location=location, stocks=stocks))
    if not points:
        raise IngestError(f"{path}: no data rows")
    return Dataset(id=dataset_id, name=name, points=tuple(points), variables=variables, boundaries=boundaries)


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Catalog:
    """On-disk dataset store; reads are lock-free, ingest is exclusive."""

    directory: Path
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @property
    def _index_path(self) -> Path:
        return self.directory / "index.json"

    def _read_index(self) -> list[str]:
        if not self._index_path.exists():
            return []
        return json.loads(self._index_path.read_text(encoding="utf-8"))

    def _dataset_path(self, dataset_id: str) -> Path:
        return self.directory / f"{dataset_id}.json"

    def ingest_csv(self, path: str | Path, dataset_id: str, name: str, boundaries_path: str | Path | None = None) -> Dataset:
        """Validate, persist, and register a dataset; same id replaces."""
        boundaries = None
        if boundaries_path is not None:
            boundaries = json.loads(Path(boundaries_path).read_text(encoding="utf-8"))
            if boundaries.get("type") != "FeatureCollection":
                raise IngestError(f"{boundaries_path}: boundaries must be a GeoJSON FeatureCollection")
        dataset = ingest_csv(path, dataset_id, name, boundaries=boundaries)
        self.save(dataset)
        return dataset

    def save(self, dataset: Dataset) -> None:
        doc = {
            "id": dataset.id,
            "name": dataset.name,
            "variables": list(dataset.variables),
            "points": [
                [p.id, p.location.lon, p.location.lat] + [p.stocks[v] for v in dataset.variables]
                for p in dataset.points
            ],
            "has_boundaries": dataset.boundaries is not None,
        }
        with self._lock:
            if dataset.boundaries is not None:
                _atomic_write(self.directory / f"{dataset.id}.geojson", json.dumps(dataset.boundaries))
            _atomic_write(self._dataset_path(dataset.id), json.dumps(doc))
            index = self._read_index()
            if dataset.id not in index:
                index.append(dataset.id)
                _atomic_write(self._index_path, json.dumps(index))

    def get(self, dataset_id: str) -> Dataset:
        path = self._dataset_path(dataset_id)
        if not path.exists():
            raise KeyError(f"unknown dataset {dataset_id!r}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        variables = tuple(doc["variables"])
        points = tuple(
            StockPoint(
                id=row[0],
                location=GeoPoint(lat=row[2], lon=row[1]),
                stocks={v: row[3 + k] for k, v in enumerate(variables)},
            )
            for row in doc["points"]
        )
        boundaries = None
        if doc.get("has_boundaries"):
            bpath = self.directory / f"{dataset_id}.geojson"
            if bpath.exists():
                boundaries = json.loads(bpath.read_text(encoding="utf-8"))
        return Dataset(id=doc["id"], name=doc["name"], points=points, variables=variables, boundaries=boundaries)

    def list_datasets(self) -> list[DatasetSummary]:
        """Summaries in insertion order."""
        out = []
        for dataset_id in self._read_index():
            path = self._dataset_path(dataset_id)
            if not path.exists():
                continue
            doc = json.loads(path.read_text(encoding="utf-8"))
            out.append(DatasetSummary(id=doc["id"], name=doc["name"], n_points=len(doc["points"]), variables=tuple(doc["variables"])))
        return out

    def list_stocks(self, dataset_id: str) -> list[str]:
        """Variable names in header order."""
        path = self._dataset_path(dataset_id)
        if not path.exists():
            raise KeyError(f"unknown dataset {dataset_id!r}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        return list(doc["variables"])
