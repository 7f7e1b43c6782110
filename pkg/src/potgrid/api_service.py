"""Authenticated HTTP boundary for grid computation.

Endpoints (all under a static bearer-token gate):

* ``GET  /api/kernels``              kernel names and parameter schemas
* ``GET  /api/datasets``             catalog summaries, insertion order
* ``GET  /api/datasets/{id}/stocks`` variable names, header order
* ``POST /api/grid``                 JSON array of grid payloads
* ``POST /api/report``               text or HTML per-cell report

``/api/grid`` returns one payload per requested grid in fixed order:
numerator at the first range, then denominator at the first range, then
the same pair at the second range (absent slots are skipped). Ratios and
differences are left to the caller so the raw grids cross the wire once.

Request validation is exhaustive: a 400 names the offending field. An
unknown dataset or variable is a 404; a Pareto shape that breaks the
finite-range requirement (beta <= 3) is a 422. Responses are serialized
canonically (sorted keys, no whitespace), so identical requests yield
byte-identical bodies no matter the worker count.

The compute path is shared with the command line; keep it free of any
framework types beyond the request model itself.
"""

from __future__ import annotations

import hmac
import os
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .catalog import Catalog
from .engine import GridSpec, compute_grid, nyquist_min_portee
from .kernels import DEFAULT_PARETO_BETA, KernelKind, make_kernel
from .spatial_index import CutoffPolicy
from .wire import canonical_json, make_payload, report_html, report_text

__all__ = [
    "ServerConfig",
    "BBoxModel",
    "GridModel",
    "KernelModel",
    "ComputeRequest",
    "ComputeTimeout",
    "canonical_request",
    "compute_payloads",
    "kernel_directory",
    "create_app",
]

MAX_GRID_SIDE = 4096


class ComputeTimeout(RuntimeError):
    """Raised when a request exceeds the configured compute budget."""


@dataclass(frozen=True)
class ServerConfig:
    """Service settings; every field maps to a flag and a POTGRID_* variable."""

    catalog_dir: Path
    tokens: tuple[str, ...]
    host: str = "127.0.0.1"
    port: int = 8020
    timeout_seconds: float | None = 30.0
    default_epsilon: float = 1e-3
    cache_size: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("at least one bearer token is required")
        if self.timeout_seconds is not None and not self.timeout_seconds > 0:
            raise ValueError("timeout_seconds must be positive (or None to disable)")
        if self.default_epsilon < 0:
            raise ValueError("default_epsilon must be >= 0")
        if self.cache_size < 0:
            raise ValueError("cache_size must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "ServerConfig":
        """Build from POTGRID_* environment variables, overridden by kwargs."""
        env = os.environ
        values: dict = {}
        if "POTGRID_CATALOG" in env:
            values["catalog_dir"] = Path(env["POTGRID_CATALOG"])
        if "POTGRID_TOKENS" in env:
            values["tokens"] = tuple(t for t in env["POTGRID_TOKENS"].split(",") if t)
        if "POTGRID_HOST" in env:
            values["host"] = env["POTGRID_HOST"]
        if "POTGRID_PORT" in env:
            values["port"] = int(env["POTGRID_PORT"])
        if "POTGRID_TIMEOUT" in env:
            raw = env["POTGRID_TIMEOUT"]
            values["timeout_seconds"] = None if raw in ("", "0", "none") else float(raw)
        if "POTGRID_EPSILON" in env:
            values["default_epsilon"] = float(env["POTGRID_EPSILON"])
        if "POTGRID_CACHE" in env:
            values["cache_size"] = int(env["POTGRID_CACHE"])
        if "POTGRID_WORKERS" in env:
            values["workers"] = int(env["POTGRID_WORKERS"])
        values.update(overrides)
        return cls(**values)


# --- request contract ------------------------------------------------------


class BBoxModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    west: float = Field(ge=-180.0, le=180.0)
    south: float = Field(ge=-90.0, le=90.0)
    east: float = Field(ge=-180.0, le=180.0)
    north: float = Field(ge=-90.0, le=90.0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.east > self.west:
            raise ValueError("east must exceed west")
        if not self.north > self.south:
            raise ValueError("north must exceed south")
        return self


class GridModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    bbox: BBoxModel
    width: int = Field(ge=1, le=MAX_GRID_SIDE)
    height: int = Field(ge=1, le=MAX_GRID_SIDE)


class KernelModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["disk", "damped-disk", "gaussian", "pareto"]
    portee_km: float = Field(gt=0.0)
    beta: float | None = None

    @model_validator(mode="after")
    def _beta_scope(self):
        if self.beta is not None and self.kind != KernelKind.PARETO.value:
            raise ValueError("beta applies to the pareto kernel only")
        return self


class ComputeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dataset: str
    num: str
    den: str | None = None
    kernel: KernelModel
    portee2_km: float | None = Field(default=None, gt=0.0)
    grid: GridModel
    epsilon: float | None = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def _scales_ordered(self):
        if self.portee2_km is not None and not self.portee2_km > self.kernel.portee_km:
            raise ValueError("portee2_km must exceed kernel.portee_km")
        return self


def canonical_request(req: ComputeRequest, default_epsilon: float = 1e-3) -> dict:
    """Request with defaults resolved; doubles as the cache key content."""
    eps = req.epsilon if req.epsilon is not None else default_epsilon
    beta = req.kernel.beta
    if req.kernel.kind == KernelKind.PARETO.value and beta is None:
        beta = DEFAULT_PARETO_BETA
    b = req.grid.bbox
    return {
        "dataset": req.dataset,
        "num": req.num,
        "den": req.den,
        "kernel": {
            "kind": req.kernel.kind,
            "portee_km": float(req.kernel.portee_km),
            "beta": float(beta) if beta is not None else None,
        },
        "portee2_km": float(req.portee2_km) if req.portee2_km is not None else None,
        "grid": {
            "bbox": {"west": float(b.west), "south": float(b.south), "east": float(b.east), "north": float(b.north)},
            "width": int(req.grid.width),
            "height": int(req.grid.height),
        },
        "epsilon": float(eps),
    }


def compute_payloads(
    catalog: Catalog,
    req: ComputeRequest,
    *,
    default_epsilon: float = 1e-3,
    workers: int = 1,
    deadline: float | None = None,
    naive: bool = False,
) -> list[dict]:
    """Run every grid a request implies and wrap each as a wire payload.

    Raises KeyError for an unknown dataset or variable, ValueError for a
    kernel the calibration rejects, ComputeTimeout past the deadline.
    """
    dataset = catalog.get(req.dataset)
    for var in (req.num, req.den):
        if var is not None and var not in dataset.variables:
            raise KeyError(f"unknown variable {var!r} in dataset {req.dataset!r}")

    canon = canonical_request(req, default_epsilon)
    eps = canon["epsilon"]
    beta = canon["kernel"]["beta"]
    kernels = [(1, make_kernel(req.kernel.kind, req.kernel.portee_km, beta=beta))]
    if req.portee2_km is not None:
        kernels.append((2, make_kernel(req.kernel.kind, req.portee2_km, beta=beta)))

    spec = GridSpec(
        west=canon["grid"]["bbox"]["west"],
        south=canon["grid"]["bbox"]["south"],
        east=canon["grid"]["bbox"]["east"],
        north=canon["grid"]["bbox"]["north"],
        width=canon["grid"]["width"],
        height=canon["grid"]["height"],
    )
    policy = CutoffPolicy(epsilon=eps, enabled=eps > 0.0)
    nyquist = nyquist_min_portee(dataset.points)

    slots = []
    for scale, kern in kernels:
        slots.append((f"num{scale}", req.num, kern))
        if req.den is not None:
            slots.append((f"den{scale}", req.den, kern))

    payloads = []
    for slot, variable, kern in slots:
        if deadline is not None and time.monotonic() > deadline:
            raise ComputeTimeout("grid computation exceeded the server time budget")
        if naive:
            from .engine import compute_grid_naive

            grid = compute_grid_naive(dataset.points, variable, kern, spec, workers=workers)
        else:
            grid = compute_grid(dataset.points, variable, kern, spec, policy, workers=workers)
        warn = [
            f"no boundary correction: cells within {kern.portee_km:g} km of the bbox edge may be underestimated"
        ]
        nyquist_flag = nyquist is not None and kern.portee_km < nyquist
        if nyquist_flag:
            warn.append(
                f"portee {kern.portee_km:g} km is below the sampling floor of {nyquist:g} km"
                " (twice the largest nearest-neighbor spacing)"
            )
        meta = {
            "request": canon,
            "slot": slot,
            "variable": variable,
            "kernel": {"kind": kern.kind.value, "portee_km": kern.portee_km, "beta": kern.beta},
            "epsilon": eps,
            "margin_km": kern.portee_km,
            "nyquist_min_portee_km": nyquist,
            "nyquist_warning": nyquist_flag,
            "naive": bool(naive),
        }
        payloads.append(make_payload(spec, meta, warn, grid.values))
    return payloads


def kernel_directory() -> list[dict]:
    """Static description of the four kernel kinds and their parameters."""
    portee = {"type": "number", "unit": "km", "required": True, "exclusive_min": 0}
    out = []
    for kind in KernelKind:
        params = {"portee_km": portee}
        if kind == KernelKind.PARETO:
            params["beta"] = {
                "type": "number",
                "required": False,
                "default": DEFAULT_PARETO_BETA,
                "exclusive_min": 3,
            }
        out.append({"name": kind.value, "params": params})
    return out


# --- service ----------------------------------------------------------------


class _ResponseCache:
    """Tiny thread-safe LRU for canonical response bodies."""

    def __init__(self, size: int):
        self.size = size
        self._data: OrderedDict[str, bytes] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> bytes | None:
        with self._lock:
            body = self._data.get(key)
            if body is not None:
                self._data.move_to_end(key)
            return body

    def put(self, key: str, body: bytes) -> None:
        with self._lock:
            self._data[key] = body
            self._data.move_to_end(key)
            while len(self._data) > self.size:
                self._data.popitem(last=False)


def create_app(config: ServerConfig, catalog: Catalog | None = None) -> FastAPI:
    app = FastAPI(title="potgrid", docs_url=None, redoc_url=None, openapi_url=None)
    catalog = catalog if catalog is not None else Catalog(config.catalog_dir)
    cache = _ResponseCache(config.cache_size) if config.cache_size > 0 else None

    def require_token(request: Request) -> None:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        ok = scheme.lower() == "bearer" and any(hmac.compare_digest(token, t) for t in config.tokens)
        if not ok:
            raise HTTPException(
                status_code=401,
                detail="missing or invalid bearer token",
                headers={"WWW-Authenticate": "Bearer"},
            )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        errors = []
        for err in exc.errors():
            loc = [str(part) for part in err.get("loc", ()) if part != "body"]
            errors.append({"field": ".".join(loc) or "body", "message": err.get("msg", "invalid value")})
        return JSONResponse(status_code=400, content={"detail": "invalid request", "errors": errors})

    def _deadline() -> float | None:
        if config.timeout_seconds is None:
            return None
        return time.monotonic() + config.timeout_seconds

    def _payloads_or_http_error(req: ComputeRequest) -> list[dict]:
        try:
            return compute_payloads(
                catalog,
                req,
                default_epsilon=config.default_epsilon,
                workers=config.workers,
                deadline=_deadline(),
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=exc.args[0]) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ComputeTimeout as exc:
            raise HTTPException(status_code=504, detail=str(exc)) from exc

    @app.get("/api/kernels", dependencies=[Depends(require_token)])
    def list_kernels():
        return JSONResponse(content=kernel_directory())

    @app.get("/api/datasets", dependencies=[Depends(require_token)])
    def list_datasets():
        return JSONResponse(content=[s.to_dict() for s in catalog.list_datasets()])

    @app.get("/api/datasets/{dataset_id}/stocks", dependencies=[Depends(require_token)])
    def list_stocks(dataset_id: str):
        try:
            return JSONResponse(content=catalog.list_stocks(dataset_id))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=exc.args[0]) from exc

    @app.post("/api/grid", dependencies=[Depends(require_token)])
    def grid(req: ComputeRequest) -> Response:
        key = canonical_json(canonical_request(req, config.default_epsilon))
        if cache is not None:
            hit = cache.get(key)
            if hit is not None:
                return Response(content=hit, media_type="application/json")
        body = canonical_json(_payloads_or_http_error(req)).encode("ascii")
        if cache is not None:
            cache.put(key, body)
        return Response(content=body, media_type="application/json")

    @app.post("/api/report", dependencies=[Depends(require_token)])
    def report(req: ComputeRequest, format: Literal["text", "html"] = Query(default="text")) -> Response:
        # The report covers the primary grid: the numerator at the first range.
        payload = _payloads_or_http_error(req)[0]
        if format == "html":
            return HTMLResponse(content=report_html(payload))
        return PlainTextResponse(content=report_text(payload))

    return app
