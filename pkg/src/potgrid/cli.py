"""Operator entry points: ingest, compute, bench, serve.

Exit codes: 0 ok, 1 validation (bad flags, bad request, bad data),
2 I/O (unreadable input, unwritable output), 3 internal.

`compute` writes the same canonical payload JSON the API serves, one
file per grid; with a denominator it also derives ratio files from the
decoded float32 grids (the exact derivation a display client performs),
and with a second range a difference file. `bench` times the direct and
tree paths on a seeded synthetic cloud and reports max relative error
per epsilon.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .api_service import ComputeRequest, ServerConfig, compute_payloads, create_app
from .catalog import Catalog
from .engine import GridSpec, compute_grid, compute_grid_naive, nyquist_min_portee
from .geodesy import GeoPoint
from .kernels import KernelKind, make_kernel
from .spatial_index import CutoffPolicy, StockPoint
from .wire import canonical_json, decode_payload, make_payload, report_text

__all__ = ["cli", "main", "run_bench", "synthetic_points"]

KERNEL_NAMES = [k.value for k in KernelKind]
BENCH_BBOX = (-10.0, 36.0, 30.0, 60.0)


def _parse_bbox(_ctx, _param, value: str) -> tuple[float, float, float, float]:
    parts = value.split(",")
    if len(parts) != 4:
        raise click.BadParameter("expected west,south,east,north")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise click.BadParameter(f"non-numeric bbox component in {value!r}") from None


def _parse_size(_ctx, _param, value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise click.BadParameter("expected WIDTHxHEIGHT, e.g. 400x300") from None


@click.group()
def cli():
    """Potential-grid toolkit: smooth point stocks into rasters."""


@cli.command()
@click.argument("csv_path", type=click.Path(path_type=Path))
@click.option("--id", "dataset_id", required=True, help="dataset slug")
@click.option("--name", required=True, help="display name")
@click.option("--boundaries", type=click.Path(path_type=Path), default=None, help="GeoJSON overlay file")
@click.option("--catalog", "catalog_dir", type=click.Path(path_type=Path), default=Path("catalog"), show_default=True)
def ingest(csv_path: Path, dataset_id: str, name: str, boundaries: Path | None, catalog_dir: Path):
    """Validate a CSV of point stocks and store it in the catalog."""
    dataset = Catalog(catalog_dir).ingest_csv(csv_path, dataset_id, name, boundaries_path=boundaries)
    click.echo(f"ingested {dataset.id}: {len(dataset.points)} points, variables {', '.join(dataset.variables)}")


def _spec_from_payload(payload: dict) -> GridSpec:
    b = payload["spec"]["bbox"]
    return GridSpec(
        west=b["west"], south=b["south"], east=b["east"], north=b["north"],
        width=payload["spec"]["width"], height=payload["spec"]["height"],
    )


def _derived_meta(src: dict, kind: str, slot: str) -> dict:
    meta = {"request": src["meta"]["request"], "kind": kind, "slot": slot, "epsilon": src["meta"]["epsilon"]}
    meta["kernel"] = src["meta"]["kernel"]
    return meta


def _ratio_payload(num_p: dict, den_p: dict, slot: str, floor: float = 1e-9) -> dict:
    num = decode_payload(num_p)
    den = decode_payload(den_p)
    threshold = np.float32(floor) * den.max()
    if threshold > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(den >= threshold, num / den, np.float32(np.nan))
    else:
        values = np.full_like(num, np.nan)
    warnings = sorted(set(num_p["warnings"]) | set(den_p["warnings"]))
    return make_payload(_spec_from_payload(num_p), _derived_meta(num_p, "ratio", slot), warnings, values)


def _diff_payload(z2_p: dict, z1_p: dict) -> dict:
    values = decode_payload(z2_p) - decode_payload(z1_p)
    warnings = sorted(set(z1_p["warnings"]) | set(z2_p["warnings"]))
    return make_payload(_spec_from_payload(z1_p), _derived_meta(z2_p, "difference", "diff"), warnings, values)


@cli.command()
@click.option("--catalog", "catalog_dir", type=click.Path(path_type=Path), default=Path("catalog"), show_default=True)
@click.option("--dataset", required=True)
@click.option("--num", required=True, help="numerator variable")
@click.option("--den", default=None, help="denominator variable")
@click.option("--kernel", "kind", type=click.Choice(KERNEL_NAMES), default="gaussian", show_default=True)
@click.option("--portee", "portee_km", type=float, required=True, help="mean range, km")
@click.option("--portee2", "portee2_km", type=float, default=None, help="second range, km")
@click.option("--beta", type=float, default=None, help="pareto exponent (> 3)")
@click.option("--bbox", callback=_parse_bbox, required=True, help="west,south,east,north (degrees)")
@click.option("--size", callback=_parse_size, required=True, help="grid WIDTHxHEIGHT")
@click.option("--epsilon", type=float, default=1e-3, show_default=True, help="cut-off threshold (0 = exact)")
@click.option("--naive", is_flag=True, help="direct-sum oracle path, for cross-checks")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None, help="also write a text report")
@click.option("-o", "--out", "out_path", type=click.Path(path_type=Path), required=True)
def compute(catalog_dir, dataset, num, den, kind, portee_km, portee2_km, beta, bbox, size, epsilon, naive, workers, report_path, out_path: Path):
    """Compute grid payload files for one request."""
    west, south, east, north = bbox
    width, height = size
    req = ComputeRequest(
        dataset=dataset,
        num=num,
        den=den,
        kernel={"kind": kind, "portee_km": portee_km, "beta": beta},
        portee2_km=portee2_km,
        grid={"bbox": {"west": west, "south": south, "east": east, "north": north}, "width": width, "height": height},
        epsilon=epsilon,
    )
    payloads = compute_payloads(Catalog(catalog_dir), req, workers=workers, naive=naive)
    by_slot = {p["meta"]["slot"]: p for p in payloads}

    suffix = out_path.suffix or ".json"
    stem = out_path.with_suffix("")

    def path_for(tag: str | None) -> Path:
        return out_path if tag is None else stem.with_name(stem.name + "." + tag + suffix)

    outputs: list[tuple[Path, dict]] = [(path_for(None), by_slot["num1"])]
    z1 = by_slot["num1"]
    if den is not None:
        z1 = _ratio_payload(by_slot["num1"], by_slot["den1"], "ratio1")
        outputs.append((path_for("den"), by_slot["den1"]))
        outputs.append((path_for("ratio"), z1))
    if portee2_km is not None:
        z2 = by_slot["num2"]
        outputs.append((path_for("p2"), by_slot["num2"]))
        if den is not None:
            z2 = _ratio_payload(by_slot["num2"], by_slot["den2"], "ratio2")
            outputs.append((path_for("den.p2"), by_slot["den2"]))
            outputs.append((path_for("ratio.p2"), z2))
        outputs.append((path_for("diff"), _diff_payload(z2, z1)))

    for path, payload in outputs:
        path.write_text(canonical_json(payload), encoding="utf-8")
        click.echo(f"wrote {path} ({payload['meta'].get('slot', '?')})")
    if report_path is not None:
        report_path.write_text(report_text(outputs[0][1]), encoding="utf-8")
        click.echo(f"wrote {report_path} (report)")


def synthetic_points(n: int, seed: int = 12345, bbox: tuple[float, float, float, float] = BENCH_BBOX) -> list[StockPoint]:
    """Seeded uniform cloud in lon/lat with one synthetic stock column."""
    rng = np.random.default_rng(seed)
    west, south, east, north = bbox
    lons = rng.uniform(west, east, n)
    lats = rng.uniform(south, north, n)
    stocks = rng.uniform(10.0, 1000.0, n)
    return [
        StockPoint(id=f"p{i}", location=GeoPoint(lat=float(lats[i]), lon=float(lons[i])), stocks={"stock": float(stocks[i])})
        for i in range(n)
    ]


def run_bench(
    n: int,
    width: int,
    height: int,
    portee_km: float,
    *,
    kind: str = "gaussian",
    epsilons: tuple[float, ...] = (1e-3,),
    seed: int = 12345,
    workers: int = 1,
    run_naive: bool = True,
    bbox: tuple[float, float, float, float] = BENCH_BBOX,
) -> dict:
    """Time the direct and tree paths on a synthetic cloud.

    Returns naive seconds (None when skipped) and one row per epsilon
    with tree seconds and max relative error against the exact grid.
    """
    points = synthetic_points(n, seed=seed, bbox=bbox)
    west, south, east, north = bbox
    spec = GridSpec(west=west, south=south, east=east, north=north, width=width, height=height)
    k = make_kernel(kind, portee_km)

    naive_seconds = None
    exact = None
    if run_naive:
        t0 = time.perf_counter()
        exact = compute_grid_naive(points, "stock", k, spec, workers=workers).values
        naive_seconds = time.perf_counter() - t0

    rows = []
    for eps in epsilons:
        policy = CutoffPolicy(epsilon=eps, enabled=eps > 0.0)
        t0 = time.perf_counter()
        grid = compute_grid(points, "stock", k, spec, policy, workers=workers)
        seconds = time.perf_counter() - t0
        max_rel = None
        if exact is not None:
            scale = np.maximum(np.abs(exact), 1e-300)
            max_rel = float(np.max(np.abs(grid.values - exact) / scale))
        rows.append({"epsilon": eps, "seconds": seconds, "max_rel_err": max_rel})
    return {
        "n": n, "width": width, "height": height, "portee_km": portee_km, "kind": kind,
        "naive_seconds": naive_seconds, "rows": rows,
        "nyquist_min_portee_km": nyquist_min_portee(points),
    }


@cli.command()
@click.option("--n", "n", type=int, default=2000, show_default=True, help="synthetic point count")
@click.option("--size", callback=_parse_size, default="400x300", show_default=True)
@click.option("--portee", "portee_km", type=float, default=100.0, show_default=True)
@click.option("--kernel", "kind", type=click.Choice(KERNEL_NAMES), default="gaussian", show_default=True)
@click.option("--epsilon", type=float, default=1e-3, show_default=True)
@click.option("--epsilon-sweep", is_flag=True, help="sweep epsilon over decades instead of a single value")
@click.option("--seed", type=int, default=12345, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--skip-naive", is_flag=True, help="skip the direct-sum reference timing")
def bench(n, size, portee_km, kind, epsilon, epsilon_sweep, seed, workers, skip_naive):
    """Benchmark direct vs tree paths on seeded synthetic data."""
    width, height = size
    epsilons = (0.0, 1e-4, 1e-3, 1e-2) if epsilon_sweep else (epsilon,)
    result = run_bench(
        n, width, height, portee_km,
        kind=kind, epsilons=epsilons, seed=seed, workers=workers, run_naive=not skip_naive,
    )
    header = f"{'samples':>8}  {'grid':>9}  {'portee_km':>9}  {'path':<20} {'seconds':>9}  {'max_rel_err':>11}"
    click.echo(header)
    res = f"{width}x{height}"
    if result["naive_seconds"] is not None:
        click.echo(f"{n:>8}  {res:>9}  {portee_km:>9g}  {'naive':<20} {result['naive_seconds']:>9.2f}  {'-':>11}")
    for row in result["rows"]:
        path = f"quadtree eps={row['epsilon']:g}"
        err = "-" if row["max_rel_err"] is None else f"{row['max_rel_err']:.2e}"
        click.echo(f"{n:>8}  {res:>9}  {portee_km:>9g}  {path:<20} {row['seconds']:>9.2f}  {err:>11}")
    if result["naive_seconds"] is not None and result["rows"]:
        speedup = result["naive_seconds"] / result["rows"][-1]["seconds"]
        click.echo(f"speedup (naive / quadtree eps={result['rows'][-1]['epsilon']:g}): {speedup:.1f}x")


@cli.command()
@click.option("--listen", default="127.0.0.1:8020", show_default=True, help="host:port")
@click.option("--catalog", "catalog_dir", type=click.Path(path_type=Path), default=Path("catalog"), show_default=True)
@click.option("--token", "tokens", multiple=True, required=True, help="accepted bearer token (repeatable)")
@click.option("--timeout", type=float, default=30.0, show_default=True, help="per-request compute budget, seconds (0 disables)")
@click.option("--epsilon", type=float, default=1e-3, show_default=True, help="default cut-off threshold")
@click.option("--cache", "cache_size", type=int, default=0, show_default=True, help="response cache entries (0 disables)")
@click.option("--workers", type=int, default=1, show_default=True)
def serve(listen, catalog_dir, tokens, timeout, epsilon, cache_size, workers):
    """Run the HTTP service until terminated."""
    import uvicorn

    host, _, port = listen.partition(":")
    config = ServerConfig(
        catalog_dir=Path(catalog_dir),
        tokens=tuple(tokens),
        host=host or "127.0.0.1",
        port=int(port or 8020),
        timeout_seconds=None if timeout == 0 else timeout,
        default_epsilon=epsilon,
        cache_size=cache_size,
        workers=workers,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    """Entry point with stable exit codes (0 ok, 1 validation, 2 I/O, 3 internal)."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        click.echo(f"error: {msg}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
