"""Multi-scale potential smoothing of geolocated stocks.

Turns discrete point stocks into continuous raster grids by summing a
distance-decay kernel over every point, with a quadtree cut-off for
speed, a calibrated kernel family sharing a common mean range, and an
authenticated HTTP service plus CLI around the engine.
"""

from .catalog import Catalog, Dataset, IngestError, ingest_csv
from .engine import (
    DiffGrid,
    GridSpec,
    MassReport,
    PotentialGrid,
    RatioGrid,
    compute_grid,
    compute_grid_naive,
    diff_grid,
    mass_check,
    nyquist_min_portee,
    ratio_grid,
)
from .geodesy import GeoPoint, SphereModel, TrigCache, build_trig_cache, fast_distance, orthodromic_distance, tabulation_bound_km
from .kernels import Kernel, KernelKind, KernelReport, kernel_eval, make_kernel, verify_kernel
from .spatial_index import (
    CutoffPolicy,
    QuadNode,
    StockPoint,
    build_quadtree,
    evaluate_potential,
    evaluate_potential_instrumented,
    min_distance_to_node,
)
from .wire import ENCODING, canonical_json, decode_payload, decode_values, encode_values, make_payload, report_html, report_text

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "GeoPoint",
    "SphereModel",
    "TrigCache",
    "build_trig_cache",
    "fast_distance",
    "orthodromic_distance",
    "tabulation_bound_km",
    "Kernel",
    "KernelKind",
    "KernelReport",
    "make_kernel",
    "kernel_eval",
    "verify_kernel",
    "StockPoint",
    "CutoffPolicy",
    "QuadNode",
    "build_quadtree",
    "min_distance_to_node",
    "evaluate_potential",
    "evaluate_potential_instrumented",
    "GridSpec",
    "PotentialGrid",
    "RatioGrid",
    "DiffGrid",
    "MassReport",
    "compute_grid",
    "compute_grid_naive",
    "ratio_grid",
    "diff_grid",
    "mass_check",
    "nyquist_min_portee",
    "Catalog",
    "Dataset",
    "IngestError",
    "ingest_csv",
    "ENCODING",
    "encode_values",
    "decode_values",
    "make_payload",
    "decode_payload",
    "canonical_json",
    "report_text",
    "report_html",
]
