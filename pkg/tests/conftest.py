import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from potgrid import GeoPoint, StockPoint
from potgrid.cli import synthetic_points

settings.register_profile(
    "suite", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")

# Seeded 2000-point cloud shared by the oracle-equivalence tests.
ACCEPTANCE_SEED = 20030415
ACCEPTANCE_BBOX = (-10.0, 36.0, 30.0, 60.0)


@pytest.fixture(scope="session")
def cloud2000():
    return synthetic_points(2000, seed=ACCEPTANCE_SEED, bbox=ACCEPTANCE_BBOX)


@pytest.fixture
def small_points():
    return [
        StockPoint(id="a", location=GeoPoint(lat=45.0, lon=5.0), stocks={"pop": 120.0, "area": 10.0}),
        StockPoint(id="b", location=GeoPoint(lat=46.0, lon=6.5), stocks={"pop": 50.0, "area": 8.0}),
        StockPoint(id="c", location=GeoPoint(lat=44.1, lon=4.2), stocks={"pop": 300.0, "area": 22.0}),
    ]


@pytest.fixture
def demo_csv(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text(
        "id,lon,lat,pop,area\n"
        "a,5.0,45.0,120,10\n"
        "b,6.5,46.0,50,8\n"
        "c,4.2,44.1,300,22\n",
        encoding="utf-8",
    )
    return path


def lat_lattice(n: int, step_km: float, lat0: float = 10.0, lon: float = 3.0):
    """Points spaced step_km apart along one meridian (exact arc spacing)."""
    step_deg = np.degrees(step_km / 6371.0)
    return [
        StockPoint(id=f"l{i}", location=GeoPoint(lat=lat0 + i * step_deg, lon=lon), stocks={"s": 1.0})
        for i in range(n)
    ]
