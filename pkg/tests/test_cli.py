"""Command line: ingest/compute round trips, exit codes, bench output."""

from __future__ import annotations

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from potgrid import Catalog, canonical_json
from potgrid.api_service import ServerConfig, create_app
from potgrid.cli import main, run_bench, synthetic_points
from potgrid.wire import decode_payload, report_text

CSV = "id,lon,lat,pop,area\na,5.0,45.0,120,4\nb,5.5,45.5,80,2\nc,4.5,44.5,40,1\n"


@pytest.fixture()
def catalog_dir(tmp_path):
    csv = tmp_path / "demo.csv"
    csv.write_text(CSV, encoding="utf-8")
    cat = tmp_path / "catalog"
    assert main(["ingest", str(csv), "--id", "demo", "--name", "Demo", "--catalog", str(cat)]) == 0
    return cat


def compute_args(catalog_dir, out, **extra):
    args = [
        "compute",
        "--catalog", str(catalog_dir),
        "--dataset", "demo",
        "--num", "pop",
        "--portee", "100",
        "--bbox", "4,44,6,46",
        "--size", "4x3",
        "-o", str(out),
    ]
    for flag, value in extra.items():
        args.append(f"--{flag}")
        if value is not None:
            args.append(str(value))
    return args


class TestIngest:
    def test_ingest_reports_shape(self, tmp_path, capsys):
        csv = tmp_path / "demo.csv"
        csv.write_text(CSV, encoding="utf-8")
        cat = tmp_path / "catalog"
        assert main(["ingest", str(csv), "--id", "demo", "--name", "Demo", "--catalog", str(cat)]) == 0
        out = capsys.readouterr().out
        assert "ingested demo: 3 points" in out
        assert "pop, area" in out
        assert Catalog(cat).list_stocks("demo") == ["pop", "area"]

    def test_missing_csv_is_an_io_error(self, tmp_path, capsys):
        code = main(["ingest", str(tmp_path / "ghost.csv"), "--id", "x", "--name", "X", "--catalog", str(tmp_path / "c")])
        assert code == 2
        assert "i/o error" in capsys.readouterr().err

    def test_bad_csv_is_a_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,lon,lat,pop\na,2,95,1\n", encoding="utf-8")
        code = main(["ingest", str(bad), "--id", "x", "--name", "X", "--catalog", str(tmp_path / "c")])
        assert code == 1
        assert "column 'lat'/'lon'" in capsys.readouterr().err


class TestCompute:
    def test_single_grid_and_report(self, catalog_dir, tmp_path):
        out = tmp_path / "out.json"
        rep = tmp_path / "rep.txt"
        assert main(compute_args(catalog_dir, out, report=rep)) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert out.read_text(encoding="utf-8") == canonical_json(payload)
        values = decode_payload(payload)
        assert values.shape == (3, 4)
        assert (values > 0).all()
        assert payload["meta"]["slot"] == "num1"
        assert rep.read_text(encoding="utf-8") == report_text(payload)

    def test_denominator_and_second_scale_write_the_full_set(self, catalog_dir, tmp_path):
        out = tmp_path / "out.json"
        assert main(compute_args(catalog_dir, out, den="area", portee2="200")) == 0
        names = sorted(p.name for p in tmp_path.glob("out*.json"))
        assert names == [
            "out.den.json",
            "out.den.p2.json",
            "out.diff.json",
            "out.json",
            "out.p2.json",
            "out.ratio.json",
            "out.ratio.p2.json",
        ]
        num = decode_payload(json.loads((tmp_path / "out.json").read_text()))
        den = decode_payload(json.loads((tmp_path / "out.den.json").read_text()))
        ratio = decode_payload(json.loads((tmp_path / "out.ratio.json").read_text()))
        np.testing.assert_array_equal(ratio, (num / den).astype(np.float32))
        r2 = decode_payload(json.loads((tmp_path / "out.ratio.p2.json").read_text()))
        diff = decode_payload(json.loads((tmp_path / "out.diff.json").read_text()))
        np.testing.assert_array_equal(diff, (r2 - ratio).astype(np.float32))
        meta = json.loads((tmp_path / "out.diff.json").read_text())["meta"]
        assert meta["kind"] == "difference"
        assert meta["slot"] == "diff"

    def test_payload_bytes_match_the_http_service(self, catalog_dir, tmp_path):
        out = tmp_path / "out.json"
        assert main(compute_args(catalog_dir, out, den="area", portee2="200", epsilon="0.001")) == 0
        app = create_app(ServerConfig(catalog_dir=catalog_dir, tokens=("t",)), Catalog(catalog_dir))
        req = {
            "dataset": "demo",
            "num": "pop",
            "den": "area",
            "kernel": {"kind": "gaussian", "portee_km": 100.0},
            "portee2_km": 200.0,
            "grid": {"bbox": {"west": 4.0, "south": 44.0, "east": 6.0, "north": 46.0}, "width": 4, "height": 3},
            "epsilon": 0.001,
        }
        r = TestClient(app).post("/api/grid", json=req, headers={"Authorization": "Bearer t"})
        served = r.json()
        files = ["out.json", "out.den.json", "out.p2.json", "out.den.p2.json"]
        for payload, name in zip(served, files):
            assert canonical_json(payload) == (tmp_path / name).read_text(encoding="utf-8")

    def test_naive_flag_marks_meta_and_agrees_with_tree(self, catalog_dir, tmp_path):
        fast = tmp_path / "fast.json"
        slow = tmp_path / "slow.json"
        assert main(compute_args(catalog_dir, fast, epsilon="0")) == 0
        assert main(compute_args(catalog_dir, slow, epsilon="0", naive=None)) == 0
        p_fast = json.loads(fast.read_text())
        p_slow = json.loads(slow.read_text())
        assert p_fast["meta"]["naive"] is False
        assert p_slow["meta"]["naive"] is True
        np.testing.assert_allclose(decode_payload(p_fast), decode_payload(p_slow), rtol=1e-6)

    def test_unknown_dataset_is_a_validation_error(self, catalog_dir, tmp_path, capsys):
        args = compute_args(catalog_dir, tmp_path / "o.json")
        args[args.index("demo")] = "ghost"
        assert main(args) == 1
        assert "ghost" in capsys.readouterr().err

    def test_negative_portee_is_a_validation_error(self, catalog_dir, tmp_path, capsys):
        args = compute_args(catalog_dir, tmp_path / "o.json")
        args[args.index("--portee") + 1] = "-5"
        assert main(args) == 1

    def test_malformed_bbox_is_a_validation_error(self, catalog_dir, tmp_path, capsys):
        args = compute_args(catalog_dir, tmp_path / "o.json")
        args[args.index("--bbox") + 1] = "4,44,6"
        assert main(args) == 1
        assert "west,south,east,north" in capsys.readouterr().err

    def test_unwritable_output_is_an_io_error(self, catalog_dir, tmp_path):
        out = tmp_path / "missing-dir" / "out.json"
        assert main(compute_args(catalog_dir, out)) == 2

    def test_unknown_flag_is_a_validation_error(self, catalog_dir, tmp_path, capsys):
        assert main(compute_args(catalog_dir, tmp_path / "o.json") + ["--turbo"]) == 1


class TestSyntheticPoints:
    def test_seeded_and_bounded(self):
        a = synthetic_points(50, seed=7)
        b = synthetic_points(50, seed=7)
        c = synthetic_points(50, seed=8)
        assert [(p.location.lat, p.location.lon) for p in a] == [(p.location.lat, p.location.lon) for p in b]
        assert [(p.location.lat, p.location.lon) for p in a] != [(p.location.lat, p.location.lon) for p in c]
        assert len(a) == 50
        for p in a:
            assert -10.0 <= p.location.lon <= 30.0
            assert 36.0 <= p.location.lat <= 60.0
            assert 10.0 <= p.stocks["stock"] < 1000.0


class TestBench:
    def test_run_bench_shape_and_error_sweep(self):
        result = run_bench(300, 24, 18, 150.0, epsilons=(0.0, 1e-3, 1e-2))
        assert result["naive_seconds"] > 0
        assert [row["epsilon"] for row in result["rows"]] == [0.0, 1e-3, 1e-2]
        errs = [row["max_rel_err"] for row in result["rows"]]
        assert errs[0] <= 1e-12  # no cut-off, only summation order differs
        assert errs[0] <= errs[1] + 1e-15 and errs[1] <= errs[2] + 1e-15
        assert result["nyquist_min_portee_km"] > 0

    def test_skip_naive_leaves_errors_unmeasured(self):
        result = run_bench(200, 12, 9, 150.0, run_naive=False)
        assert result["naive_seconds"] is None
        assert result["rows"][0]["max_rel_err"] is None

    def test_bench_command_prints_table_and_speedup(self, capsys):
        assert main(["bench", "--n", "200", "--size", "16x12", "--portee", "150"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0].split() == ["samples", "grid", "portee_km", "path", "seconds", "max_rel_err"]
        assert any(line.lstrip().startswith("200") and "naive" in line for line in lines)
        assert any("quadtree eps=0.001" in line for line in lines)
        assert lines[-1].startswith("speedup (naive / quadtree eps=0.001):")

    def test_bench_skip_naive_output(self, capsys):
        assert main(["bench", "--n", "100", "--size", "8x6", "--portee", "150", "--skip-naive"]) == 0
        out = capsys.readouterr().out
        assert "naive" not in out.replace("naive /", "")
        assert "speedup" not in out


class TestServe:
    def test_listen_and_timeout_parsing(self, tmp_path, monkeypatch):
        seen = {}

        def fake_run(app, host, port, log_level):
            seen.update(host=host, port=port)

        monkeypatch.setattr("uvicorn.run", fake_run)
        code = main([
            "serve",
            "--listen", "0.0.0.0:9001",
            "--catalog", str(tmp_path),
            "--token", "alpha",
            "--timeout", "0",
        ])
        assert code == 0
        assert seen == {"host": "0.0.0.0", "port": 9001}

    def test_token_is_required(self, tmp_path, capsys):
        assert main(["serve", "--catalog", str(tmp_path)]) == 1
