import copy
import csv
import filecmp
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stirapnet import __version__
from stirapnet.cli import main
from stirapnet.config import Units, load_config, shipped_config
from stirapnet.errors import ConfigurationError, IntegrationError
from stirapnet.output import svg_line_plot


def raw_config(name):
    """The shipped scenario file as written, without defaults filled in."""
    return json.loads(shipped_config(name).read_text())


def write_cfg(path, cfg):
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def swap_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("swap")
    assert main(["run", "swap", "--out", str(out), "--svg"]) == 0
    return out


class TestRun:
    def test_outputs(self, swap_out):
        for name in ("timeseries.csv", "wigner.csv", "manifest.json", "plot.svg"):
            assert (swap_out / name).exists()
        header, rows = read_csv(swap_out / "timeseries.csv")
        assert header == ["time", "qubitA", "spinsTotal", "cavityA", "sink",
                          "control_opticalLeg", "control_qubitLeg"]
        assert len(rows) == 2001

    def test_bookkeeping_on_every_row(self, swap_out):
        header, rows = read_csv(swap_out / "timeseries.csv")
        data = np.array(rows, dtype=float)
        pops = data[:, 1:5]
        assert np.max(np.abs(pops.sum(axis=1) - 1)) < 1e-6
        assert pops.min() > -1e-6

    def test_manifest(self, swap_out):
        m = json.loads((swap_out / "manifest.json").read_text())
        assert m["software"]["version"] == __version__
        assert m["seed"] == 0
        assert m["wall_clock_seconds"] > 0
        for key in ("peak_fidelity", "peak_time", "final_loss"):
            assert math.isfinite(m["metrics"][key])
        # defaults are written out in full
        cfg = m["config"]
        assert cfg["integrator"] == {"rel_tol": 1e-8, "abs_tol": 1e-10, "samples": 2001}
        assert cfg["output"]["wigner_points"] == 201

    def test_manifest_round_trip(self, swap_out, tmp_path):
        assert main(["run", str(swap_out / "manifest.json"), "--out", str(tmp_path)]) == 0
        a = json.loads((swap_out / "manifest.json").read_text())
        b = json.loads((tmp_path / "manifest.json").read_text())
        assert a["metrics"] == b["metrics"]
        assert a["config"] == b["config"]
        for name in ("timeseries.csv", "wigner.csv"):
            assert filecmp.cmp(swap_out / name, tmp_path / name, shallow=False)

    def test_wigner_csv(self, swap_out):
        header, rows = read_csv(swap_out / "wigner.csv")
        assert header == ["re_alpha", "im_alpha", "W"]
        data = np.array(rows, dtype=float)
        assert len(data) == 201 * 201
        step = data[1, 0] - data[0, 0]
        assert abs(data[:, 2].sum() * step ** 2 - 1) < 0.02
        # a mostly one-photon cavity: negative at the origin
        origin = np.argmin(np.abs(data[:, 0]) + np.abs(data[:, 1]))
        assert data[origin, 2] < 0

    def test_svg_parses(self, swap_out):
        root = ET.fromstring((swap_out / "plot.svg").read_text())
        assert root.tag.endswith("svg")
        assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == 4

    def test_seed_flag_recorded(self, tmp_path):
        cfg = raw_config("swap")
        cfg["integrator"] = {"samples": 101}
        path = write_cfg(tmp_path / "c.json", cfg)
        assert main(["run", path, "--out", str(tmp_path / "o"), "--seed", "5", "--tol", "1e-6"]) == 0
        m = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert m["seed"] == 5
        assert m["config"]["integrator"]["rel_tol"] == 1e-6

    def test_zero_couplings(self, tmp_path):
        cfg = raw_config("swap")
        cfg["node"]["coupling"] = {"value": 0.0, "unit": "MHz-angular"}
        cfg["output"] = {"wigner_time": None}
        assert main(["run", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "timeseries.csv")
        data = np.array(rows, dtype=float)
        q = data[:, header.index("qubitA")]
        t = data[:, 0]
        assert np.all(np.diff(q) <= 0)
        assert np.max(np.abs(q - np.exp(-t))) < 1e-6
        assert np.max(np.abs(data[:, header.index("cavityA")])) < 1e-12
        m = json.loads((tmp_path / "manifest.json").read_text())
        assert m["metrics"]["peak_fidelity"] < 1e-6


class TestErrors:
    def test_unknown_key(self, tmp_path, capsys):
        cfg = raw_config("swap")
        cfg["node"]["colour"] = 3
        assert main(["run", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "node" in err and "colour" in err

    def test_bad_unit_reports_path(self, tmp_path, capsys):
        cfg = raw_config("swap")
        cfg["node"]["kappa"]["unit"] = "GHz"
        assert main(["run", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 2
        assert "node/kappa/unit" in capsys.readouterr().err

    def test_malformed_json_reports_line(self, tmp_path, capsys):
        p = tmp_path / "c.json"
        p.write_text('{\n  "scenario": "swap",\n  "seed": ,\n}')
        assert main(["run", str(p)]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_missing_file_and_unknown_scenario(self, capsys):
        assert main(["run", "/nonexistent/cfg.json"]) == 2
        assert main(["run", "no-such-scenario"]) == 2

    def test_missing_blocks(self, tmp_path):
        assert main(["sweep", "swap", "--out", str(tmp_path)]) == 2
        assert main(["calibrate", "swap", "--out", str(tmp_path)]) == 2

    def test_integration_error_exit_code(self, tmp_path, capsys, monkeypatch):
        def boom(cfg):
            raise IntegrationError("step size underflow", 0.0123)

        monkeypatch.setattr("stirapnet.cli.run_scenario", boom)
        assert main(["run", "swap", "--out", str(tmp_path)]) == 3
        assert "t=0.0123" in capsys.readouterr().err

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out


def sweep_cfg(kappa, coupling, policy="fixed"):
    cfg = raw_config("sweep")
    cfg["sweep"]["kappa"] = kappa
    cfg["sweep"]["coupling"] = coupling
    cfg["sweep"]["pulse_policy"] = policy
    return cfg


class TestSweep:
    def test_single_cell_matches_run(self, tmp_path, swap_out):
        cfg = sweep_cfg({"start": 7.5, "stop": 7.5, "num": 1, "unit": "ratio"},
                        {"start": 105.0, "stop": 105.0, "num": 1, "unit": "MHz-angular"})
        assert main(["sweep", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 0
        header, rows = read_csv(tmp_path / "grid.csv")
        assert header == ["kappa", "g", "peakFidelity", "peakTime", "width", "delayFactor",
                          "inRegion", "pass", "error"]
        assert len(rows) == 1
        ref = json.loads((swap_out / "manifest.json").read_text())["metrics"]
        assert float(rows[0][2]) == pytest.approx(ref["peak_fidelity"], abs=1e-12)
        assert float(rows[0][3]) == pytest.approx(ref["peak_time"], abs=1e-12)

    def test_vanishing_coupling_row(self, tmp_path):
        cfg = sweep_cfg({"start": 7.5, "stop": 7.5, "num": 1, "unit": "ratio"},
                        {"start": 0.0, "stop": 20.0, "num": 5, "unit": "MHz-angular"})
        cfg["integrator"]["samples"] = 401
        assert main(["sweep", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "grid.csv")
        g = [float(r[1]) for r in rows]
        f = [float(r[2]) for r in rows]
        assert g == sorted(g)
        assert f[0] < 1e-6
        assert all(b > a for a, b in zip(f, f[1:]))

    def test_failing_cell_is_recorded(self, tmp_path, monkeypatch):
        import stirapnet.scenarios as sc

        real = sc._swap_peak

        def flaky(cfg, units, kappa, g, *a, **kw):
            if kappa > 10:
                raise IntegrationError("step size underflow", 0.01)
            return real(cfg, units, kappa, g, *a, **kw)

        monkeypatch.setattr(sc, "_swap_peak", flaky)
        cfg = sweep_cfg({"start": 7.5, "stop": 12.5, "num": 2, "unit": "ratio"},
                        {"start": 105.0, "stop": 105.0, "num": 1, "unit": "MHz-angular"})
        cfg["integrator"]["samples"] = 401
        assert main(["sweep", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "grid.csv")
        assert rows[0][8] == "" and float(rows[0][2]) > 0.8
        assert "underflow" in rows[1][8] and rows[1][7] == "false"


class TestCalibrate:
    @pytest.mark.parametrize("target,floor", [("network-nv", 0.93), ("network-er", 0.95)])
    def test_degenerate_bounds_evaluate_once(self, tmp_path, target, floor):
        cfg = raw_config(target)
        width = cfg["pulse"]["width"]
        center = cfg["pulse"]["center"]
        cfg["scenario"] = "calibrate"
        cfg["calibrate"] = {"target": target, "width": [width, width], "center": [center, center]}
        assert main(["calibrate", write_cfg(tmp_path / "c.json", cfg), "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "calibration.json").read_text())
        assert doc["evaluations"] == 1
        assert doc["parameters"]["width"] == width["value"]
        assert doc["parameters"]["center"] == center["value"]
        assert doc["peak_fidelity"] >= floor
        frozen = load_config(str(tmp_path / "calibrated.json"))
        assert frozen["scenario"] == target
        assert "calibrate" not in frozen


def test_time_units():
    cfg = raw_config("swap")
    units = Units.from_config(cfg)
    # 3 ns against gamma1 = 0.4 MHz (angular): 3e-3 us * 2 pi * 0.4 / us
    assert units.time({"value": 3.0, "unit": "ns"}) == pytest.approx(3e-3 * 2 * math.pi * 0.4, rel=1e-14)
    assert units.time({"value": 3.0, "unit": "ns"}) == pytest.approx(0.00754, abs=1e-5)
    assert units.rate({"value": 3.0, "unit": "MHz-angular"}) == pytest.approx(7.5)
    with pytest.raises(ConfigurationError):
        units.rate({"value": 1.0, "unit": "ns"})


def test_svg_series_limit():
    x = np.linspace(0, 1, 5)
    svg_line_plot(x, {f"s{k}": x for k in range(8)}, "t", "x", "y")
    with pytest.raises(ConfigurationError):
        svg_line_plot(x, {f"s{k}": x for k in range(9)}, "t", "x", "y")


def test_shipped_configs_validate():
    for name in ("swap", "swap-constant-chirp", "sweep", "network-nv", "network-er", "calibrate"):
        cfg = load_config(name)
        assert cfg["scenario"] == name
        assert copy.deepcopy(cfg) == load_config(name)
