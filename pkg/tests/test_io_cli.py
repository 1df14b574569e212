import json
import subprocess
import sys

import numpy as np
import pytest

from nls6 import cli
from nls6.dynamics import IntegratorConfig, evolve, series_columns
from nls6.grids import FieldPair, RadialGrid, TensorGrid, random_gaussian_pair
from nls6.io import (load_config, read_series_csv, read_snapshot, validate_config, write_series_csv,
                     write_snapshot)


class TestSnapshot:
    @pytest.mark.parametrize("grid", [RadialGrid(100, 7.0), TensorGrid(2, 5.0, 8), TensorGrid(3, 4.0, 4)])
    def test_round_trip_bit_exact(self, tmp_path, grid):
        fp = random_gaussian_pair(grid, 0.37, np.random.default_rng(5))
        write_snapshot(tmp_path / "s.nls6", fp, 1.25)
        back, t = read_snapshot(tmp_path / "s.nls6")
        assert t == 1.25 and back.kappa == 0.37 and back.grid.describe() == grid.describe()
        assert back.u.tobytes() == fp.u.tobytes() and back.v.tobytes() == fp.v.tobytes()

    def test_header_layout(self, tmp_path):
        g = RadialGrid(16, 2.0)
        write_snapshot(tmp_path / "s", FieldPair(np.ones(16), np.zeros(16), 1.0, g), 0.0)
        raw = (tmp_path / "s").read_bytes()
        assert raw[:8] == b"NLS6SNAP"
        assert int.from_bytes(raw[8:12], "little") == 1 and raw[12] == 0
        assert int.from_bytes(raw[13:17], "little") == 6 and int.from_bytes(raw[17:25], "little") == 16
        assert len(raw) == 49 + 2 * 16 * 16

    def test_corrupt(self, tmp_path):
        p = tmp_path / "bad"
        p.write_bytes(b"NOTASNAP" + bytes(60))
        with pytest.raises(ValueError):
            read_snapshot(p)
        g = RadialGrid(16, 2.0)
        write_snapshot(p, FieldPair(np.ones(16), np.zeros(16), 1.0, g), 0.0)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_snapshot(p)

    def test_resume_reproduces_series(self, tmp_path):
        g = TensorGrid(2, 20.0, 32)
        x, y = g.x
        fp = FieldPair(np.exp(-(x ** 2 + y ** 2) / 2) * np.exp(0.5j * x), 0.5 * np.exp(-(x ** 2 + y ** 2)), 0.5, g)
        cfg = IntegratorConfig(dt0=1e-2, t_end=1.0, record_every=5, snapshot_every=20)
        full = evolve(fp, cfg)
        t_s, snap = full.snapshots[2]
        write_snapshot(tmp_path / "snap", snap, t_s)
        fp2, t0 = read_snapshot(tmp_path / "snap")
        part = evolve(fp2, IntegratorConfig(dt0=1e-2, t_end=1.0 - t0, record_every=5), t0=t0)
        idx = np.searchsorted(full.series["t"], part.series["t"][0])
        for col in series_columns(2):
            if col in ("S_accum", "Iddot_fd"):
                continue
            a = full.series[col][idx:]
            b = part.series[col][:len(a)]
            if col == "dt":
                # the first row of a run has no preceding step
                a, b = a[1:], b[1:]
            np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-10, err_msg=col)


def test_csv_header_and_round_trip(tmp_path):
    assert ",".join(series_columns(6)) == ("t,M,E,H,R,K,Px1,Px2,Px3,Px4,Px5,Px6,I,Idot,Iddot_formula,"
                                          "Iddot_fd,S_accum,lambda_scale,dt")
    assert ",".join(series_columns(2)).startswith("t,M,E,H,R,K,Px,Py,I,")
    series = {c: np.random.default_rng(0).normal(size=4) for c in series_columns(2)}
    write_series_csv(tmp_path / "s.csv", series, series_columns(2))
    back = read_series_csv(tmp_path / "s.csv")
    for c in series_columns(2):
        np.testing.assert_array_equal(back[c], series[c])


class TestConfig:
    base = {"kappa": 0.5, "grid": {"type": "radial", "n": 64, "r_max": 10.0}, "init": {"kind": "cW", "c": 0.5}}

    def test_valid(self):
        validate_config(dict(self.base))

    @pytest.mark.parametrize("patch", [{"extra": 1}, {"kappa": -1}, {"init": {"kind": "cW"}},
                                       {"grid": {"type": "radial", "n": 64, "r_max": 10.0, "m": 3}},
                                       {"integrator": {"dt0": 1e-3, "bogus": 2}}])
    def test_rejected(self, patch):
        with pytest.raises(ValueError):
            validate_config({**self.base, **patch})

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(self.base).replace("0.5", "NaN", 1))
        with pytest.raises(ValueError):
            load_config(p)


# ------------------------------------------------------------------ CLI

def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


class TestCLI:
    def test_verify_defaults(self, capsys):
        code, out = run_cli(capsys, "verify-ground-state")
        cert = json.loads(out.out)
        assert code == 0 and cert["pohozaev_dev"] < 1e-6
        assert {"kappa", "H_W", "E_W", "R_W", "C_GN", "res1", "res2", "pohozaev_dev"} <= set(cert)

    def test_verify_coarse_fails(self, capsys):
        code, out = run_cli(capsys, "verify-ground-state", "--n", "32")
        assert code == 2 and json.loads(out.out)["res1"] > 1e-4

    def test_verify_bad_kappa(self, capsys):
        assert run_cli(capsys, "verify-ground-state", "--kappa", "-1")[0] == 1
        assert run_cli(capsys, "verify-ground-state", "--kappa", "abc")[0] == 1

    @pytest.mark.parametrize("c, pred", [("0.5", "Scatter"), ("1.2", "BlowUp"),
                                         ("1.0", "Outside(threshold-degenerate)")])
    def test_classify(self, capsys, c, pred):
        code, out = run_cli(capsys, "classify", "--init", f"cW:{c}", "--kappa", "0.5", "--n", "4096")
        assert code == 0 and json.loads(out.out)["prediction"] == pred

    @pytest.mark.parametrize("init", ["cW", "gauss:1", "cW:x", "cW:nan"])
    def test_classify_malformed(self, capsys, init):
        assert run_cli(capsys, "classify", "--init", init)[0] == 1

    def test_simulate_missing_config(self, capsys, tmp_path):
        assert run_cli(capsys, "simulate", "--config", str(tmp_path / "none.json"))[0] == 1

    def _write(self, tmp_path, **kw):
        cfg = {"kappa": 0.5, "grid": {"type": "radial", "n": 2048, "r_max": 200.0},
               "init": {"kind": "cW", "c": 0.5},
               "integrator": {"dt0": 2e-3, "t_end": 1.0, "record_every": 50, "snapshot_every": 250},
               "outputs": {"dir": str(tmp_path / "out")}}
        cfg.update(kw)
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        return p

    def test_simulate_scatter_preset(self, capsys, tmp_path):
        code, out = run_cli(capsys, "simulate", "--config", str(self._write(tmp_path)))
        assert code == 0
        d = tmp_path / "out"
        header = (d / "series.csv").read_text().splitlines()[0]
        assert header == ",".join(series_columns(6))
        s = read_series_csv(d / "series.csv")
        verdict = json.loads((d / "verdict.json").read_text())
        assert s["H"].max() < verdict["evidence"]["H_W"]
        assert verdict["prediction"] == "Scatter"
        snaps = sorted(d.glob("snap_*.nls6"))
        assert len(snaps) >= 2
        fp, t = read_snapshot(snaps[-1])
        assert t == pytest.approx(1.0)

    def test_simulate_blowup_preset(self, capsys, tmp_path):
        p = self._write(tmp_path, init={"kind": "cW", "c": 1.3},
                        integrator={"dt0": 2e-3, "t_end": 20.0, "record_every": 500})
        code, out = run_cli(capsys, "simulate", "--config", str(p))
        verdict = json.loads(out.out)
        assert code == 0 and verdict["observed"] == "BlowUpDetected" and verdict["consistent"]

    def test_simulate_dt_floor_exit_3(self, capsys, tmp_path):
        p = self._write(tmp_path, integrator={"dt0": 1e-3, "dt_min": 5e-4, "cfl_c": 1e-5, "t_end": 0.01},
                        outputs={"dir": str(tmp_path / "o"), "snapshots": False})
        assert run_cli(capsys, "simulate", "--config", str(p))[0] == 3

    def test_simulate_gaussian_tensor(self, capsys, tmp_path):
        p = self._write(tmp_path, grid={"type": "tensor", "d": 2, "m": 32, "L": 20.0},
                        init={"kind": "gaussian", "amp": 0.5, "width": 1.5, "center": [0.5, 0.0],
                              "phase_xi": [0.0, 0.0]},
                        integrator={"dt0": 1e-2, "t_end": 0.1, "record_every": 2})
        code, out = run_cli(capsys, "simulate", "--config", str(p))
        assert code == 0
        header = (tmp_path / "out" / "series.csv").read_text().splitlines()[0]
        assert header == ",".join(series_columns(2))

    def test_simulate_from_snapshot(self, capsys, tmp_path):
        g = RadialGrid(2048, 200.0)
        from nls6.ground_state import ground_state_closed_form
        write_snapshot(tmp_path / "start.nls6", ground_state_closed_form(0.5, g).scaled(0.5), 0.25)
        p = self._write(tmp_path, init={"kind": "snapshot", "path": str(tmp_path / "start.nls6")},
                        integrator={"dt0": 2e-3, "t_end": 0.1, "record_every": 10})
        assert run_cli(capsys, "simulate", "--config", str(p))[0] == 0
        s = read_series_csv(tmp_path / "out" / "series.csv")
        assert s["t"][0] == 0.25 and s["t"][-1] == pytest.approx(0.35)

    def test_sweep_parse(self):
        assert cli.parse_sweep("c=0.2:0.9:0.1") == [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        for bad in ("k=0:1:0.1", "c=0:1", "c=1:0:0.1", "c=0:1:0"):
            with pytest.raises(cli.UsageError):
                cli.parse_sweep(bad)

    def test_batch_deterministic_across_jobs(self, capsys, tmp_path, monkeypatch):
        args = ["batch", "--sweep", "c=0.5:1.3:0.8", "--n", "1024", "--rmax", "100", "--t-end", "0.5",
                "--dt0", "2e-3", "--record-every", "25"]
        monkeypatch.delenv("NLS6_THREADS", raising=False)
        assert run_cli(capsys, *args, "--jobs", "1", "--out", str(tmp_path / "a.csv"))[0] == 0
        monkeypatch.setenv("NLS6_THREADS", "2")
        assert run_cli(capsys, *args, "--jobs", "1", "--out", str(tmp_path / "b.csv"))[0] == 0
        a, b = (tmp_path / "a.csv").read_text(), (tmp_path / "b.csv").read_text()
        assert a == b
        rows = a.splitlines()
        assert rows[0].startswith("c,prediction,observed") and len(rows) == 3
        assert "Scatter" in rows[1] and "BlowUp" in rows[2]


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "nls6.cli", "classify", "--init", "cW:0.5", "--n", "1024"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["prediction"] == "Scatter"
