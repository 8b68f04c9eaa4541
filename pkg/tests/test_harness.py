import json
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monodeconv import (
    ConfigError,
    InvalidDimensionError,
    ParseError,
    ShapeError,
    SweepConfig,
    load_matrix,
    mse,
    run_sweep,
    save_matrix,
)
from monodeconv.cli import main
from monodeconv.harness import fit_slope, write_results
from monodeconv.matrix_io import read_sidecar


def sweep_cfg(tmp_path, **kw):
    d = dict(sizes=[[30, 30]], ps=[0.5], modes=["noiseless"], noise="gaussian:0.2",
             model="curved", seeds=[0, 1])
    d.update(kw)
    return SweepConfig.from_dict(d, output_path=str(tmp_path / "out.csv"))


class TestMse:
    def test_examples(self):
        a = np.arange(6.0).reshape(2, 3)
        assert mse(a, a) == 0.0
        assert mse(a + 1, a) == 1.0
        assert mse(np.zeros((2, 2)), np.array([[1.0, 0.0], [0.0, 2.0]])) == 1.25

    def test_shape(self):
        with pytest.raises(ShapeError):
            mse(np.zeros((2, 2)), np.zeros((2, 3)))

    @given(arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)),
           arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)))
    def test_non_negative_and_symmetric(self, a, b):
        assert mse(a, b) >= 0 and mse(a, b) == mse(b, a)


class TestSweepConfig:
    def test_validation(self, tmp_path):
        for kw in (dict(ps=[]), dict(ps=[0.0]), dict(ps=[1.2]), dict(modes=["fast"]),
                   dict(noise="laplace:1"), dict(seeds=[])):
            with pytest.raises(ConfigError):
                sweep_cfg(tmp_path, **kw)

    def test_missing_key(self):
        with pytest.raises(ConfigError):
            SweepConfig.from_dict({"ps": [0.5]})

    def test_seed_count_and_aliases(self, tmp_path):
        cfg = sweep_cfg(tmp_path, seeds=3, modes=["known"])
        assert cfg.seeds == (0, 1, 2) and cfg.modes == ("known_noise",)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            SweepConfig.from_json(path)


class TestRunSweep:
    def test_single_cell(self, tmp_path):
        cfg = sweep_cfg(tmp_path, sizes=[[100, 100]], seeds=[0])
        res = run_sweep(cfg)
        assert len(res.rows) == 1
        row = res.rows[0]
        assert np.isfinite(row["mse"]) and row["mse"] >= 0 and row["error"] == ""
        assert row["wall_time"] >= 0

    def test_deterministic_bytes(self, tmp_path):
        cfg = sweep_cfg(tmp_path, modes=["noiseless", "known"])
        run_sweep(cfg)
        first = (tmp_path / "out.csv").read_bytes()
        run_sweep(cfg)
        assert (tmp_path / "out.csv").read_bytes() == first
        lines = first.decode().splitlines()
        assert lines[0] == "m,n,p,mode,seed,mse,error" and len(lines) == 5

    def test_errors_recorded(self, tmp_path):
        cfg = sweep_cfg(tmp_path, modes=["unknown", "noiseless"], noise="none")
        res = run_sweep(cfg)
        unknown = [r for r in res.rows if r["mode"] == "unknown_noise"]
        assert all(r["error"].startswith("ConfigError") for r in unknown)
        assert all(np.isnan(r["mse"]) for r in unknown)
        assert all(np.isfinite(r["mse"]) for r in res.rows if r["mode"] == "noiseless")

    def test_config_order_and_workers(self, tmp_path):
        cfg = sweep_cfg(tmp_path, sizes=[[20, 20], [30, 30]], modes=["noiseless", "known"])
        serial = run_sweep(cfg, write=False)
        parallel = run_sweep(SweepConfig.from_dict(
            dict(sizes=[[20, 20], [30, 30]], ps=[0.5], modes=["noiseless", "known"],
                 noise="gaussian:0.2", model="curved", seeds=[0, 1], workers=2)), write=False)
        key = [(r["m"], r["mode"], r["seed"]) for r in serial.rows]
        assert key == [(m, md, s) for m in (20, 30) for md in ("noiseless", "known_noise")
                       for s in (0, 1)]
        assert [r["mse"] for r in serial.rows] == [r["mse"] for r in parallel.rows]

    def test_outputs(self, tmp_path):
        cfg = sweep_cfg(tmp_path, sizes=[[20, 20], [40, 40]])
        res = run_sweep(cfg)
        summary = json.loads((tmp_path / "out.summary.json").read_text())
        assert summary["slopes"]["noiseless"] == pytest.approx(res.slopes["noiseless"])
        assert len(summary["medians"]["noiseless"]) == 2
        timing = (tmp_path / "out.timing.csv").read_text().splitlines()
        assert timing[0] == "m,n,p,mode,seed,wall_time" and len(timing) == 5

    def test_single_size_slope_is_null(self, tmp_path):
        run_sweep(sweep_cfg(tmp_path))
        summary = json.loads((tmp_path / "out.summary.json").read_text())
        assert summary["slopes"]["noiseless"] is None


def test_fit_slope_exact():
    medians = {(n, n, 0.5): 3.0 / (n * 0.5) for n in (100, 200, 400)}
    assert fit_slope(medians) == pytest.approx(-1.0)
    assert np.isnan(fit_slope({(1, 1, 1.0): 1.0}))


@pytest.mark.slow
def test_known_mode_improves_with_size(tmp_path):
    cfg = SweepConfig.from_dict(dict(sizes=[[n, n] for n in (100, 200, 400, 800)], ps=[0.5],
                                     modes=["known"], noise="gaussian:0.2", model="curved",
                                     seeds=5), str(tmp_path / "k.csv"))
    res = run_sweep(cfg, write=False)
    med = [v for _, v in sorted(res.medians("known_noise").items())]
    assert sum(b > a for a, b in zip(med, med[1:])) <= 1


class TestMatrixIO:
    def test_example(self, tmp_path):
        path = tmp_path / "m.csv"
        save_matrix(path, np.array([[1.5, np.nan], [2.0, 3.0]]))
        assert path.read_text() == "1.5,\n2,3\n"
        values, mask = load_matrix(path)
        assert mask.tolist() == [[True, False], [True, True]]
        assert values[0, 0] == 1.5 and np.isnan(values[0, 1])

    def test_mask_argument(self, tmp_path):
        path = tmp_path / "m.csv"
        save_matrix(path, np.ones((2, 2)), mask=np.eye(2))
        assert path.read_text() == "1,\n,1\n"

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.one_of(st.floats(allow_infinity=False), st.just(np.nan))))
    def test_round_trip(self, values):
        fd, path = tempfile.mkstemp(suffix=".csv")
        os.close(fd)
        try:
            save_matrix(path, values)
            back, mask = load_matrix(path)
        finally:
            os.unlink(path)
        assert np.array_equal(back, values, equal_nan=True)
        assert np.array_equal(mask, ~np.isnan(values))

    def test_ragged(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ParseError, match="row 1"):
            load_matrix(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,abc\n")
        with pytest.raises(ParseError, match=r"row 1, column 1"):
            load_matrix(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("")
        with pytest.raises(InvalidDimensionError):
            load_matrix(path)


class TestCli:
    def test_pipeline(self, tmp_path, capsys):
        obs, truth, est = (str(tmp_path / f) for f in ("obs.csv", "truth.csv", "est.csv"))
        assert main(["generate", "--m", "30", "--n", "40", "--p", "0.6", "--model", "curved",
                     "--noise", "gaussian:0.2", "--seed", "3", "--out", obs,
                     "--truth-out", truth]) == 0
        meta = read_sidecar(obs)
        assert meta == {"m": 30, "n": 40, "p": 0.6, "seed": 3, "model": "curved",
                        "noise": "gaussian:0.2"}
        values, mask = load_matrix(obs)
        assert values.shape == (30, 40) and not mask.all()
        for mode in ("noiseless", "known", "unknown"):
            assert main(["estimate", "--mode", mode, "--in", obs, "--d1", "0", "--d2", "2",
                         "--grid", "256", "--out", est]) == 0
            capsys.readouterr()
            assert main(["evaluate", "--est", est, "--truth", truth]) == 0
            out = json.loads(capsys.readouterr().out)
            assert set(out) == {"mse"} and 0 <= out["mse"] < 1

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(dict(sizes=[[20, 20]], ps=[0.5], modes=["noiseless"],
                                       noise="none", model="affine:0,1,1", seeds=1)))
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == 0
        assert (tmp_path / "r.csv").read_text().startswith("m,n,p,mode,seed,mse,error\n20,20")

    def test_exit_codes(self, tmp_path):
        good = tmp_path / "g.csv"
        save_matrix(good, np.where(np.eye(3, dtype=bool), 1.0, np.nan))
        bad = tmp_path / "b.csv"
        bad.write_text("1,x\n")
        out = str(tmp_path / "e.csv")
        assert main(["generate", "--m", "3", "--n", "3", "--p", "0.5", "--noise", "cauchy:1",
                     "--out", out, "--truth-out", out]) == 2
        assert main(["estimate", "--mode", "known", "--in", str(good), "--out", out]) == 2
        assert main(["estimate", "--mode", "noiseless", "--in", str(bad), "--out", out]) == 3
        assert main(["estimate", "--mode", "noiseless", "--in", str(tmp_path / "missing.csv"),
                     "--out", out]) == 3
        assert main(["estimate", "--mode", "unknown", "--beta", "2", "--gamma", "0.02",
                     "--in", str(good), "--out", out]) == 4
