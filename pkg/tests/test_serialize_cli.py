from __future__ import annotations

import json

import numpy as np
import pytest

from sparsehawkes.cli import main as cli_main
from sparsehawkes.kernels import ExponentialKernel
from sparsehawkes.model import LabeledSample, ModelParams, Path
from sparsehawkes.classify import ClassifierModel
from sparsehawkes.serialize import (model_from_dict, model_to_dict, params_from_dict,
                                    params_to_dict, path_from_dict, path_to_dict,
                                    read_dataset, write_dataset, write_params)
from sparsehawkes.simulate import ScenarioSpec, make_scenario, sample_dataset


class TestSerialize:
    def test_path_round_trip(self):
        p = Path(T=5.0, events=[np.array([0.5, 1.25]), np.empty(0)])
        d = json.loads(json.dumps(path_to_dict(p)))
        q = path_from_dict(d)
        assert q.T == p.T
        for a, b in zip(p.events, q.events):
            np.testing.assert_array_equal(a, b)

    def test_dataset_round_trip(self, tmp_path, kernel3):
        mix = make_scenario(ScenarioSpec(name="scenario1", M=3, seed=1))
        ds = sample_dataset(mix, 12, 3)
        f = tmp_path / "ds.jsonl"
        write_dataset(ds, f)
        back = read_dataset(f)
        assert len(back) == 12
        for a, b in zip(ds, back):
            assert a.label == b.label
            assert a.path.T == b.path.T
            for ea, eb in zip(a.path.events, b.path.events):
                np.testing.assert_array_equal(ea, eb)

    def test_params_round_trip(self):
        p = ModelParams(mu=np.array([0.4, 0.5]), A=np.array([[0.1, 0.0], [0.2, 0.3]]))
        q = params_from_dict(json.loads(json.dumps(params_to_dict(p))))
        np.testing.assert_array_equal(p.mu, q.mu)
        np.testing.assert_array_equal(p.A, q.A)

    def test_params_m_mismatch_rejected(self):
        d = {"M": 3, "mu": [0.1, 0.2], "A": [[0, 0], [0, 0]]}
        with pytest.raises(ValueError):
            params_from_dict(d)

    def test_model_round_trip(self, kernel3):
        params = (ModelParams(mu=np.array([0.4]), A=np.array([[0.2]])),
                  ModelParams(mu=np.array([0.7]), A=np.array([[0.1]])))
        model = ClassifierModel(p_hat=np.array([0.25, 0.75]), params=params,
                                kernel=kernel3, variant="ermlr", train_size=44)
        back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
        assert back.variant == "ermlr"
        assert back.train_size == 44
        assert back.kernel.beta == 3.0
        np.testing.assert_array_equal(back.p_hat, model.p_hat)
        for a, b in zip(model.params, back.params):
            np.testing.assert_array_equal(a.A, b.A)


class TestCli:
    def test_simulate_fit_train_predict(self, tmp_path, capsys):
        data = tmp_path / "train.jsonl"
        rc = cli_main(["simulate", "--scenario", "1", "--M", "3", "--n", "40",
                       "--seed", "5", "--out", str(data)])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["scenario"] == "scenario1" and report["M"] == 3
        assert len(read_dataset(data)) == 40

        fit_file = tmp_path / "fit.json"
        rc = cli_main(["fit", "--data", str(data), "--beta", "3", "--grid", "8",
                       "--out", str(fit_file), "--dump-stats", str(tmp_path / "stats.json")])
        assert rc == 0
        fit = json.loads(fit_file.read_text())
        assert len(fit["classes"]) == 3
        assert all("kappa_hat" in c and "support" in c and "ebic_trace" in c
                   for c in fit["classes"])
        stats = json.loads((tmp_path / "stats.json").read_text())
        assert set(stats.keys()) == {"1", "2", "3"}
        assert np.asarray(stats["1"]["G_bar"]).shape == (4, 4)

        model_file = tmp_path / "model.json"
        rc = cli_main(["train", "--data", str(data), "--beta", "3", "--mode", "ermlr",
                       "--out", str(model_file)])
        assert rc == 0
        model = json.loads(model_file.read_text())
        assert model["variant"] == "ermlr"
        assert len(model["classes"]) == 3

        labels_file = tmp_path / "labels.csv"
        rc = cli_main(["predict", "--model", str(model_file), "--data", str(data),
                       "--out", str(labels_file)])
        assert rc == 0
        lines = labels_file.read_text().splitlines()
        assert lines[0] == "sample,label"
        assert len(lines) == 41
        assert all(int(line.split(",")[1]) in (1, 2, 3) for line in lines[1:])

    def test_simulate_from_params_file(self, tmp_path, capsys):
        params = ModelParams(mu=np.array([0.5, 0.5]), A=np.array([[0.3, 0.1], [0.0, 0.2]]))
        pf = tmp_path / "params.json"
        write_params(params, pf)
        out = tmp_path / "sim.jsonl"
        rc = cli_main(["simulate", "--params", str(pf), "--n", "10", "--seed", "2",
                       "--out", str(out)])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["M"] == 2
        assert "expected_events_per_path" in report
        ds = read_dataset(out)
        assert len(ds) == 10
        assert all(s.label == 1 for s in ds)

    def test_benchmark_cli(self, tmp_path, capsys):
        config = {
            "scenario": "scenario1", "Ms": [3], "n_trains": [20], "n_test": 15,
            "repetitions": 1, "seed": 3,
            "lasso": {"grid_size": 6}, "erm": {"max_iter": 20},
        }
        cfg = tmp_path / "bench.json"
        cfg.write_text(json.dumps(config))
        out_dir = tmp_path / "results"
        rc = cli_main(["benchmark", "--config", str(cfg), "--out-dir", str(out_dir)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 1 and summary["failures"] == 0
        assert (out_dir / "metrics.csv").exists()
        assert (out_dir / "summary.csv").exists()
        assert (out_dir / "plotdata.json").exists()
