"""End-to-end command-line runs: artifact layouts, exit codes, and byte-level
determinism of repeated invocations."""
import warnings

import numpy as np
import pytest
from click.testing import CliRunner

from causalattr import (
    Dataset,
    DenseLayer,
    HighVarianceWarning,
    IllConditionedFitError,
    Network,
    load_network,
    save_dataset,
    save_network,
    save_sequence_dataset,
)
from causalattr.effects import read_sweep_csv
from causalattr.cli import main

from conftest import random_dataset, random_quadratic_net, random_sequences, zero_recurrence_gru


@pytest.fixture
def runner():
    return CliRunner()


def write_product_fixture(tmp):
    """Product net y = x0*x1 plus rows whose x1 column averages to 2."""
    net = Network((
        DenseLayer([[1.0, 1.0], [1.0, -1.0]], [0.0, 0.0], "square"),
        DenseLayer([[0.25, -0.25]], [0.0], "identity"),
    ))
    rows = [[0.2, 1.0], [0.5, 2.0], [0.8, 3.0], [0.4, 2.0]]
    net_path, data_path = str(tmp / "net.json"), str(tmp / "data.csv")
    save_network(net, net_path)
    save_dataset(Dataset(np.array(rows)), data_path)
    return net_path, data_path


def write_constant_fixture(tmp):
    net = Network((
        DenseLayer([[0.0, 0.0], [0.0, 0.0]], [7.0, 0.0], "identity"),
        DenseLayer([[1.0, 0.0]], [0.0], "identity"),
    ))
    rows = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 1.0], [3.0, 3.0]])
    net_path, data_path = str(tmp / "cnet.json"), str(tmp / "cdata.csv")
    save_network(net, net_path)
    save_dataset(Dataset(rows), data_path)
    return net_path, data_path


class TestSweep:
    def test_writes_num_rows_and_figure(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        out = str(tmp_path / "sweep.csv")
        result = runner.invoke(main, [
            "sweep", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--num", "7", "--output", out,
        ])
        assert result.exit_code == 0, result.output
        alphas, ie, ace, variances, base = read_sweep_csv(out)
        assert alphas.shape == (7,)
        assert np.all(np.isnan(variances))  # no regressor backing this sweep
        assert (tmp_path / "sweep.png").exists()

    def test_oracle_matches_exact_on_quadratic_net(self, runner, tmp_path):
        rng = np.random.default_rng(41)
        net_path = str(tmp_path / "quad.json")
        data_path = str(tmp_path / "quad.csv")
        save_network(random_quadratic_net(rng, 3), net_path)
        save_dataset(random_dataset(rng, 40, 3), data_path)
        ies = {}
        for method in ("exact", "oracle"):
            out = str(tmp_path / f"{method}.csv")
            result = runner.invoke(main, [
                "sweep", "--net", net_path, "--data", data_path,
                "--feature", "x1", "--num", "9", "--method", method,
                "--output", out,
            ])
            assert result.exit_code == 0, result.output
            _, ies[method], _, _, _ = read_sweep_csv(out)
        np.testing.assert_allclose(ies["exact"], ies["oracle"], atol=1e-9)

    def test_missing_feature_flag_exits_2(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, [
            "sweep", "--net", net_path, "--data", data_path,
            "--output", str(tmp_path / "s.csv"),
        ])
        assert result.exit_code == 2
        assert "Usage" in result.output

    def test_step_flag_rejected_for_feedforward(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, [
            "sweep", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--step", "2",
            "--output", str(tmp_path / "s.csv"),
        ])
        assert result.exit_code == 2

    def test_recurrent_sweep_requires_step(self, runner, tmp_path):
        net_path = str(tmp_path / "gru.json")
        data_path = str(tmp_path / "seqs.csv")
        save_network(zero_recurrence_gru(), net_path)
        save_sequence_dataset(random_sequences(np.random.default_rng(3), 12), data_path)
        args = ["sweep", "--net", net_path, "--data", data_path,
                "--feature", "x0", "--output", str(tmp_path / "s.csv")]
        assert runner.invoke(main, args).exit_code == 2
        result = runner.invoke(main, args + ["--step", "1"])
        assert result.exit_code == 0, result.output

    def test_rerun_is_byte_identical_including_figure(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        blobs = []
        for tag in ("one", "two"):
            out = str(tmp_path / f"{tag}.csv")
            result = runner.invoke(main, [
                "sweep", "--net", net_path, "--data", data_path,
                "--feature", "x0", "--num", "11", "--output", out,
            ])
            assert result.exit_code == 0, result.output
            with open(out, "rb") as fh:
                csv_bytes = fh.read()
            with open(str(tmp_path / f"{tag}.png"), "rb") as fh:
                png_bytes = fh.read()
            blobs.append((csv_bytes, png_bytes))
        assert blobs[0] == blobs[1]

    def test_thread_env_does_not_change_results(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        outputs = []
        for tag, env in (("serial", {}), ("pooled", {"ACE_THREADS": "4"})):
            out = str(tmp_path / f"{tag}.csv")
            result = runner.invoke(main, [
                "sweep", "--net", net_path, "--data", data_path,
                "--feature", "x0", "--num", "13", "--output", out,
            ], env=env)
            assert result.exit_code == 0, result.output
            with open(out, "rb") as fh:
                outputs.append(fh.read())
        assert outputs[0] == outputs[1]

    def test_unreadable_net_exits_3(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        _, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, [
            "sweep", "--net", str(bad), "--data", data_path,
            "--feature", "x0", "--output", str(tmp_path / "s.csv"),
        ])
        assert result.exit_code == 3

    def test_malformed_data_exits_3(self, runner, tmp_path):
        net_path, _ = write_product_fixture(tmp_path)
        bad = tmp_path / "bad.csv"
        bad.write_text("x0,x1\n1.0,oops\n")
        result = runner.invoke(main, [
            "sweep", "--net", net_path, "--data", str(bad),
            "--feature", "x0", "--output", str(tmp_path / "s.csv"),
        ])
        assert result.exit_code == 3

    def test_degenerate_domain_exits_4_naming_the_op(self, runner, tmp_path):
        net_path, _ = write_product_fixture(tmp_path)
        data_path = str(tmp_path / "flat.csv")
        rows = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
        save_dataset(Dataset(rows), data_path)
        result = runner.invoke(main, [
            "sweep", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--output", str(tmp_path / "s.csv"),
        ])
        assert result.exit_code == 4
        assert "sweep_feedforward" in result.output


class TestAce:
    def test_constant_net_has_zero_ace(self, runner, tmp_path):
        net_path, data_path = write_constant_fixture(tmp_path)
        out = str(tmp_path / "ace.csv")
        result = runner.invoke(main, [
            "ace", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--num", "9", "--max-order", "2",
            "--output", out,
        ])
        assert result.exit_code == 0, result.output
        _, ie, ace, variances, base = read_sweep_csv(out)
        assert base == pytest.approx(7.0, abs=1e-8)
        np.testing.assert_allclose(ace, 0.0, atol=1e-8)
        assert variances is not None and np.all(variances >= 0.0)

    def test_product_net_ace_is_2a_minus_1(self, runner, tmp_path):
        # E[y|do(x0=a)] = a*mean(x1) = 2a on [0,1], so baseline 1, ace 2a-1
        net_path, data_path = write_product_fixture(tmp_path)
        out = str(tmp_path / "ace.csv")
        result = runner.invoke(main, [
            "ace", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--num", "21", "--max-order", "2",
            "--low", "0", "--high", "1", "--output", out,
            "--alpha-at", "0.25",
        ])
        assert result.exit_code == 0, result.output
        alphas, ie, ace, _, base = read_sweep_csv(out)
        np.testing.assert_allclose(ace, 2.0 * alphas - 1.0, atol=1e-6)
        assert base == pytest.approx(1.0, abs=1e-6)
        assert (tmp_path / "ace.csv.regressor.json").exists()
        assert (tmp_path / "ace.png").exists()
        assert (tmp_path / "ace.ace.png").exists()
        reported = [line for line in result.output.splitlines()
                    if line.startswith("alpha=0.25")]
        assert len(reported) == 1
        value = float(reported[0].split("ace=")[1].split()[0])
        assert value == pytest.approx(-0.5, abs=1e-6)

    def test_sparse_grid_with_high_order_warns(self, runner, tmp_path):
        # y = 1 - x0^2 sweeps to the bump {0, 1, 0}: no low order fits it
        # tightly, so the predictive band stays wide on a 3-point grid
        net = Network((
            DenseLayer([[1.0, 0.0]], [0.0], "square"),
            DenseLayer([[-1.0]], [1.0], "identity"),
        ))
        net_path = str(tmp_path / "bump.json")
        save_network(net, net_path)
        data_path = str(tmp_path / "bump.csv")
        save_dataset(Dataset(np.array([[-0.5, 0.0], [0.0, 1.0], [0.5, 2.0]])),
                     data_path)
        with pytest.warns(HighVarianceWarning):
            result = runner.invoke(main, [
                "ace", "--net", net_path, "--data", data_path,
                "--feature", "x0", "--num", "3", "--max-order", "10",
                "--low", "-1", "--high", "1",
                "--output", str(tmp_path / "ace.csv"),
            ], catch_exceptions=False)
        assert result.exit_code == 0, result.output

    def test_ill_conditioned_fit_exits_5(self, runner, tmp_path, monkeypatch):
        net_path, data_path = write_product_fixture(tmp_path)

        def explode(*args, **kwargs):
            raise IllConditionedFitError("synthetic conditioning failure")

        monkeypatch.setattr("causalattr.cli.fit_regressor", explode)
        result = runner.invoke(main, [
            "ace", "--net", net_path, "--data", data_path,
            "--feature", "x0", "--output", str(tmp_path / "ace.csv"),
        ])
        assert result.exit_code == 5
        assert "fit_regressor" in result.output


class TestTau:
    def test_zero_recurrence_prints_0(self, runner, tmp_path):
        net_path = str(tmp_path / "gru.json")
        data_path = str(tmp_path / "seqs.csv")
        save_network(zero_recurrence_gru(), net_path)
        save_sequence_dataset(random_sequences(np.random.default_rng(5), 10), data_path)
        result = runner.invoke(main, ["tau", "--net", net_path, "--data", data_path])
        assert result.exit_code == 0, result.output
        assert result.output.strip() == "0"

    def test_feedforward_net_rejected(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, ["tau", "--net", net_path, "--data", data_path])
        assert result.exit_code == 2

    def test_step_beyond_data_exits_4(self, runner, tmp_path):
        net_path = str(tmp_path / "gru.json")
        data_path = str(tmp_path / "seqs.csv")
        save_network(zero_recurrence_gru(), net_path)
        save_sequence_dataset(random_sequences(np.random.default_rng(5), 10), data_path)
        result = runner.invoke(main, [
            "tau", "--net", net_path, "--data", data_path, "--step", "99",
        ])
        assert result.exit_code == 4
        assert "tau" in result.output


class TestSynthAndTrain:
    def test_synth_reruns_are_byte_identical(self, runner, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            seqs = str(tmp_path / f"{tag}.csv")
            labels = str(tmp_path / f"{tag}_labels.csv")
            result = runner.invoke(main, [
                "synth", "--n", "50", "--seed", "7",
                "--output", seqs, "--labels-out", labels,
            ])
            assert result.exit_code == 0, result.output
            with open(seqs, "rb") as fh:
                s = fh.read()
            with open(labels, "rb") as fh:
                l = fh.read()
            blobs.append((s, l))
        assert blobs[0] == blobs[1]
        header = blobs[0][1].decode().splitlines()[0]
        assert header == "seq_id,label"

    def test_train_mlp_persists_net_and_log(self, runner, tmp_path):
        rng = np.random.default_rng(11)
        half = 30
        rows = np.vstack([rng.normal(-1.5, 0.4, size=(half, 2)),
                          rng.normal(1.5, 0.4, size=(half, 2))])
        data_path = str(tmp_path / "blobs.csv")
        save_dataset(Dataset(rows), data_path)
        labels_path = tmp_path / "labels.csv"
        labels_path.write_text(
            "label\n" + "\n".join(["0"] * half + ["1"] * half) + "\n"
        )
        net_out = str(tmp_path / "mlp.json")
        log = str(tmp_path / "log.csv")
        result = runner.invoke(main, [
            "train", "--task", "mlp", "--data", data_path,
            "--labels", str(labels_path), "--hidden", "8",
            "--activation", "tanh", "--epochs", "200", "--lr", "0.1",
            "--net-out", net_out, "--log", log,
        ])
        assert result.exit_code == 0, result.output
        net = load_network(net_out)
        assert net.input_dim == 2
        assert (tmp_path / "log.csv").exists()
        assert (tmp_path / "log.png").exists()
        assert "accuracy" in result.output

    def test_train_csv_without_labels_exits_2(self, runner, tmp_path):
        _, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, [
            "train", "--task", "mlp", "--data", data_path,
            "--net-out", str(tmp_path / "n.json"),
        ])
        assert result.exit_code == 2

    def test_builtin_iris_is_not_a_sequence_task(self, runner, tmp_path):
        result = runner.invoke(main, [
            "train", "--task", "gru", "--data", "builtin:iris",
            "--net-out", str(tmp_path / "n.json"),
        ])
        assert result.exit_code == 2


class TestSaliency:
    def test_trained_gru_map_localizes_early_steps(self, runner, tmp_path):
        seqs = str(tmp_path / "seqs.csv")
        labels = str(tmp_path / "labels.csv")
        result = runner.invoke(main, [
            "synth", "--n", "80", "--seed", "0",
            "--output", seqs, "--labels-out", labels,
        ])
        assert result.exit_code == 0, result.output
        net_out = str(tmp_path / "gru.json")
        result = runner.invoke(main, [
            "train", "--task", "gru", "--data", seqs, "--labels", labels,
            "--epochs", "300", "--lr", "1.0", "--seed", "0",
            "--net-out", net_out,
        ])
        assert result.exit_code == 0, result.output
        out = str(tmp_path / "map.csv")
        with warnings.catch_warnings():
            # tail slots sweep nearly flat, so their relative bands run wide
            warnings.simplefilter("ignore", HighVarianceWarning)
            result = runner.invoke(main, [
                "saliency", "--net", net_out, "--data", seqs,
                "--instance-index", "0", "--out-step", "9", "--num", "9",
                "--method", "oracle", "--output", out,
            ], catch_exceptions=False)
        assert result.exit_code == 0, result.output
        with open(out, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "x0"
        values = np.array([float(v) for v in lines[1:]])
        assert values.shape == (10,)
        # the generator makes only the head informative; tail slots inert
        assert np.abs(values[:3]).max() > np.abs(values[3:]).max()
        pgm = (tmp_path / "map.pgm").read_text().splitlines()
        assert pgm[0] == "P2"
        assert pgm[1] == "1 10"
        assert (tmp_path / "map.png").exists()

    def test_feedforward_map_and_threshold(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        out = str(tmp_path / "map.csv")
        result = runner.invoke(main, [
            "saliency", "--net", net_path, "--data", data_path,
            "--instance-index", "1", "--num", "9", "--max-order", "3",
            "--threshold", "--output", out,
        ])
        assert result.exit_code == 0, result.output
        with open(out, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "x0,x1"
        values = np.array([float(v) for v in lines[1].split(",")])
        assert np.all(values >= 0.0)

    def test_instance_index_out_of_range_exits_2(self, runner, tmp_path):
        net_path, data_path = write_product_fixture(tmp_path)
        result = runner.invoke(main, [
            "saliency", "--net", net_path, "--data", data_path,
            "--instance-index", "99", "--output", str(tmp_path / "m.csv"),
        ])
        assert result.exit_code == 2
