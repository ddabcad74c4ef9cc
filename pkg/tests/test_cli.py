import json

import pytest

from opident.cli import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, ExtrapolationWarning, main
from opident.config import DEFAULTS, ConfigError, load_config
from opident.data import load_csv
from opident.model import IdentifiedModel
from opident.sweep import parse_report_csv

FAST = """
[trainer.lm]
max_epochs = 30
"""

TINY_SWEEP = """
[trainer.lm]
max_epochs = 5

[data]
stride = 8

[sweep]
layer_counts = [1]
neuron_counts = [3]
"""


@pytest.fixture(scope="module")
def corpora(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["gen-data", "reactor", "--out", str(out)]) == EXIT_OK
    assert main(["gen-data", "servo", "--out", str(out)]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def trained(corpora, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    cfg = out / "fast.toml"
    cfg.write_text(FAST)
    assert main(["train", str(corpora / "reactor.csv"), "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    return out


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestGenData:
    def test_row_counts(self, corpora):
        assert len(load_csv(corpora / "reactor.csv")) == 1128
        assert len(load_csv(corpora / "servo.csv")) == 90000
        prov = json.loads((corpora / "reactor.provenance.json").read_text())
        assert prov["rows"] == 1128 and prov["series"] == 8
        assert prov["effective_config"]["reactor"]["worth_mk"] == -10.0

    def test_invalid_drop_names_field(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.toml", "[reactor]\ndrops = [30, 40]\n")
        assert main(["gen-data", "reactor", "--config", cfg, "--out", str(tmp_path)]) == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "reactor.drops" in err and "40" in err

    def test_deterministic(self, corpora, tmp_path):
        assert main(["gen-data", "reactor", "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "reactor.csv").read_bytes() == (corpora / "reactor.csv").read_bytes()


class TestTrainPredict:
    def test_outputs(self, trained):
        result = json.loads((trained / "train_result.json").read_text())
        assert result["trainer"] == "lm"
        assert result["epochs_run"] == len(result["epoch_losses"])
        assert result["layout"] == "reactor"
        model = IdentifiedModel.load(trained / "model.json")
        assert model.input_names == ("rod_fraction", "t_s", "initial_power_pct", "drop_pct")

    def test_same_seed_same_files(self, corpora, trained, tmp_path):
        cfg = write(tmp_path, "fast.toml", FAST)
        assert main(["train", str(corpora / "reactor.csv"), "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "model.json").read_bytes() == (trained / "model.json").read_bytes()

    def test_predict_training_row(self, trained, capsys):
        result = json.loads((trained / "train_result.json").read_text())
        model = trained / "model.json"
        assert main(["predict", str(model), "--row", "0,0,100,30"]) == EXIT_OK
        pred = float(capsys.readouterr().out)
        # the fit error in power units is final_rmse * 100; allow a few RMSEs for a single row
        assert abs(pred - 100.0) <= 5 * result["final_rmse"] * 100.0

    def test_predict_csv(self, corpora, trained, tmp_path):
        assert main(["predict", str(trained / "model.json"), "--input", str(corpora / "reactor.csv"),
                     "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "predictions.csv").read_text().splitlines()
        assert len(lines) == 1129
        assert lines[0].endswith("predicted_power_pct")

    def test_arity_error(self, trained, capsys):
        assert main(["predict", str(trained / "model.json"), "--row", "1,2,3,4,5"]) == EXIT_VALIDATION
        assert "rod_fraction" in capsys.readouterr().err

    def test_extrapolation_warning(self, trained, capsys):
        with pytest.warns(ExtrapolationWarning):
            assert main(["predict", str(trained / "model.json"), "--row", "0,0,130,30"]) == EXIT_OK
        assert float(capsys.readouterr().out) > 0

    def test_missing_file(self, capsys):
        assert main(["train", "/nonexistent/data.csv"]) == EXIT_IO
        assert "/nonexistent/data.csv" in capsys.readouterr().err

    def test_parse_error(self, tmp_path):
        bad = write(tmp_path, "bad.csv", "t_s,accel_ppu_s2,vel_ppu_s,pos_ppu\n0,1,2\n")
        assert main(["train", bad]) == EXIT_PARSE

    def test_unknown_layout(self, tmp_path):
        other = write(tmp_path, "o.csv", "a,b\n1,2\n2,3\n")
        assert main(["train", other]) == EXIT_VALIDATION

    def test_numerical_failure(self, corpora, tmp_path):
        cfg = write(tmp_path, "c.toml", "[trainer]\nname = \"momentum\"\n[trainer.momentum]\neta = 1e6\n"
                                        "max_epochs = 3\n")
        assert main(["train", str(corpora / "reactor.csv"), "--config", cfg, "--out", str(tmp_path)]) \
            == EXIT_NUMERICAL


class TestSweepReport:
    def test_single_run_smoke(self, corpora, tmp_path, capsys):
        cfg = write(tmp_path, "s.toml", TINY_SWEEP)
        args = ["sweep", str(corpora / "reactor.csv"), "--config", cfg, "--runs", "1", "--workers", "1",
                "--quiet", "--out", str(tmp_path / "a")]
        assert main(args) == EXIT_OK
        table = capsys.readouterr().out
        assert "*" in table
        rows = parse_report_csv((tmp_path / "a" / "report.csv").read_text())
        assert len(rows) == 2 and all(r["std_rmse"] == 0.0 for r in rows)
        doc = json.loads((tmp_path / "a" / "report.json").read_text())
        assert all(c["single_run"] for c in doc["configs"])
        assert "seconds" not in doc["configs"][0]
        assert json.loads((tmp_path / "a" / "timings.json").read_text())["workers"] == 1
        assert IdentifiedModel.load(tmp_path / "a" / "best_model.json").layout == "reactor"

        args[-1] = str(tmp_path / "b")
        assert main(args) == EXIT_OK
        capsys.readouterr()
        for name in ("report.csv", "report.json", "best_model.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

        assert main(["report", str(tmp_path / "a" / "report.json"), "--format", "csv"]) == EXIT_OK
        assert capsys.readouterr().out == (tmp_path / "a" / "report.csv").read_text()

    def test_seed_env_fallback(self, monkeypatch):
        monkeypatch.setenv("OPIDENT_SEED", "42")
        assert load_config()["seed"] == 42
        assert load_config(overrides={"seed": 7})["seed"] == 7


class TestConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("OPIDENT_SEED", raising=False)
        cfg = load_config()
        assert cfg == DEFAULTS
        assert cfg["sweep"]["runs"] == 20

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load_config(write(tmp_path, "u.toml", "[sweep]\nrunz = 3\n"))
        assert exc.value.field == "sweep.runz"

    def test_bad_toml(self, tmp_path, capsys):
        cfg = write(tmp_path, "b.toml", "[sweep\n")
        assert main(["gen-data", "reactor", "--config", cfg, "--out", str(tmp_path)]) == EXIT_PARSE
