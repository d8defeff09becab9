import json

import pytest

from critfield.cli import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    PLOT_KINDS,
    emit_plot_data,
    main,
)
from critfield.config import ConfigError, parse_config


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


BASE_CLT = """
subcommand: clt
seed: 42
density:
  family: gaussian
  params: [1.0]
experiment:
  m: 2
  n_list: [3.0]
  realizations: 4
  points_per_unit: 8
  e_absdet_s1: 2.3094
"""

BASE_RANDMAT = """
subcommand: randmat
seed: 3
ensemble:
  m: 2
  u: 1.0
  v: 1.0
  samples: 50000
"""


class TestParseConfig:
    def test_valid(self, tmp_path):
        cfg = parse_config(_write(tmp_path, "a.yaml", BASE_CLT))
        assert cfg.subcommand == "clt"
        assert cfg.seed == 42
        assert cfg.experiment["realizations"] == 4

    def test_missing_seed(self, tmp_path):
        text = BASE_CLT.replace("seed: 42\n", "")
        with pytest.raises(ConfigError, match="seed"):
            parse_config(_write(tmp_path, "a.yaml", text))

    def test_typo_gets_suggestion(self, tmp_path):
        text = BASE_CLT.replace("realizations:", "realisations:")
        with pytest.raises(ConfigError, match="did you mean 'realizations'"):
            parse_config(_write(tmp_path, "a.yaml", text))

    def test_problems_are_aggregated(self, tmp_path):
        text = BASE_CLT.replace("seed: 42", "sede: 42").replace(
            "subcommand: clt", "subcommand: cltt"
        )
        with pytest.raises(ConfigError) as err:
            parse_config(_write(tmp_path, "a.yaml", text))
        msg = str(err.value)
        assert "sede" in msg and "cltt" in msg and "seed" in msg

    def test_missing_required_block(self, tmp_path):
        text = "subcommand: randmat\nseed: 1\n"
        with pytest.raises(ConfigError, match="requires block"):
            parse_config(_write(tmp_path, "a.yaml", text))

    def test_overrides_win(self, tmp_path):
        cfg = parse_config(
            _write(tmp_path, "a.yaml", BASE_CLT), overrides={"seed": 7, "out": None}
        )
        assert cfg.seed == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "nope.yaml")


class TestMainExitCodes:
    def test_spectrum_success(self, tmp_path):
        cfg = _write(
            tmp_path,
            "s.yaml",
            "subcommand: spectrum\nseed: 1\ndensity:\n  family: gaussian\n  params: [1.0]\n",
        )
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out)]) == EXIT_OK
        doc = json.loads((out / "spectrum.json").read_text())
        assert doc["s"] == pytest.approx(1.0, rel=1e-9)
        assert (out / "provenance.json").exists()
        assert (out / "summary.txt").exists()

    def test_refuses_nonempty_out(self, tmp_path):
        cfg = _write(
            tmp_path,
            "s.yaml",
            "subcommand: spectrum\nseed: 1\ndensity:\n  family: gaussian\n  params: [1.0]\n",
        )
        out = tmp_path / "out"
        out.mkdir()
        (out / "junk.txt").write_text("x")
        assert main(["--config", cfg, "--out", str(out)]) == EXIT_CONFIG
        assert (out / "junk.txt").exists()
        assert main(["--config", cfg, "--out", str(out), "--force"]) == EXIT_OK
        assert not (out / "junk.txt").exists()

    def test_dry_run_writes_nothing(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.yaml", BASE_CLT)
        out = tmp_path / "out"
        code = main(["--config", cfg, "--out", str(out), "--dry-run"])
        assert code == EXIT_OK
        assert not out.exists()
        printed = capsys.readouterr().out
        assert "grid:" in printed and "seed: 42" in printed

    def test_config_error_exit(self, tmp_path):
        cfg = _write(tmp_path, "bad.yaml", "subcommand: nope\nseed: 1\n")
        assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_budget_exceeded_exit(self, tmp_path):
        text = BASE_CLT + "budget:\n  grid_points: 100\n"
        cfg = _write(tmp_path, "b.yaml", text)
        assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_BUDGET

    def test_numerical_failure_exit(self, tmp_path):
        # a flat user table has no spectral decay: moment quadrature diverges
        text = (
            "subcommand: spectrum\nseed: 1\n"
            "density:\n  family: user-table\n"
            "  table: [[0.0, 1.0], [50.0, 1.0], [100.0, 1.0]]\n"
        )
        cfg = _write(tmp_path, "n.yaml", text)
        assert main(["--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL

    def test_seed_override(self, tmp_path):
        cfg = _write(tmp_path, "c.yaml", BASE_CLT)
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "--seed", "7"]) == EXIT_OK
        stamp = json.loads((out / "provenance.json").read_text())
        assert stamp["seed"] == 7

    def test_no_config_given(self):
        assert main([]) == EXIT_CONFIG


@pytest.fixture(scope="module")
def clt_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("clt")
    cfg = _write(tmp, "c.yaml", BASE_CLT)
    out = tmp / "out"
    assert main(["--config", cfg, "--out", str(out)]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def randmat_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("rm")
    cfg = _write(tmp, "r.yaml", BASE_RANDMAT)
    out = tmp / "out"
    assert main(["--config", cfg, "--out", str(out)]) == EXIT_OK
    return out


class TestEndToEnd:
    def test_clt_outputs(self, clt_dir):
        doc = json.loads((clt_dir / "record.json").read_text())
        assert doc["n_list"] == [3.0]
        assert (clt_dir / "samples_N3.csv").exists()
        assert (clt_dir / "variance.csv").exists()

    def test_randmat_outputs(self, randmat_dir):
        doc = json.loads((randmat_dir / "randmat.json").read_text())
        assert doc["results"]["absdet"]["mean"] == pytest.approx(2.309, rel=0.05)
        assert (randmat_dir / "eigenvalues.csv").exists()

    def test_plot_kinds(self, clt_dir, randmat_dir):
        sources = {
            "zeta-hist": clt_dir,
            "variance-plateau": clt_dir,
            "semicircle": randmat_dir,
            "rho-identity": randmat_dir,
        }
        assert set(sources) == set(PLOT_KINDS)
        for kind, src in sources.items():
            path = emit_plot_data(src, kind)
            header = path.read_text().splitlines()[0]
            assert "," in header

    def test_unknown_plot_kind(self, clt_dir):
        with pytest.raises(ValueError, match="unknown plot kind"):
            emit_plot_data(clt_dir, "scatter")
        assert main(["--plot-data", str(clt_dir), "scatter"]) == EXIT_CONFIG

    def test_plot_data_cli(self, clt_dir, tmp_path):
        dest = tmp_path / "plot.csv"
        code = main(["--plot-data", str(clt_dir), "variance-plateau", "--out", str(dest)])
        assert code == EXIT_OK
        assert dest.exists()
