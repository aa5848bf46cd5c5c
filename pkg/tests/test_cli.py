import csv
import json
import math

import pytest

from hybridnet import cli
from hybridnet.config import ConfigError, db_to_linear, load_config, parse_config
from hybridnet.errors import InvalidParameterError
from hybridnet.experiments import SCHEMAS
from hybridnet.montecarlo import THREADS_ENV


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({"seed": 1})
        assert cfg.deployment.q == pytest.approx(db_to_linear(17))
        assert cfg.system.p_b == pytest.approx(10.0)
        assert (cfg.system.alpha, cfg.system.beta, cfg.system.theta, cfg.system.K) == (4, 3, 2, 8)
        assert (cfg.system.epsilon, cfg.system.eta, cfg.system.delta) == (0.3, 0.2, 0.2)

    def test_db_keys(self):
        cfg = parse_config({"seed": 1, "deployment": {"p_db": 10, "q_db": 0},
                            "system": {"sigma2_db": -10, "p_b_db": 20}, "threshold_db": 3})
        assert cfg.deployment.p == pytest.approx(10.0)
        assert cfg.deployment.q == pytest.approx(1.0)
        assert cfg.system.sigma2 == pytest.approx(0.1)
        assert cfg.system.p_b == pytest.approx(100.0)
        assert cfg.threshold == pytest.approx(10 ** 0.3)

    @pytest.mark.parametrize("doc", [
        {"seed": 1, "sead": 2},
        {"seed": 1, "system": {"alfa": 4}},
        {"seed": 1, "deployment": {"lambda_b_db": 3}},
        {"seed": 1, "deployment": {"p": 1, "p_db": 0}},
        {"seed": 1, "threshold": 1, "threshold_db": 0},
        {"seed": 1, "sweep": {"lambda_q": [1]}},
        {"seed": 1, "sweep": {"mu": {"start": 0, "stop": 1}}},
        {"seed": 1, "sweep": {"mu": []}},
        {"seed": 1, "system": {"nu": 0.5}},
        {"seed": 1, "system": {"alpha": "4"}},
        {"seed": 1, "truncation_factor": "big"},
        [1, 2],
    ])
    def test_rejects(self, doc):
        with pytest.raises(InvalidParameterError):
            parse_config(doc)

    def test_sweep_ranges(self):
        cfg = parse_config({"seed": 1, "sweep": {"lambda_b": {"start": 0.01, "stop": 1, "num": 3, "log": True},
                                                 "mu": {"start": 0, "stop": 1, "num": 5}}})
        assert cfg.sweep["lambda_b"] == pytest.approx([0.01, 0.1, 1.0])
        assert cfg.sweep["mu"] == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])

    @pytest.mark.parametrize("doc", [{}, {"seed": -1}, {"seed": 1, "trials": 0}, {"seed": 1, "mode": "omni"},
                                     {"seed": 1, "truncation_factor": 5},
                                     {"seed": 1, "sweep": {"lambda_b": [0.0]}}])
    def test_validate(self, doc):
        with pytest.raises(InvalidParameterError):
            parse_config(doc).validate()

    def test_unreadable_and_malformed(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "missing.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{seed: 1")
        with pytest.raises(ConfigError):
            load_config(str(bad))
        nan = tmp_path / "nan.json"
        nan.write_text('{"seed": 1, "threshold": NaN}')
        with pytest.raises(ConfigError):
            load_config(str(nan))


class TestRun:
    def test_outage_zero_power(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "c.json", {"seed": 3, "deployment": {"p": 0}})
        assert cli.main(["outage", "--config", cfg, "--trials", "20", "--out", str(tmp_path / "o")]) == 0
        rows = read_rows(tmp_path / "o" / "outage.csv")
        assert tuple(rows[0]) == SCHEMAS["outage"]
        assert len(rows) == 2
        assert float(rows[1][4]) == 1.0

    def test_outage_sweep(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"seed": 4, "truncation_factor": 10, "deployment": {"p": 1},
                                               "sweep": {"lambda_b": [0.5, 2.0]}})
        assert cli.main(["outage", "--config", cfg, "--trials", "50", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "outage.csv")
        assert [float(r[0]) for r in rows[1:]] == [0.5, 2.0]
        assert all(0 <= float(r[4]) <= 1 for r in rows[1:])

    def test_manifest(self, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["reproduce", "fig4", "--seed", "5", "--trials", "200", "--out", str(out)]) == 0
        man = json.loads((out / "fig4.manifest.json").read_text())
        for key in ("experiment", "seed", "code_version", "config", "wall_time_s", "csv_sha256", "command"):
            assert key in man
        assert man["seed"] == 5 and man["experiment"] == "fig4"
        assert man["notes"]["mu_tilde"] == pytest.approx(1.524092344862345)

    def test_manifest_reruns_to_same_csv(self, tmp_path):
        first = tmp_path / "a"
        assert cli.main(["reproduce", "fig5", "--seed", "6", "--trials", "300", "--out", str(first)]) == 0
        man = json.loads((first / "fig5.manifest.json").read_text())
        assert "p_t" in man["notes"]
        echo = dict(man["config"], output=str(tmp_path / "b"))
        cfg = write_json(tmp_path / "echo.json", echo)
        assert cli.main(["reproduce", "fig5", "--config", cfg]) == 0
        assert (first / "fig5.csv").read_bytes() == (tmp_path / "b" / "fig5.csv").read_bytes()

    def test_fig3_shape(self, tmp_path):
        assert cli.main(["reproduce", "fig3", "--seed", "7", "--trials", "300", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "fig3.csv")
        assert tuple(rows[0]) == SCHEMAS["fig3"]
        eps = [float(r[1]) for r in rows[1:]]
        assert eps == sorted(eps)

    def test_fig6_columns(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"seed": 8, "trials": 200, "power_trials": 300,
                                               "truncation_factor": 10, "sweep": {"lambda_b": [0.05, 0.5]}})
        assert cli.main(["reproduce", "fig6", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "fig6.csv")
        assert tuple(rows[0]) == SCHEMAS["fig6"]
        assert {(r[3], r[4]) for r in rows[1:]} == {(m, s) for m in ("isotropic", "directed")
                                                     for s in ("large", "small")}
        assert all(math.isinf(float(r[2])) or float(r[2]) > 0 for r in rows[1:])

    def test_feasibility_and_power_commands(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {
            "seed": 9, "region": "hybrid", "mode": "directed", "storage": "small",
            "noise": "interference_limited", "deployment": {"lambda_p": 0.5, "p": 0.01},
            "sweep": {"lambda_b": [0.1, 1.0]}})
        for cmd in ("feasibility", "mpt-power", "power-outage"):
            assert cli.main([cmd, "--config", cfg, "--trials", "200", "--out", str(tmp_path)]) == 0
            assert tuple(read_rows(tmp_path / f"{cmd}.csv")[0]) == SCHEMAS[cmd]

    def test_config_for_other_experiment(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"seed": 1, "experiment": "fig4"})
        assert cli.main(["reproduce", "fig3", "--config", cfg]) == cli.EXIT_INVALID


class TestExitCodes:
    def test_codes_are_distinct(self):
        codes = {cli.EXIT_CONFIG, cli.EXIT_INVALID, cli.EXIT_OUTPUT, cli.EXIT_SCHEMA}
        assert len(codes) == 4 and 0 not in codes

    def test_unreadable_config(self, tmp_path):
        assert cli.main(["outage", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG

    def test_invalid_params(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"seed": 1, "system": {"epsilon": 2}})
        assert cli.main(["outage", "--config", cfg]) == cli.EXIT_INVALID

    def test_missing_seed(self, tmp_path):
        assert cli.main(["outage", "--out", str(tmp_path)]) == cli.EXIT_INVALID

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert cli.main(["outage", "--seed", "1", "--out", str(blocker / "sub")]) == cli.EXIT_OUTPUT

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["reproduce", "fig9"])
        assert info.value.code == cli.EXIT_USAGE


class TestPlotScript:
    def test_fig3_linear_axes(self, tmp_path):
        path = tmp_path / "fig3.csv"
        path.write_text("mu,epsilon,stderr\n0.0,0.08,0.01\n")
        script = cli.emit_plot_script(path, "fig3").read_text()
        lines = script.splitlines()
        assert "unset logscale" in lines and not any(l.startswith("set logscale") for l in lines)
        assert "'fig3.csv'" in script

    def test_fig4_log_axes(self, tmp_path):
        path = tmp_path / "fig4.csv"
        path.write_text("lambda_b,min_p_noise,min_p_intlim\n0.1,1.0,2.0\n")
        script = cli.emit_plot_script(path, "fig4").read_text()
        assert "set logscale xy" in script
        assert "title 'min_p_noise'" in script and "title 'min_p_intlim'" in script

    def test_fig6_series_filters(self, tmp_path):
        path = tmp_path / "fig6.csv"
        path.write_text(",".join(SCHEMAS["fig6"]) + "\n0.1,1.0,2.0,directed,large\n")
        script = cli.emit_plot_script(path, "fig6").read_text()
        assert 'strcol(4) eq "directed" && strcol(5) eq "large"' in script

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "fig4.csv"
        path.write_text("lambda_b,min_p_noise\n0.1,1.0\n")
        with pytest.raises(cli.SchemaError):
            cli.emit_plot_script(path, "fig4")
        assert cli.main(["plot", str(path), "--experiment", "fig4"]) == cli.EXIT_SCHEMA

    def test_missing_csv(self, tmp_path):
        assert cli.main(["plot", str(tmp_path / "none.csv"), "--experiment", "fig3"]) == cli.EXIT_SCHEMA

    def test_emit_with_run(self, tmp_path):
        assert cli.main(["reproduce", "fig4", "--seed", "2", "--trials", "200", "--out", str(tmp_path),
                         "--emit-plot"]) == 0
        assert (tmp_path / "fig4.gp").exists()


class TestReproducibility:
    def test_byte_identical_across_runs_and_workers(self, tmp_path, monkeypatch):
        outputs = []
        for i, threads in enumerate(("1", "1", "4")):
            monkeypatch.setenv(THREADS_ENV, threads)
            out = tmp_path / f"run{i}"
            assert cli.main(["reproduce", "fig3", "--seed", "42", "--trials", "700", "--out", str(out)]) == 0
            outputs.append((out / "fig3.csv").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
