import csv
import json

import pytest

from swiptmc import cli
from swiptmc.config import ConfigError, ScenarioConfig, documented_keys, load_config, parse_config
from swiptmc.experiments import Curve, SelfCheckError, run_experiment, write_curve
from swiptmc.scenario import NetworkScenario, dbm_to_watt


def test_empty_config_gives_reference_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing set\n\n")
    cfg = load_config(path)
    assert cfg == ScenarioConfig()
    sc = cfg.scenario
    assert (sc.R_D, sc.d_PH, sc.B, sc.f_c, sc.lambda_w) == (60.0, 3.0, 200e3, 2.1e9, 0.03)
    assert sc.P == pytest.approx(1.0)
    assert sc.sigma_c2 == pytest.approx(1e-10)
    assert (sc.zeta, sc.rho, sc.n_r, sc.n_t, sc.beta) == (0.8, 0.99, 2, 4, 2.5)
    assert sc.K == pytest.approx(0.1)
    p = cfg.profile
    assert (p.xi, p.N, p.M) == (1e-28, 600.0, 32.0)


def test_overrides_and_units():
    cfg = parse_config("""
        q_hit = 0.2      # lower hit rate
        P = 27 dBm
        B = 0.1 MHz
        K = -6 dB
        sigma_c2 = 1e-9 W
        noise_figure = 7 dB
        k = 50
        f_max = 2 GHz
        trials = 5000
    """)
    sc = cfg.scenario
    assert sc.q_hit == 0.2
    assert sc.P == pytest.approx(dbm_to_watt(27.0))
    assert sc.B == pytest.approx(1e5)
    assert sc.K == pytest.approx(10 ** -0.6)
    assert sc.sigma_c2 == 1e-9 and sc.noise_figure_db == 7.0
    assert cfg.profile.k == 50 and cfg.profile.f_max == 2e9
    assert cfg.solver.trials == 5000


def test_dbm_conversion_is_exact():
    cfg = parse_config("P = 13 dBm")
    # 10^(x/10) mW
    assert cfg.scenario.P == 10 ** (13 / 10) / 1000


@pytest.mark.parametrize("text,fragment", [
    ("P = 30 dbx", "power unit"),
    ("P = 30", "power unit"),
    ("B = 200 kHzz", "frequency unit"),
    ("q_hit = high", "malformed"),
    ("R_D = 60 ft", "length"),
    ("n_r = 2.5", "integer"),
    ("bogus = 1", "unknown key"),
    ("q_hit 0.3", "key = value"),
    ("q_hit = 1.5", "q_hit"),
    ("beta = 2", "beta"),
    ("rho = 1", "rho"),
])
def test_invalid_config_is_rejected_with_location(text, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config("# header\n" + text, "my.cfg")
    assert fragment in str(err.value)
    assert str(err.value).startswith("my.cfg")


def test_every_documented_key_parses():
    samples = {"P": "30 dBm", "sigma_c2": "-70 dBm", "B": "200 kHz", "f_c": "2.1 GHz",
               "f_max": "1 GHz", "K": "-10 dB", "noise_figure": "10 dB", "n_r": "2",
               "n_t": "4", "W_max": "6", "trials": "100000", "seed": "0", "level": "0.75"}
    defaults = {"R_D": "60", "d_PH": "3", "q_hit": "0.7", "lambda_w": "0.03", "zeta": "0.8",
                "rho": "0.99", "beta": "2.5", "xi": "1e-28", "k": "20", "N": "600", "M": "32"}
    text = "\n".join(f"{k} = {samples.get(k, defaults.get(k))}" for k in documented_keys())
    assert parse_config(text) == ScenarioConfig()


def test_digest_tracks_content():
    a = ScenarioConfig()
    b = ScenarioConfig(scenario=NetworkScenario(q_hit=0.2))
    assert a.digest() == ScenarioConfig().digest()
    assert a.digest() != b.digest()
    assert json.loads(json.dumps(a.as_dict()))["profile"]["k"] == 20.0


def test_curve_self_check(tmp_path):
    c = Curve("bad", "x;y", "analytic", monotone="increasing")
    c.add(1, 0.5)
    c.add(2, 0.4)
    with pytest.raises(SelfCheckError):
        write_curve(c, str(tmp_path))
    ok = Curve("ok", "x;y", "mc", monotone="increasing")
    ok.add(1, 0.1, 0.05, 0.15)
    ok.add(2, 0.2, 0.15, 0.25)
    rows = list(csv.reader(open(write_curve(ok, str(tmp_path)))))
    assert rows[0] == ["x", "y", "units", "source", "ci_low", "ci_high"]
    assert rows[1] == ["1", "0.1", "x;y", "mc", "0.05", "0.15"]


def test_unknown_experiment_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "nonsense"])
    assert exc.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_bad_config_is_usage_error(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("P = loud\n")
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "operating-points", "--config", str(cfgfile)])
    assert exc.value.code == 2


def test_solver_failure_exits_nonzero(tmp_path, capsys):
    # so few interferers that the interference has an atom at zero
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("R_D = 8\nd_PH = 5\n")
    code = cli.main(["run", "operating-points", "--config", str(cfgfile),
                     "--out", str(tmp_path / "o")])
    assert code == 1
    assert "operating-points failed" in capsys.readouterr().err


@pytest.fixture(scope="module")
def cycles_runs(tmp_path_factory):
    """Two runs of the outage-vs-cycles experiment with the same config and seed."""
    base = tmp_path_factory.mktemp("runs")
    cfgfile = base / "run.cfg"
    cfgfile.write_text("q_hit = 0.7\nseed = 11\n")
    outs = []
    for name in ("a", "b"):
        out = base / name
        assert cli.main(["run", "outage-cycles", "--config", str(cfgfile), "--out", str(out),
                         "--trials", "2000"]) == 0
        outs.append(out)
    return outs


def test_rerun_gives_identical_csv_bytes(cycles_runs):
    a, b = cycles_runs
    files = sorted(p.name for p in a.glob("*.csv"))
    assert len(files) == 6
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_contents(cycles_runs):
    a, _ = cycles_runs
    man = json.loads((a / "outage-cycles_manifest.json").read_text())
    assert man["experiment"] == "outage-cycles"
    assert man["seed"] == 11 and man["trials"] == 2000
    assert man["config_sha256"] == parse_config("q_hit = 0.7\nseed = 11\n").digest()
    assert sorted(man["files"]) == sorted(p.name for p in a.glob("*.csv"))
    assert man["runtime_s"] >= 0


def test_outage_curves_are_monotone_with_both_sources(cycles_runs):
    a, _ = cycles_runs
    for k in (10, 20, 50):
        for src in ("analytic", "mc"):
            rows = list(csv.DictReader(open(a / f"outage_cycles_k{k}_{src}.csv")))
            assert rows and all(r["source"] == src for r in rows)
            y = [float(r["y"]) for r in rows]
            assert all(y2 >= y1 - 1e-9 for y1, y2 in zip(y, y[1:]))
            if src == "mc":
                assert all(float(r["ci_low"]) <= float(r["y"]) <= float(r["ci_high"])
                           for r in rows)
            else:
                assert all(r["ci_low"] == "" for r in rows)


def test_outage_decreases_with_k_at_fixed_cycles(cycles_runs):
    a, _ = cycles_runs
    curves = {}
    for k in (10, 20, 50):
        rows = csv.DictReader(open(a / f"outage_cycles_k{k}_analytic.csv"))
        curves[k] = {float(r["x"]): float(r["y"]) for r in rows}
    common = set(curves[10]) & set(curves[20]) & set(curves[50])
    assert len(common) >= 10
    for x in common:
        assert curves[10][x] > curves[20][x] > curves[50][x]


def test_run_experiment_rejects_unknown_name(tmp_path):
    with pytest.raises(KeyError):
        run_experiment("figure-99", ScenarioConfig(), str(tmp_path))


def test_validate_at_reduced_trials_emits_both_families(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["run", "validate", "--trials", "10000", "--out", str(out)]) == 0
    for q in ("0.2", "0.7", "1"):
        for src in ("analytic", "mc"):
            rows = list(csv.DictReader(open(out / f"validate_q{q}_{src}.csv")))
            assert len(rows) >= 5
            assert {r["source"] for r in rows} == {src}
            assert rows[0]["units"] == "bit/s;dBm"
