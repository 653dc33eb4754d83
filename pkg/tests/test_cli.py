import json
import subprocess
import sys

import pandas as pd
import pytest

from qblpiv.cli import APPLICATION_DRAWS, ConfigError, coerce, main, read_config

FAST = ["--set", "draws=600", "--set", "burn=100", "--set", "n_sim=5000"]


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def test_estimate_on_bundled_data(tmp_path, capsys):
    assert run(tmp_path, "estimate", *FAST) == 0
    irf = pd.read_csv(tmp_path / "irf.csv")
    assert len(irf) == 2 * 8
    assert set(irf.treatment) == {"wind_gen", "solar_gen"}
    assert (irf.band_lo <= irf.ci_lo).all() and (irf.ci_hi <= irf.band_hi).all()
    theta = pd.read_csv(tmp_path / "theta.csv")
    assert list(theta.columns) == ["horizon", "regressor", "estimate", "se", "theta_star"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "estimate"
    assert manifest["settings"]["draws"] == 600
    assert len(manifest["inputs_sha256"]["data"]) == 64
    assert str(tmp_path / "irf.csv") in capsys.readouterr().out


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "estimate", *FAST, "--prior", "flat") == 0
    assert main(["estimate", "--config", str(a / "manifest.json"), "--out-dir", str(b)]) == 0
    for name in ("irf.csv", "theta.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flat_and_roughness_differ(tmp_path):
    assert run(tmp_path / "f", "estimate", *FAST, "--prior", "flat") == 0
    assert run(tmp_path / "r", "estimate", *FAST, "--prior", "rp") == 0
    f = pd.read_csv(tmp_path / "f" / "irf.csv")
    r = pd.read_csv(tmp_path / "r" / "irf.csv")
    assert not f.estimate.equals(r.estimate)


def test_save_chain(tmp_path):
    assert run(tmp_path, "estimate", *FAST, "--set", "save_chain=true") == 0
    assert (tmp_path / "theta_draws.csv").exists() and (tmp_path / "tau_draws.csv").exists()


def test_simulate_smoke(tmp_path):
    args = ["simulate", "--set", "T_values=200", "--set", "replications=2",
            "--set", "estimators=gmm,qb_flat", "--set", "n_sim=5000",
            "--set", "draws=600", "--set", "burn=100"]
    assert run(tmp_path, *args) == 0
    point = pd.read_csv(tmp_path / "mc_pointwise.csv")
    assert set(point.estimator) == {"gmm", "qb_flat"}
    assert len(point) == 16
    again = tmp_path / "again"
    assert run(again, *args) == 0
    assert (tmp_path / "mc_pointwise.csv").read_bytes() == (again / "mc_pointwise.csv").read_bytes()


def write_weather(path, cells):
    rows = ["cell_id,timestamp,u100,v100,ssr"]
    for c, (u, v) in cells.items():
        for h in range(48):
            rows.append(f"{c},2020-01-0{1 + h // 24}T{h % 24:02d}:00,{u},{v},{h % 24}")
    path.write_text("\n".join(rows) + "\n")


def test_instruments_command(tmp_path):
    write_weather(tmp_path / "w.csv", {"a": (8.0, 0.0), "b": (0.0, 13.0)})
    (tmp_path / "one.csv").write_text("cell_id,wind_mw,solar_mw\na,1,1\n")
    (tmp_path / "two.csv").write_text("cell_id,wind_mw,solar_mw\na,5,5\nb,5,5\n")
    base = ["instruments", "--set", f"weather={tmp_path / 'w.csv'}"]
    assert run(tmp_path / "o1", *base, "--set", f"capacity={tmp_path / 'one.csv'}") == 0
    one = pd.read_csv(tmp_path / "o1" / "potentials.csv")
    assert one.wind_potential.tolist() == pytest.approx([485 / 2170] * 2)
    assert one.solar_potential.tolist() == [276, 276]
    assert run(tmp_path / "o2", *base, "--set", f"capacity={tmp_path / 'two.csv'}") == 0
    two = pd.read_csv(tmp_path / "o2" / "potentials.csv")
    assert two.wind_potential.tolist() == pytest.approx([(485 / 2170 + 1) / 2] * 2)


def test_empty_capacity_file_is_a_config_error(tmp_path, capsys):
    write_weather(tmp_path / "w.csv", {"a": (8.0, 0.0)})
    (tmp_path / "cap.csv").write_text("")
    code = run(tmp_path, "instruments", "--set", f"weather={tmp_path / 'w.csv'}",
               "--set", f"capacity={tmp_path / 'cap.csv'}")
    assert code == 2
    assert "capacity file is empty" in capsys.readouterr().err


def test_diagnose_smoke(tmp_path):
    assert run(tmp_path, "diagnose", *FAST, "--set", "leads=1,2", "--set",
               "placebo_lags=1,2") == 0
    first = pd.read_csv(tmp_path / "first_stage.csv")
    assert len(first) == 2 and first.min_singular_value.nunique() == 1
    assert len(pd.read_csv(tmp_path / "placebo.csv")) == 3 * 2
    lead = pd.read_csv(tmp_path / "lead_placebo.csv")
    assert sorted(set(lead.horizon)) == [-2, -1]


def test_make_synthetic_matches_bundled_file(tmp_path):
    from qblpiv.synthetic import bundled_dataset_path
    assert run(tmp_path, "make-synthetic") == 0
    assert (tmp_path / "synthetic_electricity.csv").read_bytes() == \
        bundled_dataset_path().read_bytes()


def test_config_file_and_errors(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nhorizon = 3\nprior = rp  # inline\ndraws=500\nburn=100\n"
                   "n_sim = 5000\n")
    assert read_config(cfg)["horizon"] == 3
    assert run(tmp_path / "o", "estimate", "--config", str(cfg)) == 0
    assert len(pd.read_csv(tmp_path / "o" / "irf.csv")) == 2 * 4

    assert run(tmp_path, "estimate", "--set", "bogus=1") == 2
    assert "unknown setting" in capsys.readouterr().err
    assert run(tmp_path, "estimate", "--set", "level=1.5") == 2
    assert run(tmp_path, "estimate", "--set", f"data={tmp_path / 'nope.csv'}") == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("horizon 3\n")
    assert run(tmp_path, "estimate", "--config", str(bad)) == 2


def test_runtime_error_reports_module(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("date,y,r,z\n2020-01-01,1,1,1\n2020-01-03,2,2,2\n")
    code = run(tmp_path, "estimate", "--set", f"data={data}", "--set", "date=date",
               "--set", "outcome=y", "--set", "treatments=r", "--set", "instruments=z")
    assert code == 1
    assert "error [dataset]: DatasetError" in capsys.readouterr().err


def test_coerce_and_defaults():
    assert coerce("save_chain", "yes") is True
    assert coerce("draws", "none") is None
    with pytest.raises(ConfigError):
        coerce("horizon", "seven")
    assert APPLICATION_DRAWS == 55_000


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qblpiv", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
