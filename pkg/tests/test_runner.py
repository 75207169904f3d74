import json

import numpy as np
import pytest

from vcsel_owc.runner import ConfigError, ResultTable, ScenarioConfig, load_config
from vcsel_owc.runner.cli import main
from vcsel_owc.runner.config import config_from_dict
from vcsel_owc.runner.experiments import (_share, run_avg_rate_vs_array,
                                          run_avg_rate_vs_cell_size, run_eyesafety,
                                          run_mobility_throughput, run_multiuser,
                                          run_pdf_experiment, run_snr_map)
from vcsel_owc.runner.parallel import fsum_mean, item_rng, pmap, worker_count

SMALL = ["samples.mc=20000", "samples.array_mc=4000", "samples.grid=9",
         "samples.trials=60", "samples.chunk=5000"]


def small(*extra):
    return load_config(None, SMALL + list(extra))


# -- config -----------------------------------------------------------------

def test_default_config_round_trip():
    cfg = ScenarioConfig()
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_ignores_workers_only():
    a = load_config(None, ["workers=1"])
    assert a.digest() == load_config(None, ["workers=4"]).digest()
    assert a.digest() != load_config(None, ["seed=2"]).digest()


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError, match=r"mobility\.speeed"):
        load_config(None, ["mobility.speeed=1"])


@pytest.mark.parametrize("override,path", [
    ("layout.d_cell=-0.1", "layout.d_cell"),
    ("noise_mode=loud", "noise_mode"),
    ("mobility.dt=0.01", "mobility.dt"),
    ("ann.orientations=[\"m3\"]", "ann.orientations"),
    ("p_tx_mw=[1, 2]", "p_tx_mw"),
])
def test_invalid_fields(override, path):
    with pytest.raises(ConfigError) as exc:
        load_config(None, [override])
    assert path in str(exc.value)


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_tx_power_sources():
    cfg = ScenarioConfig()
    assert cfg.tx_power(4.0) == pytest.approx(0.060)
    free = load_config(None, ["p_tx_mw=null", "theta_fwhm_deg=[3.0]"])
    assert free.tx_power(3.0) * 1e3 == pytest.approx(
        float(np.interp(3.0, [2, 4], [19.17, 60.18])), rel=0.15)


# -- infrastructure -----------------------------------------------------------

def test_item_rng_streams():
    a = item_rng(1, 3, 0).random(4)
    assert np.array_equal(a, item_rng(1, 3, 0).random(4))
    assert not np.array_equal(a, item_rng(1, 3, 1).random(4))
    assert not np.array_equal(a, item_rng(2, 3, 0).random(4))


def _square(x):
    return x * x


def test_pmap_ordered_and_worker_count(monkeypatch):
    assert pmap(_square, [(i,) for i in range(7)], 2) == [i * i for i in range(7)]
    monkeypatch.setenv("OWC_SIM_THREADS", "1")
    assert worker_count(8) == 1
    assert fsum_mean([(0.1, 1)] * 10) == pytest.approx(0.1, rel=1e-15)


def test_share_conserves_capacity():
    sel = np.array([3, 3, 5, -1, 2, 2, 2, 0])
    share = _share(sel, (2, 4))
    assert list(share) == [2, 2, 1, 1, 3, 3, 3, 1]
    served = sel >= 0
    # every used beam hands out exactly one unit in total
    assert np.sum(1 / share[served]) == pytest.approx(len({(i // 4, s) for i, s in enumerate(sel) if s >= 0}))


def test_result_table_files(tmp_path):
    t = ResultTable("demo", ["a", "b"], metadata={"seed": 1})
    t.add(1.0, "x")
    t.add(0.1, "y")
    paths = t.write(tmp_path, dat=True)
    text = paths[0].read_text()
    assert text.startswith("# ")
    assert "0.1" in text and "wall" not in text
    assert t.where(b="y")[0]["a"] == 0.1
    assert len(paths) == 2


# -- experiments (reduced sizes) ------------------------------------------------

def test_snr_map_peaks():
    t = run_snr_map(small("full_array_map=false"))
    assert t.metadata["peak_snr_db_2deg"] == pytest.approx(28.073168735, abs=1e-6)
    assert t.metadata["peak_snr_db_4deg"] == pytest.approx(27.031238952, abs=1e-6)
    assert t.metadata["peak_snr_db_6deg"] == pytest.approx(26.830289145, abs=1e-6)


def test_calibrated_mode_hits_targets():
    t = run_snr_map(small("full_array_map=false", "noise_mode=calibrated"))
    for theta, target in ((2, 27.7), (4, 23.7), (6, 22.7)):
        assert t.metadata[f"peak_snr_db_{theta}deg"] == pytest.approx(target, abs=1e-9)


def test_pdf_experiment_small():
    t = run_pdf_experiment(small("theta_fwhm_deg=[4.0]", "p_tx_mw=[60.0]"), bins=20)
    assert t.metadata["ks_exact_4deg"] < 0.02


def test_rate_vs_cell_small():
    t = run_avg_rate_vs_cell_size(small("sweep.d_cell=[0.1]", "theta_fwhm_deg=[4.0]",
                                        "p_tx_mw=[60.0]"))
    row = t.rows[0]
    d = dict(zip(t.columns, row))
    assert abs(d["rel_err_closed"]) < 0.01
    assert d["mc_rate"] == pytest.approx(d["quadrature"], rel=0.01)


def test_rate_vs_array_below_bound():
    t = run_avg_rate_vs_array(small("sweep.n_side=[2, 3]", "theta_fwhm_deg=[4.0]",
                                    "p_tx_mw=[60.0]"))
    for r in t.where():
        assert r["mc_rate"] <= r["bound_quad"] * 1.01


def test_multiuser_small():
    t = run_multiuser(small("sweep.n_ue=[1, 10]", "theta_fwhm_deg=[4.0]", "p_tx_mw=[60.0]"))
    for r in t.where():
        assert r["total_ici"] <= r["total_no_ici"] + 1e-6
        assert r["total_no_ici"] <= r["bound_quad"] * 1.05


def test_mobility_deterministic_across_workers(tmp_path):
    args = ["mobility.replicates=40", "mobility.window_steps=3", "sweep.speeds=[1.0]"]
    a = run_mobility_throughput(small("workers=1", *args), batch=10)
    b = run_mobility_throughput(small("workers=3", *args), batch=10)
    pa = a.write(tmp_path / "a")[0].read_bytes()
    pb = b.write(tmp_path / "b")[0].read_bytes()
    assert pa == pb
    assert {r["scheme"] for r in a.where()} == {"ccr", "odtx_30ms", "isvlp_44.3ms_39.7mm",
                                               "isvlp_44.3ms_5mm"}


def test_eyesafety_table():
    t = run_eyesafety(ScenarioConfig())
    p = [r["p_max_mw"] for r in t.where()]
    assert p == pytest.approx([19.171586307527964, 60.17571484815823, 129.1299121552692],
                              rel=1e-12)


# -- CLI ----------------------------------------------------------------------

def test_cli_eyesafety(tmp_path, capsys):
    assert main(["eyesafety", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "P_max=19.2 mW" in out and "P_max=60.2 mW" in out and "P_max=129.1 mW" in out
    assert (tmp_path / "eyesafety.csv").exists()


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["validate-config", "--set", "layout.d_cell=-0.1"]) == 2
    assert "layout.d_cell" in capsys.readouterr().err
    assert main(["no-such-command"]) == 2
    assert main(["validate-config"]) == 0
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 7}))
    assert main(["validate-config", "--config", str(cfg)]) == 0
    assert '"seed": 7' in capsys.readouterr().out
