import filecmp
import json
import os

import numpy as np
import pytest

from copos.cli import (
    EXIT_CONFIG,
    EXIT_DEGENERATE,
    EXIT_INFEASIBLE,
    EXIT_OK,
    main,
)
from copos.config import ConfigError, load_config


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_load_config_defaults():
    cfg = load_config()
    assert cfg.params.mu_c == 0.5599
    assert cfg.domain.x1_min == 0.1
    assert cfg.control_domain.x1_min == 30.0
    assert cfg.mode == "endpoint" and cfg.T == 0.01
    assert len(cfg.scenarios) == 1 and cfg.scenarios[0].therapy == "combined"


def test_load_config_reproduce_paper():
    cfg = load_config(preset="reproduce-paper")
    assert [s.name for s in cfg.scenarios] == [
        "fig1-none", "fig3-chemo-only", "fig4-immuno-only", "fig5-combined"]


def test_load_config_unknown_preset():
    with pytest.raises(ConfigError):
        load_config(preset="stepanova-table2")


def test_config_file_merge_and_unknown_keys(tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text("T: 0.02\nlp:\n  eps: 1.0e-5\n")
    cfg = load_config(str(good))
    assert cfg.T == 0.02 and cfg.lp.eps == 1e-5
    assert cfg.params.mu_c == 0.5599  # untouched defaults survive

    bad = tmp_path / "bad.yaml"
    bad.write_text("lp:\n  epss: 1.0e-5\n")
    with pytest.raises(ConfigError, match="lp.epss"):
        load_config(str(bad))

    bad2 = tmp_path / "bad2.yaml"
    bad2.write_text("sampling: 0.01\n")
    with pytest.raises(ConfigError, match="sampling"):
        load_config(str(bad2))


def test_config_scenario_validation(tmp_path):
    f = tmp_path / "sc.yaml"
    f.write_text("scenarios:\n  - {name: a, therapy: radiation}\n")
    with pytest.raises(ConfigError):
        load_config(str(f))
    f.write_text("scenarios:\n  - {name: a, therapy: none}\n"
                 "  - {name: a, therapy: combined}\n")
    with pytest.raises(ConfigError, match="unique"):
        load_config(str(f))


def test_config_explicit_params_and_pins(tmp_path):
    f = tmp_path / "p.yaml"
    f.write_text(
        "params: {mu_c: 0.5599, mu_I: 0.00484, gamma: 1.0, beta: 0.00264,\n"
        "         delta: 0.37451, alpha: 0.1181, x_inf: 780.0, k_x1: 1.0, k_x2: 1.0}\n"
        "lp: {gain_pins: {'0,2': -0.01, '1,3': 0.02}}\n")
    cfg = load_config(str(f))
    assert cfg.params.x_inf == 780.0
    assert cfg.lp.gain_pins == {(0, 2): -0.01, (1, 3): 0.02}
    f.write_text("lp: {gain_pins: none}\n")
    assert load_config(str(f)).lp.gain_pins is None


def test_cli_equilibria(tmp_path):
    out = tmp_path / "eq"
    code = main(["equilibria", "--out", str(out), "--no-timestamp"])
    assert code == EXIT_OK
    data = _read_json(out / "equilibria.json")
    assert "generated_at" not in data
    kinds = [e["kind"] for e in data["equilibria"]]
    assert kinds == ["stable-node-benign", "saddle", "stable-node-malignant"]
    assert data["equilibria"][0]["x1"] == pytest.approx(72.961, abs=0.5)


def test_cli_fuzzify_matches_published(tmp_path):
    out = tmp_path / "fz"
    code = main(["fuzzify", "--out", str(out), "--no-timestamp"])
    assert code == EXIT_OK
    data = _read_json(out / "fuzzify.json")
    A1 = np.array(data["vertex_system"]["A"][0])
    assert A1[0, 0] == pytest.approx(5.0178, abs=1e-3)
    assert A1[1, 1] == pytest.approx(-0.3740, abs=1e-3)
    B2 = np.array(data["vertex_system"]["B"][1])
    assert B2[0, 0] == pytest.approx(-1000.0, abs=1e-6)
    assert data["augmented_discrete"]["discrete"] is True
    assert data["augmented_discrete"]["T"] == 0.01


def test_cli_fuzzify_global_mode(tmp_path):
    out = tmp_path / "fzg"
    code = main(["fuzzify", "--out", str(out), "--mode", "global", "--no-timestamp"])
    assert code == EXIT_OK
    data = _read_json(out / "fuzzify.json")
    assert data["vertex_system"]["premise_bounds"]["theta2"][1] == pytest.approx(
        0.0838, abs=1e-4)


def test_cli_fuzzify_degenerate_domain(tmp_path):
    f = tmp_path / "deg.yaml"
    f.write_text("domain: {x1_min: 5.0, x1_max: 5.0, x2_min: 0.0, x2_max: 5.0}\n")
    code = main(["fuzzify", "--config", str(f), "--out", str(tmp_path / "o")])
    assert code == EXIT_DEGENERATE
    assert not (tmp_path / "o" / "fuzzify.json").exists()


def test_cli_bad_config_exit_2(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("T: -1\n")
    code = main(["equilibria", "--config", str(f), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    f.write_text("nonsense_key: 1\n")
    assert main(["equilibria", "--config", str(f)]) == EXIT_CONFIG


def test_cli_synthesize_and_simulate_from_gains(tmp_path):
    out = tmp_path / "syn"
    code = main(["synthesize", "--out", str(out), "--no-timestamp", "--dump-lp"])
    assert code == EXIT_OK
    data = _read_json(out / "synthesis.json")
    assert data["result"]["feasible"] is True
    assert data["result"]["report"]["all_schur"] is True
    lp_text = (out / "synthesis_lp.txt").read_text()
    assert "8a[i=0,j=0,h=0]" in lp_text and "8d[" in lp_text

    sim_out = tmp_path / "sim"
    code = main(["simulate", "--out", str(sim_out), "--no-timestamp",
                 "--gains", str(out / "synthesis.json")])
    assert code == EXIT_OK
    metrics = _read_json(sim_out / "combined.metrics.json")
    assert 45.0 <= metrics["metrics"]["terminal_state"]["x1"] <= 55.0


def test_cli_synthesize_coarse_sampling_infeasible(tmp_path):
    # Euler at T = 1 day leaves vertices far outside the unit circle
    out = tmp_path / "coarse"
    code = main(["synthesize", "--out", str(out), "--T", "1.0", "--no-timestamp"])
    assert code == EXIT_INFEASIBLE
    assert not (out / "synthesis.json").exists()


def test_cli_strict_paper_mode(tmp_path):
    out = tmp_path / "strict"
    code = main(["synthesize", "--out", str(out), "--strict-paper", "--no-timestamp"])
    # either outcome is legitimate; if feasible, gains must be nonpositive
    if code == EXIT_OK:
        data = _read_json(out / "synthesis.json")
        assert max(max(max(row) for row in Mj) for Mj in data["result"]["M"]) <= 1e-12
    else:
        assert code == EXIT_INFEASIBLE


def test_cli_simulate_reproduce_paper_and_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code = main(["simulate", "--preset", "reproduce-paper",
                     "--no-timestamp", "--out", str(out)])
        assert code == EXIT_OK
    names = sorted(os.listdir(out_a))
    assert names == sorted(os.listdir(out_b))
    expected = {"fig1-none.csv", "fig3-chemo-only.csv",
                "fig4-immuno-only.csv", "fig5-combined.csv"}
    assert expected.issubset(set(names))
    match, mismatch, errors = filecmp.cmpfiles(out_a, out_b, names, shallow=False)
    assert mismatch == [] and errors == []


def test_cli_report(tmp_path):
    out = tmp_path / "rep"
    code = main(["report", "--out", str(out), "--no-timestamp"])
    assert code == EXIT_OK
    for name in ("equilibria.json", "fuzzify.json", "synthesis.json",
                 "combined.csv", "combined.metrics.json", "report.md"):
        assert (out / name).exists()


def test_cli_timestamp_present_by_default(tmp_path):
    out = tmp_path / "ts"
    assert main(["equilibria", "--out", str(out)]) == EXIT_OK
    data = _read_json(out / "equilibria.json")
    assert "generated_at" in data
