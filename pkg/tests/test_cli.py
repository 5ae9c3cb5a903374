import json
from pathlib import Path

import pytest

from diskvort import cli
from diskvort.errors import ConfigError


def test_parse_defaults_require_kind():
    with pytest.raises(ConfigError, match="kind is required"):
        cli.parse_config("")


def test_parse_kind_from_cli():
    cfg = cli.parse_config("", kind="eigs")
    assert cfg.kind == "eigs"
    assert cfg.p == 2.0 and cfg.n_theta_modes == 16


def test_parse_kind_in_file():
    cfg = cli.parse_config("kind = eigs\n")
    assert cfg.kind == "eigs"


def test_kind_mismatch():
    with pytest.raises(ConfigError, match="mismatch"):
        cli.parse_config("kind = eigs\n", kind="evolve")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        cli.parse_config("kind = eigs\n\nbogus = 1\n")


def test_bad_value_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        cli.parse_config("kind = eigs\nseeds = nope\n")


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 1"):
        cli.parse_config("this is not a key value pair\n", kind="eigs")


def test_p_must_exceed_one():
    with pytest.raises(ConfigError, match="p must lie"):
        cli.parse_config("p = 0.5\n", kind="eigs")
    with pytest.raises(ConfigError, match="p must lie"):
        cli.parse_config("p = 1.0\n", kind="eigs")


def test_comments_and_blanks_ok():
    cfg = cli.parse_config("# header\n\nkind = eigs  # trailing\np = 2.5\n")
    assert cfg.p == 2.5


def test_hyphen_alias():
    cfg = cli.parse_config("k-radial = 24\n", kind="eigs")
    assert cfg.k_radial == 24


def test_bessel_table_run(tmp_path):
    rc = cli.main(["bessel-table", "--out", str(tmp_path / "out")])
    assert rc == 0
    out = tmp_path / "out"
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "n,k,zero,error_bound"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["passed"] is True
    assert manifest["kind"] == "bessel-table"
    assert lines[0].split("=")[1] == manifest["config_hash"]


def test_determinism_same_seed(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("n_theta_modes = 8\nk_radial = 12\nn_r = 32\nn_theta = 32\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["eigs", "--config", str(cfgfile), "--out", str(a), "--seed", "5"]) == 0
    assert cli.main(["eigs", "--config", str(cfgfile), "--out", str(b), "--seed", "5"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("p = 0.5\n")
    assert cli.main(["eigs", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["eigs", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "o")]) == 2


def test_tolerance_failure_exit_code(tmp_path, monkeypatch):
    def failing(cfg, rng, outdir):
        return False, [("x", 1.0)], ["name", "value"], {}

    monkeypatch.setitem(cli._EXPERIMENTS, "eigs", failing)
    rc = cli.main(["eigs", "--out", str(tmp_path / "o")])
    assert rc == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["passed"] is False


def test_evolve_smoke(tmp_path):
    cfgfile = tmp_path / "e.cfg"
    cfgfile.write_text(
        "n_theta_modes = 8\nk_radial = 12\nn_r = 32\nn_theta = 32\n"
        "a = 0.4\nb = 1.0\nperturbation = none\nturnovers = 0.05\ncadence = 5\n"
    )
    rc = cli.main(["evolve", "--config", str(cfgfile), "--out", str(tmp_path / "out")])
    assert rc == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["max_distance"] <= 1e-6
    header = (tmp_path / "out" / "results.csv").read_text().splitlines()[1]
    assert header == "t,energy,l2,lp,mean,orbital_distance,beta_star"
    for name in ("initial.json", "final.json"):
        doc = json.loads((tmp_path / "out" / "fields" / name).read_text())
        assert doc["kind"] == "grid"
        assert doc["config_hash"] == manifest["config_hash"]


def test_verify_identities_smoke(tmp_path):
    assert cli.main(["verify-identities", "--out", str(tmp_path / "o")]) == 0


def test_steady_check_smoke(tmp_path):
    cfgfile = tmp_path / "s.cfg"
    cfgfile.write_text("a = 0.7\nb = 0.9\nbeta = 1.1\n")
    assert cli.main(["steady-check", "--config", str(cfgfile),
                     "--out", str(tmp_path / "o")]) == 0
    body = (tmp_path / "o" / "results.csv").read_text()
    assert "mixed" in body and "FAIL" not in body


def test_burton_maximize_smoke(tmp_path):
    cfgfile = tmp_path / "b.cfg"
    cfgfile.write_text("a = 0.0\nb = 1.0\nseeds = 1\n")
    assert cli.main(["burton-maximize", "--config", str(cfgfile),
                     "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "results.csv").read_text().splitlines()
    assert lines[1] == "seed,iteration,energy,orbital_distance"
    assert (tmp_path / "o" / "fields" / "ascent_final.json").exists()


def test_rotate_demo_smoke(tmp_path):
    cfgfile = tmp_path / "r.cfg"
    cfgfile.write_text(
        "n_theta_modes = 8\nk_radial = 12\nn_r = 32\nn_theta = 32\n"
        "a = 0.3\nb = 1.0\nomega_rot = 0.4\nperturbation = none\ncadence = 5\n"
    )
    rc = cli.main(["rotate-demo", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
    assert rc == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert abs(manifest["recovered_omega"] - 0.4) <= 0.004


def test_sharpness_demo_smoke(tmp_path):
    cfgfile = tmp_path / "sh.cfg"
    cfgfile.write_text(
        "n_theta_modes = 8\nk_radial = 12\nn_r = 32\nn_theta = 32\n"
        "a = 0.3\nb = 1.0\nn_uniform = 2\ncadence = 5\n"
    )
    rc = cli.main(["sharpness-demo", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
    assert rc == 0
