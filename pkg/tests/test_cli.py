import csv
import json

import pytest

from faber_bergman.cli import CONFIG_ERROR, OK, TOLERANCE_FAILURE, ConfigError, RunConfig, main
from faber_bergman.curvespec import dump, from_dict


def _csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# precision_bits=")
    return list(csv.DictReader(lines[1:]))


def test_lens_exact(tmp_path):
    assert main(["lens-exact", "--n-max", "40", "--out", str(tmp_path)]) == OK
    rows = _csv(tmp_path / "sequences.csv")
    assert len(rows) == 41
    assert rows[0]["I_exact"] == "(1/4)*pi+(-1/2)"
    assert rows[2]["b_n"] == "5/6"
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert checks["all_identities_pass"]
    er = checks["even_relation"]
    assert er["uncorrected"]["negative_at_N0"]
    assert er["corrected"]["matches_closed_form"]
    assert checks["green_oracle_n2"]["confirms_corrected"]
    assert (tmp_path / "sequences_rows.json").exists()


def test_lens_exact_zero(tmp_path):
    assert main(["lens-exact", "--n-max", "0", "--out", str(tmp_path), "--format", "csv"]) == OK
    rows = _csv(tmp_path / "sequences.csv")
    assert [r["I_exact"] for r in rows] == ["(1/4)*pi+(-1/2)"]
    assert not (tmp_path / "sequences_rows.json").exists()


def test_verify_lens_and_circle(tmp_path):
    assert main(["verify", "--n-max", "8", "--out", str(tmp_path / "a")]) == OK
    rows = _csv(tmp_path / "a" / "verify.csv")
    assert [r["status"] for r in rows] == ["pass"] * 8
    assert main(["verify", "--curve", "circle", "--n-max", "4", "--out", str(tmp_path / "b")]) == OK


def test_verify_tolerance_failure(tmp_path):
    code = main(["verify", "--n-max", "2", "--tol", "1e-30", "--precision-bits", "64", "--out", str(tmp_path)])
    assert code == TOLERANCE_FAILURE
    rows = _csv(tmp_path / "verify.csv")
    assert all(r["status"] == "nonconverged" for r in rows)


def test_verify_rejects_curve_without_reference(tmp_path):
    spec = tmp_path / "l.json"
    dump(from_dict({"name": "l", "map": {"kind": "lune", "beta": "2/3"}}), spec)
    assert main(["verify", "--curve", str(spec), "--out", str(tmp_path)]) == CONFIG_ERROR


def test_alpha(tmp_path):
    assert main(["alpha", "--n-max", "12", "--precision-bits", "192", "--out", str(tmp_path)]) == OK
    rows = _csv(tmp_path / "alpha.csv")
    assert len(rows) == 13
    assert all(r["lower_bound_ok"] == "yes" for r in rows)
    assert abs(float(rows[0]["alpha_n"]) - 0.0908450569081046) < 1e-15
    s = json.loads((tmp_path / "alpha_summary.json").read_text())
    assert s["passed"] and s["max_decomposition_residual"] < 1e-8


def test_alpha_disk(tmp_path):
    assert main(["alpha", "--curve", "disk", "--n-max", "10", "--precision-bits", "128", "--out", str(tmp_path)]) == OK
    rows = _csv(tmp_path / "alpha.csv")
    assert all(abs(float(r["alpha_n"])) < 1e-30 for r in rows)


def test_sweep_and_determinism(tmp_path):
    args = ["sweep", "--n-max", "12", "--limit-n-max", "200", "--format", "csv", "--format", "json"]
    assert main(args + ["--out", str(tmp_path / "a")]) == OK
    assert main(args + ["--out", str(tmp_path / "b")]) == OK
    for name in ("sweep.csv", "lens.dat", "circle.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sa = json.loads((tmp_path / "a" / "sweep_summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "sweep_summary.json").read_text())
    sa["config"].pop("out"), sb["config"].pop("out")
    assert sa == sb
    by = {c["name"]: c for c in sa["curves"]}
    assert by["lens"]["classification"] == "bounded-away-from-zero"
    assert by["circle"]["classification"] == "decaying-to-zero"
    assert "lens_limit" in sa


def test_sweep_with_curve_file(tmp_path):
    spec = tmp_path / "lune.json"
    dump(from_dict({"name": "lune-2/3", "map": {"kind": "lune", "beta": "2/3"}}), spec)
    assert main(["sweep", "--curve", str(spec), "--n-max", "10", "--out", str(tmp_path / "o")]) == OK
    assert (tmp_path / "o" / "lune-2_3.dat").exists()
    s = json.loads((tmp_path / "o" / "sweep_summary.json").read_text())
    assert "lens_limit" not in s


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--curve", "nowhere.json"],
        ["lens-exact", "--curve", "lens"],
        ["alpha", "--curve", "lens", "--curve", "circle"],
        ["verify", "--n-max", "-1"],
        ["verify", "--tol", "0"],
        ["sweep", "--limit-n-max", "5"],
    ],
)
def test_config_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == CONFIG_ERROR


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "verify", "n_max": 3, "formats": ["json"]}))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == OK
    assert not (tmp_path / "o" / "verify.csv").exists()
    cfg.write_text(json.dumps({"command": "verify", "nmax": 3}))
    assert main(["verify", "--config", str(cfg)]) == CONFIG_ERROR
    cfg.write_text(json.dumps({"command": "alpha"}))
    assert main(["verify", "--config", str(cfg)]) == CONFIG_ERROR


def test_run_config_round_trip():
    c = RunConfig("alpha", n_max=5, formats=("json",))
    assert RunConfig.from_dict(c.to_dict()) == c
    assert RunConfig("sweep").n_max == 32
    with pytest.raises(ConfigError):
        RunConfig("plot")


def test_argparse_rejects_unknown_format(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--format", "xml"])
