import csv
import json
import os

import numpy as np
import pytest

from psihilfer.cli import CSV_COLUMNS, FORMAT_VERSION, load_config, main, run
from psihilfer.errors import ValidationError
from conftest import E_05_1

MINIMAL = {
    "command": "solve",
    "problem": {"f": "1", "g": "y", "y0": 1.0, "T": 1.0, "psi": "identity", "mu": 0.5, "nu": 1.0},
}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


# {{{ configuration


def test_minimal_config_is_valid(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL))
    assert cfg.command == "solve"
    assert cfg.problem.g == "y" and cfg.order().xi == 1.0


def test_mu_out_of_range(tmp_path):
    data = {**MINIMAL, "problem": {**MINIMAL["problem"], "mu": 1.5}}
    with pytest.raises(ValidationError, match=r"mu must be in \(0,1\)"):
        load_config(write_config(tmp_path, data))


def test_vanishing_f(tmp_path):
    data = {**MINIMAL, "problem": {**MINIMAL["problem"], "f": "0"}}
    with pytest.raises(ValidationError) as info:
        load_config(write_config(tmp_path, data))
    assert info.value.field == "f"


def test_flags_override_file(tmp_path):
    cfg = load_config(write_config(tmp_path, MINIMAL), {"mu": 0.3, "mesh_n": 64, "g": None})
    assert cfg.problem.mu == 0.3 and cfg.solver.N == 64 and cfg.problem.g == "y"


@pytest.mark.parametrize(("data", "field"), [
    ({**MINIMAL, "command": "plot"}, "command"),
    ({**MINIMAL, "extra": 1}, "extra"),
    ({**MINIMAL, "problem": {**MINIMAL["problem"], "g": "y +"}}, "g"),
    ({**MINIMAL, "solver": {"N": 2}}, None),
    ({**MINIMAL, "problem": {**MINIMAL["problem"], "T": -1.0}}, "T"),
    ({"command": "compare"}, "u"),
])
def test_invalid_configs(tmp_path, data, field):
    with pytest.raises(ValidationError) as info:
        load_config(write_config(tmp_path, data))
    if field is not None:
        assert info.value.field == field


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"command": "solve",}')
    with pytest.raises(ValidationError):
        load_config(str(path))


# }}}


# {{{ commands


def test_solve_caputo_linear(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--f", "1", "--g", "y", "--y0", "1", "--mu", "0.5", "--nu", "1",
                 "--mesh-n", "2048", "--out", str(out)])
    assert code == 0
    header, data = read_csv(out / "solution.csv")
    assert tuple(header) == CSV_COLUMNS
    assert data[-1, 0] == 1.0
    assert data[-1, 3] == pytest.approx(E_05_1, rel=1e-3)
    report = json.loads((out / "report.json").read_text())
    assert report["format_version"] == FORMAT_VERSION
    assert report["solver"]["converged"]


def test_verify_ml_identity(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "ml-identity", "--mesh-n", "2048", "--out", str(out)]) == 0
    summary = json.loads((out / "report.json").read_text())["verify"]
    assert summary["passed"] and summary["max_rel_err"] < 1e-3
    assert {c["L"] for c in summary["cases"]} == {0.25, 0.5}


def test_verify_ml_identity_fails_below_one(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "ml-identity", "--nu", "0.5", "--mesh-n", "512", "--out", str(out)]) == 1
    cases = json.loads((out / "report.json").read_text())["verify"]["cases"]
    assert all(c["max_constant_term"] > 0 for c in cases)


def test_integrate_zero(tmp_path):
    out = tmp_path / "out"
    assert main(["integrate", "--h", "0", "--mesh-n", "64", "--out", str(out)]) == 0
    _, data = read_csv(out / "integral.csv")
    assert data.shape == (65, 4)
    np.testing.assert_array_equal(data[:, 2:], 0.0)


def test_derive_reports_exclusion_zone(tmp_path):
    out = tmp_path / "out"
    assert main(["derive", "--h", "t", "--mesh-n", "64", "--nu", "1", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["excluded_nodes"] == 2
    _, data = read_csv(out / "derivative.csv")
    assert np.all(np.isnan(data[:2, 3]))


def test_other_commands(tmp_path):
    common = ["--f", "1", "--g", "0", "--y0", "1", "--nu", "0.5", "--mesh-n", "128"]
    assert main(["extremal", *common, "--eps0", "0.5", "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "maximal_level_000.csv").exists()
    assert main(["compare", *common, "--u", "0.5*t^(-0.25)", "--out", str(tmp_path / "c")]) == 0
    assert main(["compare", *common, "--u", "1.5*t^(-0.25)", "--out", str(tmp_path / "d")]) == 1
    assert main(["probe-uniqueness", *common, "--out", str(tmp_path / "u")]) == 0
    assert main(["verify", "touchpoint", "--mesh-n", "256", "--out", str(tmp_path / "t")]) == 0
    assert main(["verify", "comparison", "--g", "y", "--y0", "1", "--mesh-n", "256",
                 "--out", str(tmp_path / "v")]) == 0


def test_run_with_config_object(tmp_path):
    cfg = load_config(write_config(tmp_path, {**MINIMAL, "out": str(tmp_path / "o"),
                                              "solver": {"N": 128}}))
    assert run(cfg) == 0
    assert (tmp_path / "o" / "solution.csv").exists()


# }}}


# {{{ determinism and errors


def test_outputs_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["solve", "--g", "sin(y) + t", "--y0", "0.5", "--nu", "0.3", "--mesh-n", "256",
              "--out", str(out)])
        outs.append(out)
    for name in ("solution.csv", "report.json"):
        a, b = ((o / name).read_bytes() for o in outs)
        # the output directory is part of the recorded config
        assert a.replace(b"run0", b"run") == b.replace(b"run1", b"run")


@pytest.mark.parametrize(("argv", "error", "field"), [
    (["solve", "--mu", "1.5"], "ValidationError", "mu"),
    (["solve", "--f", "0"], "ValidationError", "f"),
    (["solve", "--g", "y + z"], "ValidationError", "g"),
    (["solve", "--psi", "power:-1"], "ValidationError", None),
    (["solve", "extra"], "ValidationError", "command"),
    (["verify", "nothing"], "ValidationError", "target"),
    ([], "ValidationError", "command"),
])
def test_error_records(tmp_path, capsys, argv, error, field):
    out = tmp_path / "out"
    assert main([*argv, "--out", str(out)]) == 2
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == error and rec["message"]
    if field is not None:
        assert rec["field"] == field
    assert json.loads((out / "error.json").read_text()) == rec


def test_parse_error_offset(tmp_path, capsys):
    assert main(["solve", "--g", "y + * 2", "--out", str(tmp_path)]) == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["field"] == "g"


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json")]) == 2
    assert "error" in json.loads(capsys.readouterr().err)


# }}}
