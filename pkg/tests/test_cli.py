import json
import xml.etree.ElementTree as ET

import pytest

from rothman import cli
from rothman.errors import ConvergenceError

BAD_CSV = "stratum,exposed_cases,exposed_total,unexposed_cases,unexposed_total\nA,5,4,1,10\n"

ZERO_X_CSV = (
    "stratum,exposed_cases,exposed_total,unexposed_cases,unexposed_total\n"
    "A,3,10,0,10\n"
    "B,5,12,2,12\n"
)


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_measures_text(capsys):
    code, out, _ = run(capsys, "measures", "--fixture", "newcastle")
    assert code == 0
    assert "1.622" in out and "1.018" in out
    assert "confounded: yes" in out


def test_measures_json_round_trip(capsys):
    code, out, _ = run(capsys, "measures", "--fixture", "newcastle", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["strata"][0]["measures"]["or"] == pytest.approx(1.6224, abs=1e-4)
    assert doc["crude"]["x"] == pytest.approx(230 / 732)


def test_measures_undefined_rendering(capsys, tmp_path):
    path = tmp_path / "zero.csv"
    path.write_text(ZERO_X_CSV)
    code, out, _ = run(capsys, "measures", "--input", str(path))
    assert code == 0
    assert "undefined" in out
    assert "x > 0" in out
    code, out, _ = run(capsys, "measures", "--input", str(path), "--format", "json")
    doc = json.loads(out)
    assert doc["strata"][0]["measures"]["rr"] is None
    assert "rr" in doc["strata"][0]["undefined"]


def test_fit_logit_text(capsys):
    code, out, _ = run(capsys, "fit", "--fixture", "newcastle", "--link", "logit")
    assert code == 0
    assert "common estimate: 1.537" in out
    assert "(1.119, 2.125)" in out
    assert "p-value 0.353" in out


def test_fit_all_links_json(capsys):
    code, out, _ = run(capsys, "fit", "--fixture", "newcastle", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    by_link = {rep["link"]: rep for rep in doc["fits"]}
    assert set(by_link) == {"identity", "log", "logit", "cloglog"}
    assert by_link["identity"]["common"] == pytest.approx(0.0523, abs=1e-4)
    assert by_link["log"]["interaction"]["p_value"] == pytest.approx(0.010, abs=1e-3)
    assert by_link["cloglog"]["ci"]["upper"] == pytest.approx(1.676, abs=1e-3)
    assert by_link["logit"]["stratum_estimates"]["18-64"] == pytest.approx(1.622, abs=5e-4)


def test_standardize_marginal(capsys):
    code, out, _ = run(
        capsys, "standardize", "--fixture", "newcastle", "--weights", "marginal", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["standardized_risk_unexposed"] == pytest.approx(0.2558353, abs=1e-6)
    assert doc["standardized_risk_exposed"] == pytest.approx(0.3063322, abs=1e-6)
    assert not doc["is_hull_vertex"]


def test_standardize_degenerate_weights_is_stratum_report(capsys):
    code, out, _ = run(
        capsys, "standardize", "--fixture", "newcastle", "--weights", "1,0", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["standardized_risk_unexposed"] == pytest.approx(65 / 539)
    assert doc["is_hull_vertex"]


def test_standardize_rejects_bad_weights(capsys):
    code, _, err = run(capsys, "standardize", "--fixture", "newcastle", "--weights", "0.7,0.7")
    assert code == 3
    assert "sum to 1" in err


def test_collapse_odds_ratio(capsys):
    code, out, _ = run(capsys, "collapse", "--fixture", "newcastle", "--measure", "or")
    assert code == 0
    assert "minimum standardized value: 1.229" in out
    assert "(0.484, 0.516)" in out
    assert "attenuated-toward-null" in out


def test_collapse_risk_difference(capsys):
    code, out, _ = run(
        capsys, "collapse", "--fixture", "newcastle", "--measure", "rd", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "collapsible-here"
    assert doc["minimum"]["value"] == pytest.approx(doc["maximum"]["value"], abs=1e-9)
    assert doc["common_value"] == pytest.approx(0.052, abs=5e-4)


def test_collapse_risk_ratio_collapsible(capsys):
    code, out, _ = run(
        capsys, "collapse", "--fixture", "newcastle", "--measure", "rr", "--format", "json"
    )
    doc = json.loads(out)
    assert doc["verdict"] == "collapsible-here"
    assert doc["minimum"]["value"] == pytest.approx(1.062, abs=5e-4)


def test_collapse_grid_oracle(capsys):
    code, out, _ = run(
        capsys,
        "collapse", "--fixture", "newcastle", "--measure", "or",
        "--grid-oracle", "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["grid_oracle"]["min_disagreement"] < 5e-4


def test_plot_contours_to_file(capsys, tmp_path):
    out_path = tmp_path / "contours.svg"
    code, _, _ = run(capsys, "plot", "contours", "-o", str(out_path))
    assert code == 0
    root = ET.fromstring(out_path.read_text())
    assert root.tag.endswith("svg")


def test_plot_noncollapsible_stdout(capsys):
    code, out, _ = run(capsys, "plot", "noncollapsible", "--fixture", "newcastle")
    assert code == 0
    assert out.startswith("<?xml")
    assert "1.537" in out


def test_plot_unknown_figure_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["plot", "nosuchfigure", "--fixture", "newcastle"])
    assert exc.value.code == 2
    assert "contours" in capsys.readouterr().err


def test_plot_data_figure_requires_input(capsys):
    code, _, err = run(capsys, "plot", "modification")
    assert code == 2
    assert "--input" in err or "--fixture" in err


def test_parse_error_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(BAD_CSV)
    code, _, err = run(capsys, "measures", "--input", str(path))
    assert code == 3
    assert "cases" in err


def test_missing_file_exit_code(capsys):
    code, _, err = run(capsys, "measures", "--input", "/nonexistent/nope.csv")
    assert code == 3


def test_convergence_error_exit_code(capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise ConvergenceError("no convergence", coefficients=(0.0,), loglik=-1.0, iterations=200)

    monkeypatch.setattr(cli, "fit", explode)
    code, _, err = run(capsys, "fit", "--fixture", "newcastle", "--link", "logit")
    assert code == 4
    assert "iterations: 200" in err


def test_output_is_deterministic(capsys):
    _, first, _ = run(capsys, "fit", "--fixture", "newcastle")
    _, second, _ = run(capsys, "fit", "--fixture", "newcastle")
    assert first == second
