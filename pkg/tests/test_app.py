import json

import pytest

from frakgeo.adapters.report_store import load_config
from frakgeo.app import run
from frakgeo.core.errors import ConfigError
from frakgeo.models.schema import CHECK_NAMES, JobConfig
from frakgeo.services.pipeline import grade, run_job

from .conftest import job

FLAT = [(1.0, [0], [2])]
CURVED = [(1.0, [0], [2]), (1.0, [1], [2])]
DEGENERATE = [(1.0, [1, 0], [1, 0])]
CROSS = [(1.0, [0, 0], [2, 0]), (1.0, [0, 0], [0, 2]), (1.0, [1, 0], [1, 1])]
BASE_ONLY = [(1.0, [2], [0])]


def _records(report):
    return {(c["name"], c["alpha"]): c for c in report["checks"]}


def test_grade():
    assert grade(1e-6, 1e-4, True) == "pass"
    assert grade(1e-2, 1e-4, True) == "fail"
    assert grade(1e-2, 1e-4, False) == "warn"
    assert grade(float("nan"), 1e-4, False) == "warn"
    assert grade(None, 1e-4, True) == "fail"


def test_config_validation():
    with pytest.raises(ValueError):
        JobConfig.model_validate(job(1, FLAT, alpha=1.5))
    with pytest.raises(ValueError):
        JobConfig.model_validate(job(1, FLAT, points=8))
    with pytest.raises(ValueError):
        JobConfig.model_validate({**job(1, FLAT), "unexpected": 1})
    with pytest.raises(ValueError):
        JobConfig.model_validate(job(1, FLAT, checks=["hessian", "bogus"]))
    cfg = JobConfig.model_validate(job(1, FLAT, alpha=[1.0, 0.5], checks=["spray", "hessian"]))
    assert cfg.alphas() == [1.0, 0.5]
    assert cfg.checks == ["hessian", "spray"]


def test_load_config_errors(tmp_path, write_config):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(write_config({"dimension": 1}))


def test_flat_job_passes(capsys, write_config):
    code = run(["check", "--config", write_config(job(1, FLAT))])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["schema_version"] == 1
    assert report["seed"] == 42
    assert report["checks"]
    assert all(c["verdict"] == "pass" for c in report["checks"])
    assert any(c["name"] == "hessian.oracle" for c in report["checks"])


def test_degenerate_job_fails(capsys, write_config):
    code = run(["check", "--config", write_config(job(2, DEGENERATE, points=16))])
    report = json.loads(capsys.readouterr().out)
    assert code == 2
    first = report["checks"][0]
    assert first["name"] == "hessian.regularity"
    assert first["verdict"] == "fail"
    assert first["max_residual"] is None
    assert "degenerates" in first["detail"]
    assert report["metadata"]["det_g_min"] == {"1": 0.0}


def test_fractional_job_warns_but_passes(tmp_path, write_config):
    out = tmp_path / "reports" / "corpus.json"
    code = run(["check", "--config", write_config(job(1, CURVED, points=33)), "--alpha", "0.5", "--output", str(out)])
    report = json.loads(out.read_text(encoding="utf-8"))
    assert code == 0
    records = _records(report)
    assert records[("compatibility.metricity", 0.5)]["verdict"] == "pass"
    assert records[("dconnection.metricity", 0.5)]["verdict"] == "pass"
    soft = [c for c in report["checks"] if c["name"].startswith("symplectic.") and not c["hard"]]
    assert soft and all(c["verdict"] in ("pass", "warn") for c in soft)
    assert not any(c["name"].endswith(".oracle") for c in report["checks"])


def test_reports_are_reproducible(tmp_path, write_config):
    path = write_config(job(1, CURVED, alpha=[1.0, 0.5], points=17))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["report", "--config", path, "--output", str(a)]) == 0
    assert run(["report", "--config", path, "--output", str(b)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert set(ra["timing"]) == {"generated_at", "wall_time"}
    ra.pop("timing"), rb.pop("timing")
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)
    assert {c["alpha"] for c in ra["checks"]} == {1.0, 0.5}


def test_seed_override_is_recorded(write_config):
    cfg = load_config(write_config(job(1, FLAT)))
    report = run_job(cfg, seed=5)
    assert report.seed == 5
    assert report.exit_code == 0


def test_finsler_check_runs_only_when_flagged(write_config):
    plain = run_job(load_config(write_config(job(1, CURVED))))
    assert not any(c.name.startswith("finsler.") for c in plain.checks)
    flagged = run_job(load_config(write_config(job(1, CURVED + [(1.0, [0], [1])], finsler=True), name="finsler.json")))
    homogeneity = [c for c in flagged.checks if c.name == "finsler.homogeneity"]
    assert homogeneity and homogeneity[0].verdict == "fail"


def test_usage_and_config_errors_exit_one(tmp_path, write_config, capsys):
    assert run(["check", "--config", str(tmp_path / "nope.json")]) == 1
    assert run(["check", "--config", write_config(job(1, FLAT)), "--alpha", "1.5"]) == 1
    assert run(["check"]) == 1
    assert run(["check", "--bogus-flag"]) == 1
    assert run(["nonsense"]) == 1
    assert run(["--log-level", "chatty", "check", "--config", write_config(job(1, FLAT))]) == 1


def test_list_checks(capsys):
    assert run(["--list-checks"]) == 0
    assert capsys.readouterr().out.split() == list(CHECK_NAMES)


@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_fractional_cross_term_job_has_no_hard_failures(write_config, alpha):
    report = run_job(load_config(write_config(job(2, CROSS, alpha=alpha, points=16, upper=0.5))))
    assert report.exit_code == 0
    assert not [c.name for c in report.checks if c.name.endswith(".error")]
    assert not [c.name for c in report.checks if c.verdict == "fail"]
    records = {c.name: c for c in report.checks}
    assert records["nconnection.duality"].verdict == "pass"
    assert records["dconnection.metricity"].max_residual <= 1e-3
    assert records["compatibility.metricity"].max_residual <= 1e-3
    assert records["symplectic.d_theta"].verdict == "warn"


def test_fractional_closure_misses_tolerance_in_two_dimensions(write_config):
    report = run_job(load_config(write_config(job(2, CROSS, alpha=0.5, points=17, upper=0.5))))
    records = {c.name: c for c in report.checks}
    for name in ("symplectic.d_omega_minus_theta", "symplectic.d_theta", "symplectic.d_theta_expansion"):
        record = records[name]
        assert not record.hard
        assert record.verdict == "warn"
        assert 1e-2 < record.max_residual < 0.5
    assert records["structure.first"].hard
    assert not records["structure.second"].hard
    assert report.exit_code == 0


def test_fibre_independent_lagrangian_fails_regularity(capsys, write_config):
    code = run(["check", "--config", write_config(job(1, BASE_ONLY))])
    report = json.loads(capsys.readouterr().out)
    assert code == 2
    assert [c["name"] for c in report["checks"]] == ["hessian.regularity"]
    assert report["checks"][0]["verdict"] == "fail"
    assert "fibre" in report["checks"][0]["detail"]
