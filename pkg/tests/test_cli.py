"""End-to-end command line runs: exit codes, artifacts, reproducibility."""

import hashlib
import json

import pytest

from blowup_lab.cli import main

BASE = """\
[model]
p = 2.0

[trajectory]
d0 = 0.0
d1 = 0.0
s0 = 20.0
s_end = 20.5

[solver]
ds = 0.02

[experiment]
kind = trajectory
"""


@pytest.fixture
def base_ini(tmp_path):
    path = tmp_path / "base.ini"
    path.write_text(BASE)
    return path


def test_short_trajectory_run_passes(base_ini, tmp_path, capsys):
    out = tmp_path / "res"
    rc = main(["run", str(base_ini), "--out", str(out)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "running trajectory" in captured.out
    assert "PASS" in captured.out
    names = sorted(p.name for p in out.iterdir())
    assert names == ["MANIFEST.txt", "config.txt", "report.json", "trajectory.csv"]
    report = json.loads((out / "report.json").read_text())
    assert report["ok"] is True
    assert report["initially_inside"] is True
    # the untuned baseline leaves through the even expanding mode just before
    # the window closes; a clean transverse mode exit still counts as a pass
    assert report["survived"] is False
    assert report["exit"]["component"] == "q0"
    assert report["exit"]["transverse"] is True


def test_report_is_sorted_json(base_ini, tmp_path):
    out = tmp_path / "res"
    main(["run", str(base_ini), "--out", str(out)])
    text = (out / "report.json").read_text()
    parsed = json.loads(text)
    assert text == json.dumps(parsed, sort_keys=True, indent=2) + "\n"


def test_manifest_digests_match_files(base_ini, tmp_path):
    out = tmp_path / "res"
    main(["run", str(base_ini), "--out", str(out)])
    lines = (out / "MANIFEST.txt").read_text().splitlines()
    assert lines[0].startswith("config ")
    assert len(lines[0].split()[1]) == 64
    listed = {}
    for line in lines[1:]:
        digest, name = line.split()
        listed[name] = digest
    assert sorted(listed) == ["config.txt", "report.json", "trajectory.csv"]
    for name, digest in listed.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_reruns_are_byte_identical(base_ini, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", str(base_ini), "--out", str(out1)])
    main(["run", str(base_ini), "--out", str(out2)])
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_kind_flag_beats_config_and_override(base_ini, tmp_path, capsys):
    out = tmp_path / "res"
    rc = main([
        "run", str(base_ini), "--out", str(out),
        "--override", "experiment.kind=trajectory",
        "--kind", "spectral-checks",
    ])
    assert rc == 0
    assert "running spectral-checks" in capsys.readouterr().out
    assert (out / "gram.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["orthogonality"] is True
    assert report["profile_residual_over_eps"] < 10.0


def test_override_lands_in_config_txt(base_ini, tmp_path):
    out = tmp_path / "res"
    main([
        "run", str(base_ini), "--out", str(out),
        "--override", "solver.include_residual=off",
    ])
    lines = (out / "config.txt").read_text().splitlines()
    assert "solver.include_residual=false" in lines
    assert "trajectory.s_end=20.5" in lines  # file value survives


def test_failed_check_returns_one_but_writes_artifacts(base_ini, tmp_path, capsys):
    # untuned d0 misses the nominal blow-up time by ~1e-2 relative, far
    # beyond the requested tolerance, so the check fails (and is reported)
    out = tmp_path / "res"
    rc = main([
        "run", str(base_ini), "--out", str(out), "--kind", "physical",
        "--override", "physical.n_x=801",
        "--override", "physical.t_rel_tol=1e-9",
    ])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["blowup_time"] is False
    assert report["rel_T_err"] > 1e-3


def test_config_errors_return_two(base_ini, tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.ini")]) == 2
    assert "config file not found" in capsys.readouterr().err

    rc = main(["run", str(base_ini), "--override", "model.alpha=2.0"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "config error: [model] supercritical alpha" in err
    assert "need alpha < 2p/(p+1) = 1.3333333333333333" in err

    assert main(["run", str(base_ini), "--override", "solver.ds"]) == 2
    assert "not of the form" in capsys.readouterr().err

    assert main(["run", str(base_ini), "--kind", "warp"]) == 2
    assert "must be one of" in capsys.readouterr().err


def test_numerical_failure_returns_three(base_ini, tmp_path, capsys):
    # an absurd step size cap makes the first steps leap past the entire
    # blow-up window; the estimator cannot fit and the run aborts
    out = tmp_path / "res"
    rc = main([
        "run", str(base_ini), "--out", str(out), "--kind", "physical",
        "--override", "physical.n_x=801",
        "--override", "physical.cfl=1e9",
        "--override", "physical.lam=1e9",
    ])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err
    assert not out.exists()  # nothing half-written
