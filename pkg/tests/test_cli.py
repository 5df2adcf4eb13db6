import json

import pytest
from click.testing import CliRunner

from anyonlt.config import RunConfig
from anyonlt.pipelines.cli import main, run
from anyonlt.pipelines.common import iter_range, spawn_seeds, within
from anyonlt.pipelines.summarize_runs import summarize


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("ANYONLT_OUT", "ANYONLT_PARALLEL", "ANYONLT_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


def _report(root, suite):
    return json.loads((root / suite / "report.json").read_text())


def test_version():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "anyonlt" in result.output


def test_bessel_point_on_the_plateau(tmp_path):
    result = CliRunner().invoke(main, ["verify-bessel", "--nu", "1", "--gamma", "1", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rep = _report(tmp_path, "verify-bessel")
    assert rep["status"] == "pass"
    check = rep["checks"][0]
    assert check["name"] == "g(nu=1,gamma=1)"
    assert check["measured"] == 1.0
    assert check["runtime"] is None


def test_failed_check_exits_one(tmp_path):
    args = ["verify-bessel", "--nu", "1", "--gamma", "1", "--out", str(tmp_path), "--tol", "plateau=-1"]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 1
    assert _report(tmp_path, "verify-bessel")["status"] == "fail"


def test_nu_needs_gamma(tmp_path):
    result = CliRunner().invoke(main, ["verify-bessel", "--nu", "1", "--out", str(tmp_path)])
    assert result.exit_code == 2


@pytest.mark.parametrize(
    "extra",
    [["--tol", "nonsense=1"], ["--tol", "plateau"]],
)
def test_bad_tolerance_flags_exit_two(tmp_path, extra):
    result = CliRunner().invoke(main, ["verify-bessel", "--nu", "1", "--gamma", "1", "--out", str(tmp_path), *extra])
    assert result.exit_code == 2
    assert "config error" in result.output


def test_bad_config_file_exits_two(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text('{\n  "sede": 1\n}\n')
    result = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert f"{cfg}:2:3" in result.output


def test_record_runtime(tmp_path):
    args = ["verify-bessel", "--nu", "2", "--gamma", "1.5", "--out", str(tmp_path), "--record-runtime"]
    assert CliRunner().invoke(main, args).exit_code == 0
    assert _report(tmp_path, "verify-bessel")["checks"][0]["runtime"] >= 0.0
    assert "total" in json.loads((tmp_path / "verify-bessel" / "timings.json").read_text())


def test_environment_overrides_out(tmp_path, monkeypatch):
    env_root = tmp_path / "from-env"
    monkeypatch.setenv("ANYONLT_OUT", str(env_root))
    args = ["verify-bessel", "--nu", "1", "--gamma", "1", "--out", str(tmp_path / "from-flag")]
    assert CliRunner().invoke(main, args).exit_code == 0
    assert (env_root / "verify-bessel" / "report.json").exists()
    assert not (tmp_path / "from-flag").exists()


def test_constants_are_reproducible(tmp_path):
    args = ["constants", "--no-measure", "--out", str(tmp_path)]
    first = CliRunner().invoke(main, args)
    assert first.exit_code == 0, first.output
    a = (tmp_path / "constants" / "report.json").read_bytes()
    assert CliRunner().invoke(main, args).exit_code == 0
    assert (tmp_path / "constants" / "report.json").read_bytes() == a

    rep = _report(tmp_path, "constants")
    names = {c["name"] for c in rep["checks"]}
    assert {"chain_example", "epsilon_below_one", "finite_n_linear", "corridor_identity"} <= names
    ledger = json.loads((tmp_path / "constants" / "ledger.json").read_text())
    assert ledger["b_2"]["provenance"] == "abstract-parameter"
    assert ledger["C_EA"]["value"] is None
    assert (tmp_path / "constants" / "ledger.dot").read_text().startswith("digraph ledger {")


def test_constants_with_overrides(tmp_path):
    overrides = tmp_path / "ledger.json"
    overrides.write_text(json.dumps({"C_2": 0.5, "b_2": 16, "underline_N": 2}))
    args = ["constants", "--no-measure", "--ledger", str(overrides), "--out", str(tmp_path)]
    assert CliRunner().invoke(main, args).exit_code == 0
    ledger = json.loads((tmp_path / "constants" / "ledger.json").read_text())
    assert ledger["C_EA"]["value"] is not None


def test_covering_command(tmp_path):
    args = ["covering", "--density", "uniform", "--seeds", "1", "--out", str(tmp_path)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    out = tmp_path / "covering"
    assert (out / "covering.csv").exists()
    assert (out / "covering_overlay.svg").read_text().lstrip().startswith("<?xml")


def test_run_from_python(tmp_path):
    config = RunConfig(suite="constants", out_dir=str(tmp_path)).with_block("constants", measure=False)
    report = run(config)
    assert report.ok
    assert (tmp_path / "constants" / "ledger.csv").exists()


def test_summarize(tmp_path):
    CliRunner().invoke(main, ["verify-bessel", "--nu", "1", "--gamma", "1", "--out", str(tmp_path)])
    text = summarize(tmp_path)
    assert "| verify-bessel" in text
    md = tmp_path / "RESULTS.md"
    result = CliRunner().invoke(main, ["summarize", "--runs-dir", str(tmp_path), "--out-md", str(md)])
    assert result.exit_code == 0
    assert md.read_text().startswith("# Results summary")
    assert summarize(tmp_path / "nothing") == "(no reports found)"


def test_helpers():
    assert iter_range("0.0:1.0:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert iter_range("0.2, 0.5") == [0.2, 0.5]
    with pytest.raises(ValueError):
        iter_range("0:1:0")
    assert spawn_seeds(3, 4) == spawn_seeds(3, 4)
    assert len(set(spawn_seeds(3, 4))) == 4
    assert within([0.0, 2.0], [0.0, 2.01], 0.01)
    assert not within([1e-3], [0.0], 1e-4)


@pytest.mark.slow
def test_two_anyon_suite(tmp_path):
    args = ["two-anyon", "--n-side", "10", "--alphas", "0.5:1.5:0.5", "--out", str(tmp_path)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "two-anyon" / "trial_state.csv").exists()
    profile = (tmp_path / "two-anyon" / "e2_profile.csv").read_text().splitlines()
    assert [float(line.split(",")[0]) for line in profile[1:]] == [0.5, 1.0, 1.5]
    rep = _report(tmp_path, "two-anyon")
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["e2_alpha_one_gauge"]["status"] == "pass"
    assert "1/log(n_side)" in checks["e2_at_alpha_one"]["detail"]
    assert (tmp_path / "two-anyon" / "alpha_one_trend.csv").exists()


@pytest.mark.slow
def test_everything(tmp_path):
    result = CliRunner().invoke(main, ["all", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    rep = _report(tmp_path, "all")
    assert any(c["name"].startswith("constants/") for c in rep["checks"])
    for stage in ("verify-bessel", "verify-diamagnetic", "two-anyon", "covering", "constants"):
        assert (tmp_path / stage / "report.json").exists()


REDUCED = {
    "radial": {"plateau_nu_count": 4, "jprime_nu_count": 8, "sweep_gammas": [0.01, 0.1, 1.0]},
    "magnetic_grid": {"n_side": 17, "free_n_side": 33, "gauge_n_side": 17, "fields": 2, "sources": 3},
    "two_anyon": {
        "n_side": 8,
        "profile_alphas": [0.5, 1.0, 1.5],
        "scaling_n_side": 8,
        "trial_alphas": [0.5],
        "trial_radii": [0.1],
    },
    "covering": {"densities": ["uniform"], "seeds": 1},
    "constants": {"random_ledgers": 50, "corridor_samples": 50},
}


def _snapshot(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != "timings.json"
    }


@pytest.mark.slow
def test_everything_is_byte_identical_across_runs(tmp_path):
    cfg = tmp_path / "reduced.json"
    cfg.write_text(json.dumps(REDUCED))
    out = tmp_path / "runs"
    args = ["all", "--config", str(cfg), "--seed", "7", "--out", str(out)]
    first = CliRunner().invoke(main, args)
    assert first.exit_code in (0, 1), first.output
    before = _snapshot(out)
    assert "all/report.json" in before
    assert "two-anyon/e2_profile.csv" in before
    second = CliRunner().invoke(main, args)
    assert second.exit_code == first.exit_code
    assert _snapshot(out) == before


def test_two_anyon_point_with_outside_particles(tmp_path):
    pts = tmp_path / "outside.json"
    pts.write_text(json.dumps([[1.5, 0.5]]))
    args = ["two-anyon", "--alpha", "0.5", "--gamma", "0.05", "--n-side", "8", "--outside", str(pts),
            "--out", str(tmp_path)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    extras = _report(tmp_path, "two-anyon")["extras"]
    assert extras["outside"] == [[1.5, 0.5]]
    assert extras["energy"] > 0
    assert 0 <= extras["residual"] < 1e-4
    assert extras["antisymmetry_defect"] < 1e-8


def test_outside_particle_inside_the_square_exits_one(tmp_path):
    pts = tmp_path / "outside.json"
    pts.write_text(json.dumps({"outside": [[0.5, 0.5]]}))
    args = ["two-anyon", "--alpha", "0.5", "--gamma", "0.05", "--n-side", "8", "--outside", str(pts),
            "--out", str(tmp_path)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 1
    assert "outside" in result.output


@pytest.mark.parametrize("alphas", ["0:1:0", "a,b", "1:0:0.5"])
def test_bad_alpha_list_exits_two(tmp_path, alphas):
    result = CliRunner().invoke(main, ["two-anyon", "--alphas", alphas, "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_nonpositive_shift_exits_two(tmp_path):
    result = CliRunner().invoke(main, ["verify-diamagnetic", "--shift-e", "0", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_shift_reaches_the_diamagnetic_suite(tmp_path):
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps({"magnetic_grid": REDUCED["magnetic_grid"]}))
    args = ["verify-diamagnetic", "--config", str(cfg), "--shift-e", "2.5", "--out", str(tmp_path)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code in (0, 1), result.output
    assert _report(tmp_path, "verify-diamagnetic")["config"]["magnetic_grid"]["shift_e"] == 2.5
    doc = json.loads((tmp_path / "verify-diamagnetic" / "diamagnetic.json").read_text())
    assert doc["shift_e"] == 2.5
