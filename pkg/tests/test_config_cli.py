import numpy as np
import pytest

from almpde.cli import main
from almpde.config import parse_config, build_run, ConfigError
from almpde.grid import build_mesh, load_time_field, dump_space_slice


def write_config(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def sec5_config(tmp_path):
    return write_config(tmp_path / "sec5.cfg", [
        "problem.preset = paper_example_sec5",
        f"run.output_dir = {tmp_path / 'out'}",
    ])


# ----------------------------------------------------------------- parsing

def test_minimal_preset_config_applies_defaults(sec5_config):
    config = parse_config(sec5_config)
    assert config.raw["alm.tau"] == 0.9
    assert config.raw["alm.gamma"] == 2.0
    assert config.raw["alm.eps2"] == 1e-4
    assert config.raw["alm.mu0"] == 10.0       # preset default
    assert config.raw["mesh.nx"] == 5 and config.raw["mesh.nt"] == 4
    spec, alm = build_run(config)
    assert spec.alpha == 1.0
    assert not spec.boundary_control_enabled


def test_tau_validation_message(tmp_path):
    path = write_config(tmp_path / "bad.cfg", [
        "problem.preset = paper_example_sec5",
        "alm.tau = 1.5",
    ])
    with pytest.raises(ConfigError, match=r"tau must lie in \(0,1\)"):
        parse_config(path)


def test_unknown_key_rejected_with_line(tmp_path):
    path = write_config(tmp_path / "bad.cfg", [
        "problem.preset = paper_example_sec5",
        "alm.taus = 0.5",
    ])
    with pytest.raises(ConfigError, match=r":2: unknown key"):
        parse_config(path)


def test_malformed_line_reports_position(tmp_path):
    path = write_config(tmp_path / "bad.cfg", ["problem.preset paper_example_sec5"])
    with pytest.raises(ConfigError, match=r":1: expected 'key = value'"):
        parse_config(path)


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/path.cfg")


def test_max_outer_zero_rejected(tmp_path):
    path = write_config(tmp_path / "bad.cfg", [
        "problem.preset = paper_example_sec5",
        "alm.max_outer = 0",
    ])
    with pytest.raises(ConfigError, match="max_outer"):
        parse_config(path)


def test_custom_problem_requires_field_files(tmp_path):
    path = write_config(tmp_path / "bad.cfg", [
        "mesh.nx = 5", "mesh.ny = 5", "mesh.nt = 4",
        "mesh.lx = 1", "mesh.ly = 1", "mesh.T = 1",
    ])
    with pytest.raises(ConfigError, match="y0_file"):
        parse_config(path)


def test_custom_problem_from_field_files(tmp_path):
    mesh = build_mesh(5, 5, 4, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(0)
    y0 = rng.uniform(-0.5, 0.5, mesh.shape_space)
    yd = rng.uniform(-0.5, 0.5, mesh.shape_space)
    dump_space_slice(y0, "y0", tmp_path / "y0.csv", mesh)
    dump_space_slice(yd, "yd", tmp_path / "yd.csv", mesh)
    path = write_config(tmp_path / "custom.cfg", [
        "mesh.nx = 5", "mesh.ny = 5", "mesh.nt = 4",
        "mesh.lx = 1", "mesh.ly = 1", "mesh.T = 1",
        "problem.y0_file = y0.csv",
        "problem.yd_file = yd.csv",
        "problem.psi = 0.8",
        "problem.alpha = 2.0",
        "problem.ua = -0.5", "problem.ub = 0.5",
    ])
    spec, alm = build_run(parse_config(path))
    assert np.array_equal(spec.y0, y0)
    assert spec.alpha == 2.0
    assert np.all(spec.psi.values == 0.8)
    assert np.all(spec.bounds.ub.values == 0.5)


def test_preset_overrides(tmp_path):
    path = write_config(tmp_path / "o.cfg", [
        "problem.preset = paper_example_sec5",
        "problem.psi = 2.0",
        "alm.mu0 = 3.0",
        "mesh.nx = 7",
    ])
    config = parse_config(path)
    spec, alm = build_run(config)
    assert spec.mesh.nx == 7
    assert np.all(spec.psi.values == 2.0)
    assert alm.mu0 == 3.0


# --------------------------------------------------------------------- run

def test_run_command_sec5(sec5_config, tmp_path):
    code = main(["run", "--config", sec5_config])
    assert code == 0
    out = tmp_path / "out"
    lines = (out / "trace.csv").read_text().strip().splitlines()
    assert lines[0].startswith("k,n,rho,R,success")
    last = lines[-1].split(",")
    assert float(last[3]) <= 1e-4      # final success residual
    report = (out / "report.txt").read_text()
    assert "termination: tolerance_met" in report


def test_run_command_dumps_fields(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = unconstrained_decay",
        f"run.output_dir = {tmp_path / 'out'}",
        "run.dump_fields = true",
    ])
    assert main(["run", "--config", cfg]) == 0
    mesh = build_mesh(5, 5, 4, 1.0, 1.0, 1.0)
    for name in ("y_final", "u_final", "mu_final", "p_final"):
        f = load_time_field(tmp_path / "out" / f"{name}.csv", mesh)
        assert np.all(np.isfinite(f.values))


def test_run_command_unconstrained_one_iteration(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = unconstrained_decay",
        f"run.output_dir = {tmp_path / 'out'}",
    ])
    assert main(["run", "--config", cfg]) == 0
    lines = (tmp_path / "out" / "trace.csv").read_text().strip().splitlines()
    assert len(lines) == 2  # header plus a single outer iteration


def test_run_command_exit_2_on_max_outer(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = paper_example_sec5",
        "alm.max_outer = 2",
        f"run.output_dir = {tmp_path / 'out'}",
    ])
    assert main(["run", "--config", cfg]) == 2


def test_run_command_exit_1_on_bad_config(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = paper_example_sec5",
        "alm.max_outer = 0",
    ])
    assert main(["run", "--config", cfg]) == 1
    assert "max_outer" in capsys.readouterr().err


def test_run_command_exit_1_on_missing_config():
    assert main(["run", "--config", "/no/such/file.cfg"]) == 1


def test_run_outputs_are_deterministic(tmp_path):
    cfg1 = write_config(tmp_path / "a.cfg", [
        "problem.preset = paper_example_sec5",
        f"run.output_dir = {tmp_path / 'o1'}",
    ])
    cfg2 = write_config(tmp_path / "b.cfg", [
        "problem.preset = paper_example_sec5",
        f"run.output_dir = {tmp_path / 'o2'}",
    ])
    assert main(["run", "--config", cfg1]) == 0
    assert main(["run", "--config", cfg2]) == 0
    t1 = (tmp_path / "o1" / "trace.csv").read_bytes()
    t2 = (tmp_path / "o2" / "trace.csv").read_bytes()
    assert t1 == t2


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("ALMPDE_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = unconstrained_decay",
        "run.output_dir = rel_out",
    ])
    assert main(["run", "--config", cfg]) == 0
    assert (tmp_path / "root" / "rel_out" / "trace.csv").exists()


# ------------------------------------------------------------------ verify

def test_verify_single_check(tmp_path):
    code = main(["verify", "--check", "argmin_bruteforce", "--output", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "verify_report.csv").read_text().strip().splitlines()
    assert report[0] == "check,error,tolerance,pass"
    assert report[1].startswith("argmin_bruteforce") and report[1].endswith(",1")


def test_verify_forced_failure(tmp_path):
    code = main(["verify", "--check", "argmin_bruteforce",
                 "--tolerance-override", "0", "--output", str(tmp_path)])
    assert code == 1



# ------------------------------------------------------------------- sweep

def test_sweep_two_values(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = paper_example_sec5",
        f"run.output_dir = {tmp_path / 'out'}",
    ])
    assert main(["sweep", "--config", cfg, "--param", "tau", "--values", "0.5,0.9"]) == 0
    summary = (tmp_path / "out_sweep" / "summary.csv").read_text().strip().splitlines()
    assert summary[0] == "value,outer_iters,final_R,final_J,status"
    assert len(summary) == 3
    assert (tmp_path / "out_sweep" / "tau_0.5" / "trace.csv").exists()
    assert (tmp_path / "out_sweep" / "tau_0.9" / "trace.csv").exists()
    for line in summary[1:]:
        assert line.endswith("tolerance_met")


def test_sweep_gamma_values_both_converge(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", [
        "problem.preset = paper_example_sec5",
        f"run.output_dir = {tmp_path / 'out'}",
    ])
    assert main(["sweep", "--config", cfg, "--param", "gamma", "--values", "2,4"]) == 0
    summary = (tmp_path / "out_sweep" / "summary.csv").read_text().strip().splitlines()
    for line in summary[1:]:
        fields = line.split(",")
        assert float(fields[2]) <= 1e-4        # final residual
        assert fields[4] == "tolerance_met"


def test_sweep_empty_values_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.cfg", ["problem.preset = paper_example_sec5"])
    assert main(["sweep", "--config", cfg, "--param", "tau", "--values", ""]) == 1
    assert "at least one value" in capsys.readouterr().err


def test_sweep_unknown_param_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.cfg", ["problem.preset = paper_example_sec5"])
    assert main(["sweep", "--config", cfg, "--param", "zeta", "--values", "1"]) == 1


# ------------------------------------------------------------------- bench

def test_bench_smoke():
    assert main(["bench", "--nx", "9", "--ny", "9", "--nt", "3", "--reps", "1"]) == 0
