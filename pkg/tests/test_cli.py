import subprocess
import sys

import pytest

from lflts.cli import ConfigError, EXIT_ASSERT, EXIT_BLOWUP, EXIT_CONFIG, main, parseConfig


def test_parse_flags_override_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# study\nscenario = gaussian-pulse\nh_list = 0.04, 0.02\nnu = 0.1\n")
    from lflts.cli import read_config_file
    cfg = parseConfig("converge", read_config_file(cfg_file), {"nu": "0.01"})
    assert cfg.scenario == "gaussian-pulse" and cfg.h_list == (0.04, 0.02)
    assert cfg.nu == (0.01,)


def test_defaults():
    cfg = parseConfig("converge", {}, {"scenario": "gaussian-pulse", "h_list": "0.04,0.02,0.01,0.005"})
    assert cfg.variant == "lflts" and cfg.nu == (0.01,)
    sc = cfg.build_scenario()
    assert sc.p == 2 and sc.courant_factor == 1.0


@pytest.mark.parametrize("flags,needle", [
    ({}, "scenario, h_list"),
    ({"scenario": "moon", "h_list": "0.1"}, "scenario"),
    ({"scenario": "gaussian-pulse", "h_list": "0.02,0.04"}, "h_list"),
    ({"scenario": "gaussian-pulse", "h_list": "0.03"}, "h_list"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "nu": "0.7"}, "nu"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "p": "2.5"}, "p"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "variant": "rk4"}, "variant"),
    ({"scenario": "gaussian-pulse", "h_list": "x"}, "h_list"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "T": "2"}, "T"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "weighting": "smooth"}, "weighting"),
    ({"scenario": "gaussian-pulse", "h_list": "0.04", "plot": "maybe"}, "plot"),
])
def test_config_errors_name_key(flags, needle):
    with pytest.raises(ConfigError) as info:
        parseConfig("converge", {}, flags)
    assert needle in str(info.value)


def test_unknown_key_in_file(tmp_path, capsys):
    f = tmp_path / "bad.cfg"
    f.write_text("scenario = gaussian-pulse\nspeed = 3\n")
    assert main(["converge", "--config", str(f)]) == EXIT_CONFIG
    assert "speed" in capsys.readouterr().err


def test_weighted_with_constant():
    cfg = parseConfig("converge", {}, {"scenario": "shifted-across", "h_list": "0.04",
                                       "weighting": "weighted(0.2)"})
    assert cfg.weighting == "weighted" and cfg.c_s == 0.2


def test_coeffs_degenerate(capsys):
    assert main(["coeffs", "--p", "2", "--nu", "0", "--assert"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "p,nu,kind,k,l,value"
    rows = [r.split(",") for r in out[1:]]
    vals = [float(r[5]) for r in rows if r[2] in ("beta", "gamma") and not (r[3] == "0" and r[4] == "-1")]
    assert vals and all(v == 1.0 for v in vals)


def test_converge_single_row_and_determinism(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"c{i}.csv"
        assert main(["converge", "--scenario", "gaussian-pulse", "--h", "0.04", "-o", str(path)]) == 0
        outs.append(path.read_text())
    lines = outs[0].splitlines()
    assert lines[0] == "h,dofs,errL2rel,errH1rel,runtime_s" and len(lines) == 2
    strip = [[ln.rsplit(",", 1)[0] for ln in o.splitlines()] for o in outs]
    assert strip[0] == strip[1]


def test_converge_assert_and_plot(tmp_path):
    path = tmp_path / "conv.csv"
    code = main(["converge", "--scenario", "gaussian-pulse", "--h", "0.04,0.02,0.01,0.005",
                 "-o", str(path), "--plot", "--assert"])
    assert code == 0
    assert "# slope_L2=" in path.read_text()
    svg = path.with_suffix(".svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_compare_columns_and_assert(tmp_path):
    path = tmp_path / "cmp.csv"
    code = main(["compare", "--scenario", "gaussian-pulse", "--h", "0.04,0.02", "-o", str(path)])
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:5] == ["h", "dofs", "errL2_lflts", "errL2_split", "ratio_L2"]
    assert lines[0].endswith("runtime_s") and len(lines) == 3
    # the acceptance band is asserted only when requested
    code = main(["compare", "--scenario", "gaussian-pulse", "--h", "0.04,0.02", "-o", str(path),
                 "--assert"])
    assert code in (0, EXIT_ASSERT)


def test_scan_paired_columns(tmp_path):
    path = tmp_path / "scan.csv"
    code = main(["scan", "--scenario", "gaussian-pulse", "--h", "0.04", "--nu", "0", "--nu", "0.01",
                 "--T", "1", "-o", str(path), "--assert", "--plot"])
    assert code == 0
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["dt_over_h", "dt", "stable_nu=0", "blowup_step_nu=0",
                      "stable_nu=0.01", "blowup_step_nu=0.01"]
    assert path.with_suffix(".svg").exists()


def test_run_writes_trajectory_and_field(tmp_path):
    path = tmp_path / "traj.csv"
    assert main(["run", "--scenario", "gaussian-pulse", "--h", "0.04", "-o", str(path), "--plot"]) == 0
    assert path.read_text().startswith("n,t,norm,energy\n")
    field = tmp_path / "traj_field.csv"
    assert field.read_text().startswith("x,u\n")
    assert (tmp_path / "traj.svg").exists() and (tmp_path / "traj_field.svg").exists()


def test_run_blowup_exit_code(tmp_path):
    code = main(["run", "--scenario", "gaussian-pulse", "--h", "0.04", "--courant", "2",
                 "--T", "1.5", "-o", str(tmp_path / "b.csv")])
    assert code == EXIT_BLOWUP


def test_run_needs_single_h():
    assert main(["run", "--scenario", "gaussian-pulse", "--h", "0.04,0.02"]) == EXIT_CONFIG


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lflts", "coeffs", "--p", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("p,nu,kind")
    res = subprocess.run([sys.executable, "-m", "lflts", "converge"], capture_output=True, text=True)
    assert res.returncode == EXIT_CONFIG and "scenario" in res.stderr
