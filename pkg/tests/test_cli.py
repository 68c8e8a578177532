import numpy as np
import pytest

from qqsd.cli import ConfigError, main, parse_config


def test_parse_empty_config_gives_defaults():
    cfg = parse_config("")
    p = cfg.params
    assert (p.Gamma, p.omega_A, p.omega_B) == (1.0, 1.0, 1.0)
    assert p.dt == 1e-3 and p.t_max == 10.0 and p.n_traj == 1000
    assert cfg.mode == "nonlinear" and p.order == 1
    assert cfg.initial == "bell" and cfg.stride == 0.05


def test_parse_figure_preset_style_config():
    cfg = parse_config("gamma = 0.3\nkappa = 1\ninitial = bell\n")
    assert cfg.params.gamma == 0.3
    assert cfg.params.kappa == 1.0
    assert cfg.initial == "bell"


def test_parse_comments_and_custom_state():
    text = """
    # comment line
    n_traj = 3   # trailing comment
    initial = custom 0.7071 0 0 0.7071 0 0
    mode = linear
    order = 0
    """
    cfg = parse_config(text)
    assert cfg.params.n_traj == 3
    assert cfg.mode == "linear"
    assert cfg.params.order == 0
    v = cfg.initial_state()
    assert np.isclose(abs(v[0]), 1 / np.sqrt(2), atol=1e-4)


def test_parse_rejects_bad_dt_with_constraint_name():
    with pytest.raises(ConfigError, match="dt must be > 0"):
        parse_config("dt = -1\n")


def test_parse_rejects_unknown_key_with_line_number():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("gamma = 0.3\nfrobnicate = 1\n")


def test_parse_rejects_garbage_value():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("gamma = fast\n")


def _write_cfg(tmp_path, text):
    f = tmp_path / "run.cfg"
    f.write_text(text)
    return str(f)


def test_simulate_writes_csv_and_metadata(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 0.2\nn_traj = 4\nstride = 0.1\nseed = 3\n")
    rc = main(["--config", cfg, "--out", str(tmp_path / "out"), "simulate"])
    assert rc == 0
    csv = tmp_path / "out" / "simulate.csv"
    assert csv.exists()
    lines = csv.read_text().splitlines()
    assert lines[0] == ("t,negativity,stderr_negativity,rho_11,rho_22,rho_33,"
                        "rho_44,rho_55,rho_66,purity")
    assert len(lines) == 4  # header + t = 0, 0.1, 0.2
    meta = (tmp_path / "out" / "simulate.csv.meta.txt").read_text()
    assert "seed = 3" in meta and "n_traj = 4" in meta
    first = [float(x) for x in lines[1].split(",")]
    assert np.isclose(first[1], 1.0, atol=1e-9)  # bell negativity at t=0


def test_seed_and_traj_overrides(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 0.1\nn_traj = 99\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "--seed", "7",
               "--traj", "2", "simulate"])
    assert rc == 0
    meta = (tmp_path / "simulate.csv.meta.txt").read_text()
    assert "seed = 7" in meta and "n_traj = 2" in meta


def test_master_subcommand(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 1.0\nstride = 0.5\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "master"])
    assert rc == 0
    lines = (tmp_path / "master.csv").read_text().splitlines()
    assert lines[0].startswith("t,negativity,rho_11")
    assert len(lines) == 4


def test_coeffs_subcommand(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 0.05\ndt = 0.01\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "coeffs"])
    assert rc == 0
    lines = (tmp_path / "coeffs.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert len(header) == 1 + 16 + 8 + 2
    row0 = [float(x) for x in lines[1].split(",")]
    assert all(v == 0 for v in row0[1:])  # zero initial data


def test_noise_check_subcommand(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 1.0\ndt = 0.05\nn_traj = 200\nstride = 0.25\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "noise-check"])
    assert rc == 0
    lines = (tmp_path / "noise_check.csv").read_text().splitlines()
    assert lines[0] == "lag,empirical_re,empirical_im,target,stderr"
    row0 = [float(x) for x in lines[1].split(",")]
    assert np.isclose(row0[3], 0.15)  # variance target at lag 0


def test_figure_presets_metadata(tmp_path):
    cfg = _write_cfg(tmp_path, "t_max = 0.1\nn_traj = 2\nstride = 0.05\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "figure", "1a"])
    assert rc == 0
    for g in ("0.1", "0.3", "3"):
        csv = tmp_path / f"fig1a_gamma{g}.csv"
        assert csv.exists()
        meta = (tmp_path / f"fig1a_gamma{g}.csv.meta.txt").read_text()
        assert f"gamma = {g}" in meta
        assert "initial = bell" in meta
        assert "kappa = 1.0" in meta
    rc = main(["--config", cfg, "--out", str(tmp_path), "figure", "2b"])
    assert rc == 0
    meta = (tmp_path / "fig2b_kappa0.5.csv.meta.txt").read_text()
    assert "initial = product-20" in meta and "gamma = 0.3" in meta


def test_steady_scan_subcommand(tmp_path):
    rc = main(["--out", str(tmp_path), "steady"])
    assert rc == 0
    lines = (tmp_path / "steady.csv").read_text().splitlines()
    assert lines[0] == "kappa,rho11_inf,N_s,purity,initial_state_tag"
    assert len(lines) == 1 + 2 * 100  # both families on the 0.01 grid
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    sq = rows[rows[:, 4] == 0.0]
    assert np.all(np.diff(sq[:, 1]) < 0)  # ground weight decreases with kappa
    meta = (tmp_path / "steady.csv.meta.txt").read_text()
    assert "tag_0 = product-20" in meta


def test_bad_config_exit_code(tmp_path):
    cfg = _write_cfg(tmp_path, "dt = -1\n")
    rc = main(["--config", cfg, "--out", str(tmp_path), "simulate"])
    assert rc == 1


def test_missing_config_exit_code(tmp_path):
    rc = main(["--config", str(tmp_path / "nope.cfg"), "simulate"])
    assert rc == 1
