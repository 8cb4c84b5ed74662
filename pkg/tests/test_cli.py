import json
from pathlib import Path

import numpy as np

from nopolab import cli, presets


def _read_csv(path: Path):
    meta, header, rows = {}, None, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(" = ")
            meta[key] = val
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


def test_list_presets_catalog(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "fig_totalmoment" in out
    assert '"g2": 0.001' in out and '"gamma_r_list": [0.5]' in out
    assert "fig_mu093" in out and '"mu": 0.93' in out and '"gamma_r": 0.01' in out
    assert "crit_xx" in out and "eta_grid" in out
    # stable ordering
    names = [row["name"] for row in presets.catalog()]
    assert names == sorted(names)


def test_unknown_preset_exits_2(capsys):
    assert cli.main(["preset", "no_such_thing", "--out", "/tmp/x"]) == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_toml_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment\nname=")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2


def test_analytic_at_threshold_is_clean_domain_error(tmp_path, capsys):
    cfg = tmp_path / "at_threshold.toml"
    cfg.write_text(
        """
[experiment]
name = "at_threshold"
representation = "analytic"
seed = 0
outputs = ["analytic_spectrum"]

[analytic]
g2 = 0.001
gamma_r = 0.01
mu = 1.0
""")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "threshold" in err


def test_bad_parameterization_exits_2(tmp_path):
    cfg = tmp_path / "two_styles.toml"
    cfg.write_text(
        """
[experiment]
name = "x"
representation = "positive_p"
seed = 0
outputs = ["moments"]

[params]
g2 = 0.001
gamma_r = 1.0
mu = 0.5

[params.physical]
gamma0 = 1.0
gamma = 1.0
chi = 0.01
drive = 1.0
""")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_fault_budget_exits_3(tmp_path):
    cfg = tmp_path / "diverge.toml"
    cfg.write_text(
        """
[experiment]
name = "diverge"
representation = "positive_p"
seed = 1
outputs = ["moments"]

[params]
g2 = 0.0001
gamma_r = 1.0
mu = 0.5

[integrator]
dt = 3.0
t_burn = 0.0
t_record = 3000.0
n_traj = 4
record_dt = 3.0
batch_size = 4
scheme = "euler"
""")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_analytic_preset_round_trip(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["analytic", "fig_optsqueeze", "--out", str(out1)]) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["artifacts"] == ["analytic_zero_freq.csv"]
    assert cli.main(["run", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
    assert (out1 / "analytic_zero_freq.csv").read_bytes() == \
        (out2 / "analytic_zero_freq.csv").read_bytes()


def test_analytic_verb_rejects_simulation_preset(tmp_path):
    assert cli.main(["analytic", "fig_mu05", "--out", str(tmp_path)]) == 2


def test_small_simulation_run_artifacts(tmp_path):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(
        """
[experiment]
name = "tiny"
representation = "positive_p"
seed = 7
outputs = ["nl_spectrum", "spectra", "moments", "epr"]

[params]
g2 = 0.005
gamma_r = 1.0
mu = 0.5

[integrator]
dt = 0.01
t_burn = 5.0
t_record = 60.0
n_traj = 8
record_dt = 0.1
batch_size = 8
with_linear_companion = true

[spectra]
t_seg = 20.0
omega_max = 8.0
""")
    out1 = tmp_path / "o1"
    assert cli.main(["run", str(cfg), "--out", str(out1)]) == 0
    meta, header, rows = _read_csv(out1 / "nl_spectrum.csv")
    assert header == ["omega", "v_nl_sim", "v_nl_sim_se", "v_nl_analytic"]
    assert meta["name"] == "tiny" and meta["seed"] == "7"
    assert len(rows) > 10
    _, h2, _ = _read_csv(out1 / "spectra.csv")
    assert h2 == ["omega", "v0", "v0_se", "vpi2", "vpi2_se"]
    _, h3, r3 = _read_csv(out1 / "moments.csv")
    assert h3 == ["moment", "value", "se", "analytic", "z"]
    assert [r[0] for r in r3] == ["x0_2", "xx1", "yy1", "triple", "total_squeeze"]
    _, h4, _ = _read_csv(out1 / "epr.csv")
    assert h4[:3] == ["omega", "v0", "vpi2"]

    # manifest round trip is bit-identical
    out2 = tmp_path / "o2"
    assert cli.main(["run", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
    for name in ("nl_spectrum.csv", "spectra.csv", "moments.csv", "epr.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_override_changes_results(tmp_path):
    cfg = presets.get_preset("crit_xx", reduced=True)
    cfg["critical"]["eta_grid"] = [0.0]
    cfg["integrator"].update(n_traj=16, t_record=20.0, dt=0.01)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    out1, out2, out3 = tmp_path / "s1", tmp_path / "s2", tmp_path / "s3"
    assert cli.main(["run", str(path), "--out", str(out1), "--seed", "1"]) == 0
    assert cli.main(["run", str(path), "--out", str(out2), "--seed", "2"]) == 0
    assert cli.main(["run", str(path), "--out", str(out3), "--seed", "1"]) == 0
    a = (out1 / "critical_r2.csv").read_bytes()
    b = (out2 / "critical_r2.csv").read_bytes()
    c = (out3 / "critical_r2.csv").read_bytes()
    assert a != b and a == c


def test_physical_units_flag_scales_frequency(tmp_path):
    cfg = tmp_path / "phys.toml"
    cfg.write_text(
        """
[experiment]
name = "phys"
representation = "positive_p"
seed = 3
outputs = ["spectra"]

[params.physical]
gamma0 = 2.0
gamma = 2.0
chi = 0.02
drive = 100.0

[integrator]
dt = 0.01
t_burn = 5.0
t_record = 40.0
n_traj = 4
record_dt = 0.1
batch_size = 4

[spectra]
t_seg = 20.0
omega_max = 5.0
""")
    out1 = tmp_path / "scaled"
    out2 = tmp_path / "physical"
    assert cli.main(["run", str(cfg), "--out", str(out1)]) == 0
    assert cli.main(["run", str(cfg), "--out", str(out2), "--physical-units"]) == 0
    _, _, r1 = _read_csv(out1 / "spectra.csv")
    _, _, r2 = _read_csv(out2 / "spectra.csv")
    w1 = np.array([float(r[0]) for r in r1])
    w2 = np.array([float(r[0]) for r in r2])
    np.testing.assert_allclose(w2, 2.0 * w1, rtol=1e-12)
    # spectra themselves are identical (dimensionless)
    np.testing.assert_allclose([float(r[1]) for r in r1], [float(r[1]) for r in r2], rtol=1e-12)
