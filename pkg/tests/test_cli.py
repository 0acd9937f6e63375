import json
import math
import re

import numpy as np
import pytest

from conftest import SMALL_DQD, dqd_config
from qdot_ci import cli
from qdot_ci.config import load_config, parse_config
from qdot_ci.errors import ValidationError
from qdot_ci.io import read_csv, sweep_header

HEADERS = {
    "levels.csv": ["index", "energy_eV", "spin_squared"],
    "stability.csv": ["depth_a_eV", "depth_b_eV", "n_ground"],
    "oscillation.csv": ["t_fs", "p_right"],
    "integrals.csv": ["i", "j", "k", "l", "value_eV"],
    "tls_fit.csv": ["delta_eV_min", "tunnel_coupling_eV", "lever_arm", "rms_residual_eV"],
}


def small_config(**sections):
    return dqd_config(**SMALL_DQD, **sections)


def run_cli(capsys, *argv):
    status = cli.main(list(argv))
    return status, capsys.readouterr().err


def assert_csv_contract(path):
    text = path.read_text()
    lines = text.splitlines()
    assert len(lines) >= 2
    widths = {len(line.split(",")) for line in lines}
    assert len(widths) == 1
    for field in ",".join(lines[1:]).split(","):
        if re.fullmatch(r"-?\d+", field):
            continue
        value = float(field)
        # 12 significant digits: the printed text is the .12g rendering of itself
        assert field == format(value, ".12g")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def test_single_dimer(capsys, tmp_path, write_config, dimer_config):
    status, err = run_cli(capsys, "single", "--config", str(write_config(dimer_config)), "--out", str(tmp_path / "o"))
    assert status == 0, err
    header, rows = read_csv(tmp_path / "o" / "levels.csv")
    assert header == HEADERS["levels.csv"]
    assert len(rows) == 1
    # single orbital, single determinant: both electrons in the bonding level
    assert float(rows[0][1]) == pytest.approx(-2.0 + 2.0, abs=1e-12)
    assert float(rows[0][2]) == 0.0
    log = (tmp_path / "o" / "run.log").read_text()
    assert "config:" in log and "eigensolve" in log and "max residual" in log


def test_unknown_command(capsys, write_config, dimer_config):
    status, err = run_cli(capsys, "bogus", "--config", str(write_config(dimer_config)))
    assert status == 2
    assert err.strip() == "error: unknown command: bogus"


def test_detuning_sweep_csv_and_fit(capsys, tmp_path, write_config):
    cfg = small_config(sweep={"kind": "detuning", "start": -0.2, "stop": 0.2, "steps": 11})
    out = tmp_path / "o"
    status, err = run_cli(capsys, "detuning-sweep", "--config", str(write_config(cfg)), "--out", str(out))
    assert status == 0, err
    header, rows = read_csv(out / "detuning_sweep.csv")
    assert header == sweep_header("delta_eV", 4)
    assert header[:2] == ["delta_eV", "E0_eV"] and header[-1] == "J_eV"
    assert len(rows) == 11
    data = np.array(rows, dtype=float)
    gaps = data[:, 2] - data[:, 1]
    assert data[5, 0] == 0.0
    assert np.argmin(gaps) == 5
    fit_header, fit_rows = read_csv(out / "tls_fit.csv")
    assert fit_header == HEADERS["tls_fit.csv"]
    delta_min, tunnel, lever, rms = map(float, fit_rows[0])
    assert delta_min == pytest.approx(data[5, 0], abs=1e-9)
    # row 6 gap equals the fitted minimum gap
    assert gaps[5] == pytest.approx(tunnel, abs=max(2 * rms, 1e-9))
    assert_csv_contract(out / "detuning_sweep.csv")


@pytest.mark.parametrize(
    "command, sweep, files",
    [
        ("single", None, ["levels.csv"]),
        ("distance-sweep", {"kind": "distance", "values": [4.0, 6.0, 8.0]}, ["distance_sweep.csv"]),
        ("stability", {"kind": "stability", "start": 0.0, "stop": 0.4, "steps": 3}, ["stability.csv"]),
        ("oscillation", {"start": -0.1, "stop": 0.1, "steps": 7}, ["oscillation.csv"]),
        ("dump-integrals", None, ["integrals.csv"]),
    ],
)
def test_every_command_writes_valid_csv(capsys, tmp_path, write_config, command, sweep, files):
    cfg = small_config(ci={"num_orbitals": 3}, output={"levels": 3})
    if sweep:
        cfg["sweep"] = sweep
    cfg["oscillation"] = {"t_stop_fs": 50.0, "steps": 11}
    out = tmp_path / "o"
    status, err = run_cli(capsys, command, "--config", str(write_config(cfg)), "--out", str(out))
    assert status == 0, err
    for name in files:
        header, rows = read_csv(out / name)
        if name in HEADERS:
            assert header == HEADERS[name]
        else:
            assert header == sweep_header("d_nm", 3)
        assert_csv_contract(out / name)
    assert (out / "run.log").exists()


def test_oscillation_from_config_values(capsys, tmp_path, write_config, dimer_config):
    dimer_config["oscillation"] = {"tunnel_coupling_eV": 0.01, "asymmetry_eV": 0.0, "t_stop_fs": 100.0, "steps": 5}
    out = tmp_path / "o"
    status, err = run_cli(capsys, "oscillation", "--config", str(write_config(dimer_config)), "--out", str(out))
    assert status == 0, err
    header, rows = read_csv(out / "oscillation.csv")
    assert header == HEADERS["oscillation.csv"]
    t, p = np.array(rows, dtype=float).T
    np.testing.assert_allclose(t, [0, 25, 50, 75, 100])
    np.testing.assert_allclose(p, np.sin(0.01 * t / (2 * 0.6582119569)) ** 2, atol=1e-11)


def test_integrals_csv_lexicographic(capsys, tmp_path, write_config):
    cfg = small_config(ci={"num_orbitals": 2})
    out = tmp_path / "o"
    status, err = run_cli(capsys, "dump-integrals", "--config", str(write_config(cfg)), "--out", str(out))
    assert status == 0, err
    _, rows = read_csv(out / "integrals.csv")
    keys = [tuple(map(int, r[:4])) for r in rows]
    assert keys == sorted(keys)
    assert (0, 0, 0, 0) in keys


# --------------------------------------------------------------------------
# determinism
# --------------------------------------------------------------------------


@pytest.mark.parametrize("command", ["detuning-sweep", "stability", "dump-integrals"])
def test_thread_count_does_not_change_bytes(capsys, tmp_path, write_config, command):
    cfg = small_config(sweep={"start": -0.1, "stop": 0.1, "steps": 5})
    if command == "stability":
        cfg["sweep"] = {"start": 0.0, "stop": 0.4, "steps": 3}
    path = str(write_config(cfg))
    outputs = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        status, err = run_cli(capsys, command, "--config", path, "--threads", str(threads), "--out", str(out))
        assert status == 0, err
        outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert outputs[0] == outputs[1]
    assert outputs[0]


# --------------------------------------------------------------------------
# errors
# --------------------------------------------------------------------------


def test_json_syntax_error_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "lattice": {"dims": [2, 1, 1],\n  "spacing_nm": 1.0\n')
    status, err = run_cli(capsys, "single", "--config", str(path))
    assert status == 1
    assert err.count("\n") == 1
    assert "line" in err


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda c: c["lattice"].update(dims=[0, 1, 1]), "lattice.dims"),
        (lambda c: c["wells"].update(curvature_eV_per_nm2=-1.0), "hamiltonian.curvature_eV_per_nm2"),
        (lambda c: c["ci"].update(num_orbitals=5), "ci.num_orbitals"),
        (lambda c: c["solver"].update(num_orbitals=10), "solver.num_orbitals"),
        (lambda c: c["output"].update(levels=0), "output.levels"),
        (lambda c: c.update(extra={}), "config.extra"),
        (lambda c: c["coulomb"].update(bogus=1), "coulomb.bogus"),
        (lambda c: c.update(sweep={"kind": "sideways"}), "sweep.kind"),
    ],
)
def test_validation_errors_name_module_and_field(capsys, tmp_path, write_config, dimer_config, mutate, where):
    dimer_config["lattice"]["dims"] = [3, 3, 1]
    dimer_config["solver"]["num_orbitals"] = 4
    dimer_config["ci"]["num_orbitals"] = 2
    mutate(dimer_config)
    status, err = run_cli(capsys, "single", "--config", str(write_config(dimer_config)), "--out", str(tmp_path / "o"))
    assert status == 1
    assert err.count("\n") == 1
    assert err.startswith("error: ")
    assert where in err


def test_sweep_kind_must_match_command(capsys, tmp_path, write_config, dimer_config):
    dimer_config["sweep"] = {"kind": "distance"}
    status, err = run_cli(capsys, "detuning-sweep", "--config", str(write_config(dimer_config)), "--out", str(tmp_path))
    assert status == 1
    assert "sweep.kind" in err


def test_missing_config_file(capsys, tmp_path):
    status, err = run_cli(capsys, "single", "--config", str(tmp_path / "nope.json"))
    assert status == 1
    assert err.startswith("error: config:")


def test_pipeline_error_has_point_context(capsys, tmp_path, write_config):
    cfg = small_config(solver={"max_iterations": 1, "tol": 1e-15}, sweep={"start": -0.1, "stop": 0.1, "steps": 5})
    status, err = run_cli(capsys, "detuning-sweep", "--config", str(write_config(cfg)), "--out", str(tmp_path / "o"))
    assert status == 1
    assert "delta_eV=-0.1: ConvergenceError" in err
    assert err.count("\n") == 1


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------


def test_config_defaults_and_round_trip(tmp_path, write_config):
    cfg = load_config(write_config(small_config()))
    assert cfg.lattice.dims == (20, 10, 1)
    assert cfg.tb.hopping_eV == pytest.approx(-0.5686529913, rel=1e-9)
    assert cfg.tb.onsite_eV == pytest.approx(4 * abs(cfg.tb.hopping_eV))
    assert cfg.coulomb.epsilon_r == 12.9
    assert cfg.coulomb.onsite_U_eV == pytest.approx(1.439964 * 2.3800772 / 12.9)
    assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_short_dims_and_null_epsilon(dimer_config):
    dimer_config["lattice"]["dims"] = [2]
    cfg = parse_config(dimer_config)
    assert cfg.lattice.dims == (2, 1, 1)
    assert math.isinf(cfg.coulomb.epsilon_r)


def test_config_rejects_wrong_types(dimer_config):
    dimer_config["solver"]["tol"] = "small"
    with pytest.raises(ValidationError) as info:
        parse_config(dimer_config)
    assert (info.value.module, info.value.field) == ("solver", "tol")


def test_potential_file_from_config(capsys, tmp_path, write_config, dimer_config):
    pot = tmp_path / "v.txt"
    pot.write_text("-0.5\n0.5\n")
    dimer_config["wells"]["potential_file"] = str(pot)
    out = tmp_path / "o"
    status, err = run_cli(capsys, "single", "--config", str(write_config(dimer_config)), "--out", str(out))
    assert status == 0, err
    _, rows = read_csv(out / "levels.csv")
    # bonding level of [[-0.5, -1], [-1, 0.5]] is -sqrt(1.25), doubly occupied
    e = -np.sqrt(1.25)
    phi = np.linalg.eigh(np.array([[-0.5, -1.0], [-1.0, 0.5]]))[1][:, 0]
    assert float(rows[0][1]) == pytest.approx(2 * e + 4.0 * np.sum(phi**4), abs=1e-11)
