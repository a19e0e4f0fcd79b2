import json

import numpy as np
import pandas as pd
import pytest

from ftnsolve.commands.scan import row_config
from ftnsolve.main import main
from ftnsolve.models import BasisSpec, OscillatorChain
from ftnsolve.services import storage
from ftnsolve.services.config import build_config
from ftnsolve.services.oracle import dense_ground_state, dense_hamiltonian

TINY = ["--model.n_sites=3", "--model.gamma=-0.3", "--basis.order=3", "--ansatz.chi=2",
        "--optimizer.max_iters=30"]


def test_solve_writes_results(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--out", str(out), "--output.residual_interval=10"] + TINY) == 0
    for name in ("report.json", "report_trajectory.csv", "report_spectrum.csv", "psi.ftn"):
        assert (out / name).exists()
    report = storage.load_report(out / "report.json")
    assert report.iterations == 30
    assert sorted(report.residual_history) == [10, 20, 30]
    trajectory = pd.read_csv(out / "report_trajectory.csv")
    assert list(trajectory.columns) == ["iter", "energy", "loss_residual"]
    assert len(trajectory) == 30 and trajectory["loss_residual"].notna().sum() == 3
    psi = storage.read_mps(out / "psi.ftn")
    assert psi.n_sites == 3 and psi.phys_dim == 3
    assert "E = " in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["solve", "--out", str(tmp_path / name), "--seed", "4"] + TINY) == 0
    for name in ("report_trajectory.csv", "report_spectrum.csv", "psi.ftn"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file_and_checkpoint(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text(
        "model:\n  n_sites: 3\n  gamma: 0.2\nbasis:\n  order: 3\nansatz:\n  chi: 2\n"
        "optimizer:\n  max_iters: 25\noutput:\n  checkpoint_interval: 10\n  formats: [json]\n"
    )
    out = tmp_path / "run"
    assert main(["solve", "--config", str(config), "--out", str(out)]) == 0
    assert (out / "report.json").exists() and not (out / "report_trajectory.csv").exists()
    assert (out / "checkpoint" / "state.json").exists()
    resumed = tmp_path / "resumed"
    assert main(["solve", "--config", str(config), "--out", str(resumed),
                 "--resume", str(out / "checkpoint")]) == 0
    first = storage.load_report(out / "report.json")
    second = storage.load_report(resumed / "report.json")
    assert np.allclose(first.energy_trajectory, second.energy_trajectory, rtol=0, atol=1e-12)


def test_exit_codes(tmp_path):
    assert main(["solve", "--out", str(tmp_path), "--model.colour=red"]) == 2
    assert main(["solve", "--out", str(tmp_path), "stray"]) == 2
    assert main(["solve", "--out", str(tmp_path), "--preset", "fig9"]) == 2
    assert main(["scan", "--out", str(tmp_path)]) == 2
    diverging = TINY + ["--optimizer.method=sgd", "--optimizer.learning_rate=1e300"]
    assert main(["solve", "--out", str(tmp_path)] + diverging) == 3


def test_exact_command(tmp_path, capsys):
    assert main(["exact", "--model.n_sites=2", "--model.gamma=0.5"]) == 0
    out = capsys.readouterr().out
    assert "E_exact = 0.965925826289" in out
    assert "gamma_c = 1.000000000000" in out

    assert main(["exact", "--model.n_sites=16", "--model.gamma=0.55"]) == 0
    assert "no real solution" in capsys.readouterr().out

    dump = tmp_path / "ops"
    assert main(["exact", "--basis.order=4", "--dump-operators", str(dump)]) == 0
    x = pd.read_csv(dump / "x_matrix.csv")
    assert list(x.columns) == ["s0", "s1", "s2", "s3"]
    assert abs(x.iloc[0, 1] - np.sqrt(0.5)) < 1e-15
    assert (dump / "d_matrix.csv").exists() and (dump / "kinetic_matrix.csv").exists()


def test_oracle_command(tmp_path, capsys):
    args = ["oracle", "--out", str(tmp_path), "--model.n_sites=2", "--model.gamma=-0.3",
            "--basis.order=4", "--oracle.full_tensor=false"]
    assert main(args) == 0
    printed = json.loads(capsys.readouterr().out)
    saved = json.loads((tmp_path / "oracle.json").read_text())
    e0, _ = dense_ground_state(dense_hamiltonian(OscillatorChain(n_sites=2, gamma=-0.3), BasisSpec(order=4)))
    assert printed == saved
    assert abs(saved["E0"] - e0) < 1e-12
    assert "E_fulltensor" not in saved

    assert main(["oracle", "--out", str(tmp_path), "--model.n_sites=8", "--basis.order=4"]) == 2


def test_scan_records_failed_rows(tmp_path, monkeypatch):
    monkeypatch.delenv("FTNSOLVE_THREADS", raising=False)
    args = ["scan", "--out", str(tmp_path), "--scan.parameter=chi", "--scan.values=0,2"] + TINY
    assert main(args) == 0
    table = pd.read_csv(tmp_path / "scan.csv", keep_default_na=False)
    assert list(table.columns) == storage.SCAN_COLUMNS
    assert table["status"][0].startswith("failed")
    assert table["status"][1] == "ok"
    assert table["param"].tolist() == [0.0, 2.0]
    assert float(table["E_exact"][1]) > 0


def test_scan_per_chain_length_and_workers(tmp_path, monkeypatch):
    monkeypatch.delenv("FTNSOLVE_THREADS", raising=False)
    common = ["--scan.parameter=gamma", "--scan.values=0.1,-0.2", "--scan.n_sites=2,3"] + TINY
    assert main(["scan", "--out", str(tmp_path / "serial")] + common) == 0
    assert main(["scan", "--out", str(tmp_path / "pool"), "--scan.workers=2"] + common) == 0
    for name in ("scan_N2.csv", "scan_N3.csv"):
        serial = pd.read_csv(tmp_path / "serial" / name)
        pool = pd.read_csv(tmp_path / "pool" / name)
        assert serial["param"].tolist() == [0.1, -0.2]
        assert np.allclose(serial["E"], pool["E"], rtol=0, atol=1e-10)


def test_bond_dimension_one_scan_has_zero_entropy(tmp_path, monkeypatch):
    monkeypatch.delenv("FTNSOLVE_THREADS", raising=False)
    args = ["scan", "--out", str(tmp_path), "--scan.parameter=chi", "--scan.values=1",
            "--model.n_sites=3", "--model.gamma=0.0", "--basis.order=3", "--optimizer.max_iters=20"]
    assert main(args) == 0
    table = pd.read_csv(tmp_path / "scan.csv")
    assert abs(table["S"][0]) < 1e-12
    assert table["status"].tolist() == ["ok"]


def test_oracle_decoupled_pair(tmp_path, capsys):
    args = ["oracle", "--out", str(tmp_path), "--model.n_sites=2", "--model.gamma=0.0",
            "--basis.order=8", "--oracle.full_tensor=false"]
    assert main(args) == 0
    assert abs(json.loads(capsys.readouterr().out)["E0"] - 1.0) < 1e-9


@pytest.mark.slow
def test_decoupled_preset(tmp_path):
    assert main(["solve", "--preset", "decoupled", "--out", str(tmp_path)]) == 0
    report = storage.load_report(tmp_path / "report.json")
    assert abs(report.final_energy - 2.0) < 1e-6


def test_order_scan_keeps_configured_quadrature():
    config = build_config(overrides=["--basis.order=4", "--basis.quadrature_nodes=40"])
    assert row_config(config, "D", 8).basis.quadrature_nodes == 40
    assert row_config(config, "D", 16).basis.quadrature_nodes == 40
    assert row_config(config, "D", 20).basis.quadrature_nodes == 48
    assert row_config(build_config(), "D", 12).basis.quadrature_nodes == 32


def test_single_value_scan_from_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("FTNSOLVE_THREADS", raising=False)
    args = ["scan", "--out", str(tmp_path), "--scan.parameter=gamma", "--scan.values=0.1",
            "--scan.n_sites=3"] + TINY
    assert main(args) == 0
    table = pd.read_csv(tmp_path / "scan_N3.csv")
    assert table["param"].tolist() == [0.1]
