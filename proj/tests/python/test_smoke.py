import csv
import json
import os
import subprocess

import numpy as np
import pytest

import tailtopo as tt


def test_local_dft_matches_numpy():
    x = np.random.default_rng(1).normal(size=64)
    got = np.array(tt.local_dft(list(x)))
    a = np.arange(len(x))
    # sample t = 1 is the block origin
    want = np.fft.fft(x) * np.exp(-2j * np.pi * a / len(x)) / np.sqrt(len(x))
    assert np.allclose(got, want, atol=1e-12)


def test_identity_tpdm_has_zero_ctd():
    res = tt.solve_ctd(np.eye(4), 2)
    assert res["tau"] == pytest.approx(0.0, abs=1e-12)


def test_duplicated_block_has_unit_ctd():
    a = np.array([[1.0, 0.3], [0.3, 1.0]])
    g = np.block([[a, a], [a, a]]) + 1e-9 * np.eye(4)
    res = tt.solve_ctd(g, 2)
    assert res["tau"] == pytest.approx(1.0, abs=1e-6)
    oracle = tt.numeric_ctd_oracle(g, 2, restarts=20)
    assert oracle["tau"] <= res["tau"] + 1e-8


def test_tpdm_trace_matches_radius():
    z = tt.rank_standardize(np.random.default_rng(2).normal(size=(500, 4)), margin="symmetric-pareto2")
    est = tt.estimate_tpdm(z, 0.9)
    g = np.asarray(est["matrix"])
    assert np.allclose(g, g.T)
    assert np.trace(g) == pytest.approx(4.0, rel=1e-12)
    assert np.linalg.eigvalsh(g).min() > -1e-12


def test_fuzzy_cmeans_separates_two_blobs():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.1, (10, 2)), rng.normal(3, 0.1, (10, 2))])
    res = tt.fuzzy_cmeans(x, clusters=2, fuzziness=2.0, seed=4)
    u = np.asarray(res["u"])
    assert np.allclose(u.sum(axis=1), 1.0)
    hard = u.argmax(axis=1) + 1
    assert tt.accuracy(list(hard), [1] * 10 + [2] * 10) == 1.0


def test_simulate_is_deterministic():
    a = tt.simulate(subjects=4, blocks=50, seed=7)
    b = tt.simulate(subjects=4, blocks=50, seed=7)
    assert np.array_equal(np.asarray(a["raw"][2]), np.asarray(b["raw"][2]))
    assert len(a["subjects"]) == 4


def test_errors_map_to_exceptions():
    with pytest.raises(tt.InvalidArgument):
        tt.solve_ctd(np.eye(3), 5)
    assert issubclass(tt.InvalidArgument, tt.Error)


def _run(tmp_path, args):
    exe = os.environ.get("TAILTOPO_CLI")
    if exe:
        return subprocess.run([exe, *args], capture_output=True, text=True).returncode
    return tt.cli(args)[0]


def test_cli_round_trip(tmp_path):
    sim, out = tmp_path / "sim", tmp_path / "out"
    assert _run(tmp_path, ["simulate", "--n", "6", "--blocks", "300", "--seed", "3", "--out", str(sim)]) == 0
    assert _run(tmp_path, ["pipeline", "--manifest", str(sim / "manifest.csv"), "--out", str(out),
                           "--fuzziness-grid", "1.5,2"]) == 0
    rows = list(csv.DictReader(open(out / "topologies.csv")))
    assert len(rows) == 6
    assert (out / "memberships_m1.5.csv").exists() and (out / "memberships_m2.csv").exists()
    summary = json.load(open(out / "summary.json"))
    assert summary
    assert _run(tmp_path, ["pipeline", "--manifest", str(tmp_path / "missing.csv"), "--out", str(out)]) == 4
    assert _run(tmp_path, ["simulate", "--n", "0", "--out", str(sim)]) == 2


def test_in_process_cli_reports_usage():
    code, out, err = tt.cli(["--help"])
    assert code == 0
    assert "pipeline" in out + err


def test_relative_output_dirs(tmp_path):
    exe = os.environ.get("TAILTOPO_CLI")
    if not exe:
        pytest.skip("needs the CLI binary")
    run = lambda *a: subprocess.run([os.path.abspath(exe), *a], cwd=tmp_path, capture_output=True).returncode
    assert run("simulate", "--n", "4", "--blocks", "200", "--out", "s") == 0
    assert run("pipeline", "--manifest", "s/manifest.csv", "--out", "o", "--fuzziness-grid", "2") == 0
    assert (tmp_path / "o" / "memberships_m2.csv").exists()
