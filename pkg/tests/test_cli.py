import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from manipulable.cli import main
from manipulable.model import ModelParams, best_response_beta
from manipulable.solvers import fixed_points_k, rho_with_three_fixed_points


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_solve_reports_fig2_values(capsys, tmp_path):
    out = tmp_path / "s.json"
    code, text, _ = run(["solve", "--sigma-eta", "1", "--sigma-gamma", "1", "--m", "1", "--rho", "0",
                         "--out", str(out)], capsys)
    assert code == 0
    assert "0.682327803828" in text and "0.589754512301" in text
    rec = json.loads(out.read_text())
    assert len(rec["fixed_points"]) == 1
    assert rec["fixed_points"][0]["beta"] == pytest.approx(0.682, abs=5e-4)
    assert rec["optimal"]["beta"] == pytest.approx(0.590, abs=5e-4)
    assert rec["naive"] == {"beta": 1.0, "beta0": 0.0, "loss": 1.0}
    assert rec["diagnostics"]["best_response_at_optimum"] == pytest.approx(0.742, abs=5e-4)


def test_k_shorthand_matches_explicit_form(capsys):
    _, explicit, _ = run(["solve", "--sigma-eta", "1", "--sigma-gamma", "1", "--m", "1", "--rho", "0"], capsys)
    _, short, _ = run(["solve", "--k", "1", "--rho", "0"], capsys)
    slopes = lambda t: [line.split()[1] for line in t.splitlines()[1:-1]]
    assert slopes(explicit) == slopes(short)
    assert explicit.splitlines()[-1] == short.splitlines()[-1]


def test_k_mode_omits_intercepts(capsys, tmp_path):
    out = tmp_path / "k.json"
    assert main(["solve", "--k", "2", "--rho", "0.3", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["optimal"]["beta0"] is None
    assert set(rec["params"]) == {"k", "rho"}


@pytest.mark.parametrize("argv, code", [
    (["solve", "--rho", "1.5"], 3),
    (["solve", "--k", "1", "--m", "2"], 3),
    (["solve", "--sigma-eta", "-1"], 3),
    (["solve", "--rho", "abc"], 2),
    (["nonsense"], 2),
    ([], 2),
    (["binary", "--pi", "0.5"], 2),
    (["binary", "--pi", "0.5", "--c", "0.6"], 3),
    (["simulate", "--n", "1"], 3),
    (["simulate", "--n", "100", "--seed", "-3"], 3),
    (["simulate", "--n", "100", "--workers", "0"], 3),
    (["noise", "--train-beta", "0.682", "--target", "0.9"], 3),
    (["sweep", "--rho-values", "0"], 3),
    (["sweep", "--k-values", "1", "--rho-values", "2"], 3),
    (["figure", "--which", "fig2", "--rho", "auto"], 3),
    (["solve", "--config", "/nonexistent/file"], 2),
])
def test_exit_codes(argv, code, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    assert "Traceback" not in err


def test_validation_message_mentions_domain(capsys):
    _, _, err = run(["solve", "--rho", "1.5"], capsys)
    assert "rho" in err


def test_fig2_minimum_near_optimum(tmp_path):
    out = tmp_path / "f2.csv"
    assert main(["figure", "--which", "fig2", "--rho", "0", "--format", "csv", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["beta", "info_loss", "misallocation_loss", "total"]
    assert data[np.argmin(data[:, 3]), 0] == pytest.approx(0.59, abs=1e-12)
    assert np.allclose(data[:, 1] + data[:, 2], data[:, 3], rtol=1e-10)


def test_fig1_decreasing_for_positive_rho(tmp_path):
    out = tmp_path / "f1.csv"
    assert main(["figure", "--which", "fig1", "--m", "1", "--rho", "0.5", "--format", "csv", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["beta", "beta_hat", "diagonal"]
    assert np.all(np.diff(data[:, 1]) < 0)
    assert np.array_equal(data[:, 0], data[:, 2])


def test_fig1_auto_rho_gives_three_crossings(tmp_path, capsys):
    out = tmp_path / "f1b.csv"
    code = main(["figure", "--which", "fig1", "--m", "0.24", "--rho", "auto", "--beta-max", "6",
                 "--points", "6001", "--format", "csv", "--out", str(out)])
    assert code == 0
    assert "rho chosen" in capsys.readouterr().err
    _, data = read_csv(out)
    gap = data[:, 1] - data[:, 0]
    crossings = np.count_nonzero(np.diff(np.sign(gap)) != 0)
    assert crossings == 3
    d = np.diff(data[:, 1])
    assert np.any(d > 0) and np.any(d < 0)
    rho = rho_with_three_fixed_points(0.24)
    assert len(fixed_points_k(0.24, rho)) == 3


def test_figure_bit_stable_and_12_digits(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        main(["figure", "--which", "fig1", "--rho", "0.2", "--format", "csv", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()
    line = a.read_text().splitlines()[2]
    assert all(len(v.replace("-", "").replace(".", "").lstrip("0")) <= 12 for v in line.split(","))


def test_binary_command(tmp_path):
    out = tmp_path / "b.json"
    assert main(["binary", "--pi", "0.5", "--c", "0.3", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    deltas = [rep["policies"][k]["delta"] for k in ("commitment", "fixed_point", "naive")]
    assert deltas == [0.3, 0.5, 1.0]
    assert rep["flattening_ordered"] and rep["welfare_ordered"]
    out = tmp_path / "b.csv"
    assert main(["binary", "--pi", "0.5", "--c", "0.3", "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "policy,y0,y1,delta,welfare"


def test_sweep_command(tmp_path):
    out = tmp_path / "sw.csv"
    assert main(["sweep", "--k-range", "0.1,10,5", "--rho-values", "-0.5,0,0.5",
                 "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,rho,beta_star,beta_fp_list,ratio,loss_star,loss_fp,error"
    assert len(lines) == 16


def test_noise_command(tmp_path):
    out = tmp_path / "n.json"
    assert main(["noise", "--train-beta", "0.682", "--target", "0.590", "--n", "200000",
                 "--seed", "3", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert abs(rec["calibration"]["achieved_slope"] - 0.590) <= 1e-10
    dep = rec["deployment"]
    assert abs(dep["mean_allocation"]["value"]) < 3 * dep["mean_allocation"]["std_error"]


def test_noise_dataset_csv(tmp_path):
    out = tmp_path / "nd.csv"
    assert main(["noise", "--n", "1000", "--seed", "3", "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "x_prime,eta"


def test_simulate_byte_identical_across_runs_and_workers(tmp_path):
    paths = [tmp_path / f"s{i}.csv" for i in range(3)]
    for p, w in zip(paths, ("1", "1", "4")):
        assert main(["simulate", "--n", "200000", "--seed", "7", "--rho", "0.3", "--workers", w,
                     "--format", "csv", "--out", str(p)]) == 0
    data = [p.read_bytes() for p in paths]
    assert data[0] == data[1] == data[2]
    assert data[0].splitlines()[0] == b"eta,gamma,x"


def test_simulate_json_matches_analytic(tmp_path):
    out = tmp_path / "sim.json"
    assert main(["simulate", "--n", "200000", "--seed", "5", "--beta", "0.59", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    fit = rec["fit"]
    assert abs(fit["slope"] - best_response_beta(ModelParams(), 0.59)) < 3 * fit["slope_std_error"]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# fig-2 setup\nsigma-eta = 1\nsigma_gamma = 1\nm = 1\nrho = 0.5\n")
    _, from_file, _ = run(["solve", "--config", str(cfg)], capsys)
    _, explicit, _ = run(["solve", "--sigma-eta", "1", "--sigma-gamma", "1", "--m", "1", "--rho", "0.5"], capsys)
    assert from_file == explicit
    _, overridden, _ = run(["solve", "--config", str(cfg), "--rho", "0"], capsys)
    assert "0.589754512301" in overridden
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus = 1\n")
    assert main(["solve", "--config", str(bad)]) == 2


def test_config_supplies_required_options(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("pi = 0.5\nc = 0.3\n")
    out = tmp_path / "b.json"
    assert main(["binary", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["c"] == 0.3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "manipulable", "binary", "--pi", "0.5", "--c", "0.3"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["welfare_ordered"] is True
    res = subprocess.run([sys.executable, "-m", "manipulable", "solve", "--rho", "1.5"],
                         capture_output=True, text=True)
    assert res.returncode == 3
