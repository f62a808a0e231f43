import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from occwalk import lab
from occwalk.cli import EXIT_FAIL, EXIT_INFO, EXIT_PASS, build_parser, load_config, main


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sequences_distinguished_case(capsys):
    code, out, _ = run(capsys, "sequences", "--eps", "power_law:0.5:1", "--n", "1000000")
    assert code == 0
    (r,) = rows(out)
    ref = 1.5 ** (1 / 3) * 1e6 ** (1 / 3)
    assert abs(float(r["b_n"]) / ref - 1) < 0.02


def test_sequences_constant(capsys):
    code, out, _ = run(capsys, "sequences", "--eps", "constant:0.5", "--n", "7")
    (r,) = rows(out)
    assert code == 0 and int(r["c_n"]) == 3 and float(r["b_n"]) == 2.0
    assert out.endswith("\n") and "\r" not in out


def test_sequences_json(capsys):
    code, out, _ = run(capsys, "sequences", "--eps", "constant:0.5", "--n", "7", "9",
                       "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["schema"] == "occwalk/1" and [r["n"] for r in d["rows"]] == [7, 9]


@pytest.mark.parametrize("spec", ["constant:0", "bogus:1", "power_law:x:1"])
def test_sequences_bad_spec(capsys, spec):
    code, _, err = run(capsys, "sequences", "--eps", spec, "--n", "10")
    assert code == 2 and "error" in err


def test_float_format(capsys):
    _, out, _ = run(capsys, "sequences", "--eps", "power_law:0.5:1", "--n", "1000")
    g = rows(out)[0]["g_n"]
    assert len(g.replace(".", "").lstrip("0")) >= 15


def test_simulate_deterministic(capsys, tmp_path):
    args = ["simulate", "--eps", "power_law:0.5:1", "--n", "500", "--reps", "20", "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "-o", str(a))[0] == 0
    assert run(capsys, *args, "--workers", "1", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()
    assert len(rows(a.read_text())) == 20


def test_simulate_path(capsys):
    code, out, _ = run(capsys, "simulate", "--eps", "constant:0.5", "--n", "30",
                       "--mode", "path", "--seed", "4")
    rs = rows(out)
    assert code == 0 and len(rs) == 31
    xs = [int(r["x"]) for r in rs]
    assert xs[0] == 0 and all(abs(a - b) == 1 for a, b in zip(xs, xs[1:]))


def test_simulate_excursions_schema(capsys):
    code, out, _ = run(capsys, "simulate", "--eps", "power_law:0.5:1", "--n", "200",
                       "--mode", "excursions", "--seed", "2")
    assert code == 0
    assert out.splitlines()[0] == "k,sign,tau,max_abs,end_time"
    rs = rows(out)
    assert [int(r["k"]) for r in rs] == list(range(1, len(rs) + 1))
    assert all(int(r["tau"]) % 2 == 0 and int(r["sign"]) in (-1, 1) for r in rs)


def test_simulate_zero_horizon(capsys):
    code, _, err = run(capsys, "simulate", "--eps", "constant:0.5", "--n", "0")
    assert code == 2 and "horizon" in err


def test_exact_subcommands(capsys):
    code, out, _ = run(capsys, "exact", "stationary", "--delta", "0.5", "--n", "4")
    assert code == 0 and [int(r["x"]) for r in rows(out)] == [-4, -2, 0, 2, 4]
    code, out, _ = run(capsys, "exact", "tau", "--delta", "0.5")
    assert code == 0 and out.rstrip().splitlines()[-1].startswith("# truncation_mass=")
    code, out, _ = run(capsys, "exact", "max", "--delta", "0.0", "--n", "20")
    assert code == 0 and "truncation_mass=0.0476" in out
    code, _, _ = run(capsys, "exact", "tau", "--delta", "1.5")
    assert code == 2


def test_verify_ldp_exit_zero(capsys):
    code, out, _ = run(capsys, "verify", "ldp", "--n", "10", "20")
    d = json.loads(out)
    assert code == EXIT_PASS and d["verdict"] == "pass" and d["experiment"] == "ldp"
    assert d["config"]["horizons"] == [10, 20]


def test_verify_unknown_id(capsys):
    code, out, err = run(capsys, "verify", "nope")
    assert code == EXIT_INFO and out == ""
    for name in lab.EXPERIMENTS:
        assert name in err


def test_verify_informational(capsys):
    lab.clear_caches()
    code, out, _ = run(capsys, "verify", "lil_smoke", "--n", "5000", "--reps", "2", "--seed", "1")
    assert code == EXIT_INFO and json.loads(out)["verdict"] == "informational"


def test_verify_fail_exit(capsys):
    # at 100 excursions the skew of T_n is plainly visible to 2e4 replicates
    code, out, _ = run(capsys, "verify", "T_clt", "--n", "100", "--reps", "20000", "--seed", "1")
    assert code == EXIT_FAIL and json.loads(out)["verdict"] == "fail"


def test_verify_config_error(capsys):
    code, _, err = run(capsys, "verify", "laplace", "--eps", "power_law:2:1", "--n", "100")
    assert code == 2 and "error" in err


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", "ldp", "--n", "10", "--format", "csv")
    assert code == 0 and "\r" not in out and out.count("\n") == 2


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 10, 20\nseed = 5\n")
    assert load_config(cfg) == {"n": "10, 20", "seed": "5"}
    _, out, _ = run(capsys, "verify", "ldp", "--config", str(cfg))
    d = json.loads(out)
    assert d["config"]["horizons"] == [10, 20] and d["config"]["seed"] == 5
    _, out, _ = run(capsys, "verify", "ldp", "--config", str(cfg), "--n", "12", "--seed", "6")
    d = json.loads(out)
    assert d["config"]["horizons"] == [12] and d["config"]["seed"] == 6
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"n": [14], "options": {"x_grid": [0.5]}}))
    _, out, _ = run(capsys, "verify", "ldp", "--config", str(js))
    d = json.loads(out)
    assert d["config"]["horizons"] == [14] and d["config"]["x_grid"] == [0.5]


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("OCCWALK_SEED", "77")
    _, out, _ = run(capsys, "verify", "ldp", "--n", "10")
    assert json.loads(out)["config"]["seed"] == 77
    args = ["simulate", "--eps", "constant:0.5", "--n", "40", "--reps", "3"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args, "--seed", "77")
    assert a == b


def test_help_on_every_subcommand(capsys):
    parser = build_parser()
    subs = next(a for a in parser._actions if a.dest == "command").choices
    assert set(subs) == {"sequences", "simulate", "exact", "verify"}
    for name in [None, *subs]:
        argv = ["--help"] if name is None else [name, "--help"]
        code, out, _ = run(capsys, *argv)
        assert code == 0 and "usage:" in out


def test_console_script():
    exe = shutil.which("occwalk")
    cmd = [exe] if exe else [sys.executable, "-m", "occwalk.cli"]
    r = subprocess.run(cmd + ["sequences", "--eps", "constant:0.5", "--n", "7"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and r.stdout.splitlines()[1].startswith("7,0.5,21,2,3,")
