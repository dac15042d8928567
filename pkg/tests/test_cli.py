import subprocess
import sys

import pytest

from pdtfourier.cli import main
from pdtfourier.pdt import from_json, to_json, tree_from_nested


@pytest.fixture
def tree_file(tmp_path):
    def write(nested, n, name="t.json"):
        path = tmp_path / name
        path.write_text(to_json(tree_from_nested(n, nested)))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_is_deterministic(capsys):
    a = run(capsys, "gen", "--n", "8", "--depth", "4", "--seed", "3")
    b = run(capsys, "gen", "--n", "8", "--depth", "4", "--seed", "3")
    assert a[0] == 0 and a[1] == b[1]
    assert from_json(a[1]).depth == 4


def test_gen_requires_seed():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--n", "4", "--depth", "2"])
    assert exc.value.code == 2


def test_gen_guard_exits_2(capsys):
    code, _, err = run(capsys, "gen", "--n", "3", "--depth", "5", "--seed", "1")
    assert code == 2 and err.startswith("error:")


def test_validate(capsys, tree_file):
    code, out, _ = run(capsys, "validate", tree_file(([0, 1, 2], 0, 1), 4))
    assert code == 0 and out.startswith("valid: n=4, depth=1, leaves=2")
    code, out, _ = run(capsys, "validate", tree_file(([0], ([0], 0, 1), 1), 3, "bad.json"))
    assert code == 1 and "violation" in out


def test_clean_parity(capsys, tree_file):
    code, out, err = run(capsys, "clean", tree_file(([0, 1, 2], 0, 1), 4), "--k", "3")
    assert code == 0 and "PASS (depth 3, bound 3)" in err
    assert '"k": 3' in out and from_json(out).depth == 3


def test_bounds_and(capsys, tree_file):
    code, out, _ = run(capsys, "bounds", tree_file(([0], 0, ([1], 0, 1)), 2), "--level", "1")
    assert code == 0
    assert out.splitlines()[1].startswith("1,1/2,1/4,2,3,1/2,PASS")


def test_bounds_level_guard(capsys, tree_file):
    code, _, err = run(capsys, "bounds", tree_file(([0], 0, 1), 2), "--level", "5")
    assert code == 2 and "--level 5" in err


def test_spectrum(capsys, tree_file):
    code, out, _ = run(capsys, "spectrum", tree_file(([0], 0, 1), 2))
    assert code == 0 and out.splitlines() == ["mask,numerator,log2denominator", "0x0,1,1", "0x1,-1,1"]


def test_missing_file_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "spectrum", str(tmp_path / "absent.json"))
    assert code == 2 and "cannot read" in err


def test_formulas(capsys):
    code, out, _ = run(capsys, "formulas", "--D", "10", "--d", "2", "--k", "2", "--level", "2",
                       "--t", "0", "--eps", "0.25", "--n", "8")
    assert code == 0 and "M,1" in out and "S,1" in out
    code, _, _ = run(capsys, "formulas", "--D", "10", "--d", "2", "--k", "2", "--level", "2",
                     "--t", "0", "--eps", "0.9", "--n", "8")
    assert code == 2


def test_noisy_commands(capsys, tmp_path):
    path = tmp_path / "nt.json"
    code, _, _ = run(capsys, "noisy-gen", "--n", "4", "--depth", "3", "--cost", "1.5", "--seed", "2",
                     "-o", str(path))
    assert code == 0 and path.exists()
    bias = run(capsys, "noisy-spectrum", str(path))[1].splitlines()
    wht = run(capsys, "noisy-spectrum", str(path), "--method", "wht")[1].splitlines()
    assert [r.split(",")[0] for r in bias] == [r.split(",")[0] for r in wht]
    for a, b in zip(bias[1:], wht[1:]):
        assert float(a.split(",")[1]) == pytest.approx(float(b.split(",")[1]), abs=1e-12)
    code, out, _ = run(capsys, "noisy-bounds", str(path), "--level", "0", "--level", "1")
    assert code == 0 and len(out.splitlines()) == 3


def test_experiment_sweep(capsys):
    code, out, _ = run(capsys, "experiment", "pdt-bounds", "--seed", "1", "--n", "6", "--depth", "3",
                       "--levels", "1", "--instances", "4")
    assert code == 0 and len(out.splitlines()) == 5


def test_experiment_config_and_seed_rules(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"n": [5], "depth": [2], "instances": 2}')
    assert run(capsys, "experiment", "pdt-bounds", "--config", str(cfg))[0] == 2
    cfg.write_text('{"master_seed": 4, "n": [5], "depth": [2], "instances": 2}')
    code, out, _ = run(capsys, "experiment", "pdt-bounds", "--config", str(cfg))
    assert code == 0 and len(out.splitlines()) == 3


def test_experiment_azuma_and_hyper(capsys):
    code, out, _ = run(capsys, "experiment", "azuma", "--seed", "1", "--D", "30", "--trials", "2000")
    assert code == 0 and out.count(",PASS") == 9
    code, out, _ = run(capsys, "experiment", "hypercontractivity", "--seed", "1", "--n", "6",
                       "--trials", "5")
    assert code == 0 and out.count(",PASS") == 6


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "pdtfourier", "gen", "--n", "5", "--depth", "2",
                          "--seed", "9"], capture_output=True, text=True)
    assert res.returncode == 0 and from_json(res.stdout).n == 5
    res = subprocess.run([sys.executable, "-m", "pdtfourier", "bogus"], capture_output=True, text=True)
    assert res.returncode == 2
