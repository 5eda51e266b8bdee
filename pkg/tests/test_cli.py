import subprocess
import sys

import pytest

from prckit import cli

ZERO = ["--n", "256", "--g", "64", "--t", "3", "--r", "204", "--zeta", "0.12"]


def run(args, stdin=None):
    return subprocess.run([sys.executable, "-m", "prckit", *args], input=stdin, capture_output=True, text=True)


@pytest.fixture(scope="module")
def zkey(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "zero.key"
    assert cli.main(["keygen", "--kind", "zero", *ZERO, "--seed", "7", "--out", str(path)]) == 0
    return path


def test_keygen_deterministic(zkey, tmp_path):
    other = tmp_path / "again.key"
    cli.main(["keygen", "--kind", "zero", *ZERO, "--seed", "7", "--out", str(other)])
    assert other.read_text() == zkey.read_text()


def test_pipeline_is_deterministic(zkey, tmp_path):
    outs = []
    for i in range(2):
        cw, noisy = tmp_path / f"cw{i}", tmp_path / f"noisy{i}"
        assert cli.main(["encode", "--key", str(zkey), "--count", "3", "--seed", "1", "--out", str(cw)]) == 0
        assert cli.main(["channel", "--spec", "bsc:0.01", "--seed", "2", "--in", str(cw), "--out", str(noisy)]) == 0
        outs.append((cw.read_text(), noisy.read_text()))
    assert outs[0] == outs[1]
    assert cli.main(["decode", "--key", str(zkey), "--in", str(tmp_path / "noisy0")]) == 0


def test_zero_string_is_bot(zkey, capsys):
    p = zkey.parent / "zeros"
    p.write_text(cli.format_bits([0] * 256) + "\n")
    assert cli.main(["decode", "--key", str(zkey), "--in", str(p)]) == 1
    assert "verdict=bot" in capsys.readouterr().out


def test_multibit_round_trip_through_subprocess(tmp_path):
    key = tmp_path / "m.key"
    assert run(["keygen", "--kind", "multi", "--ell", "8", *ZERO, "--out", str(key)]).returncode == 0
    enc = run(["encode", "--key", str(key), "--message", "a5"])
    assert enc.returncode == 0
    dec = run(["decode", "--key", str(key)], stdin=enc.stdout)
    assert dec.returncode == 0 and "message=a5" in dec.stdout


def test_stego_round_trip(tmp_path, capsys):
    key = tmp_path / "s.key"
    cli.main(["keygen", "--kind", "stego", "--ell", "4", "--kappa", "64", *ZERO, "--out", str(key)])
    st = tmp_path / "st"
    assert cli.main(["stego", "embed", "--key", str(key), "--channel", "uniform:4", "--message", "09", "--out", str(st)]) == 0
    capsys.readouterr()
    assert cli.main(["stego", "extract", "--key", str(key), "--in", str(st)]) == 0
    assert "message=09" in capsys.readouterr().out


@pytest.mark.parametrize("args", [
    [],
    ["keygen", "--n", "256", "--out", "/tmp/x.key"],          # explicit params missing
    ["decode", "--key", "/nonexistent/key"],
    ["channel", "--spec", "gaussian:1"],
    ["stats", "suite", "c99"],
])
def test_usage_errors_exit_2(args):
    assert run(args, stdin="").returncode == 2


def test_wrong_length_is_usage_error(zkey):
    assert run(["decode", "--key", str(zkey)], stdin="8:ff\n").returncode == 2


def test_bits_line_round_trip():
    import numpy as np
    v = np.array([1, 0, 1, 1, 0, 0, 0, 0, 1], np.uint8)
    assert np.array_equal(cli.parse_bits(cli.format_bits(v)), v)
    with pytest.raises(cli.UsageError):
        cli.parse_bits("ff")
