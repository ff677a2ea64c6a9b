import json
import subprocess
import sys

import pytest

from ctvff import __version__
from ctvff.cli import main
from ctvff.config import dump_config
from ctvff.presets import PRESETS


def _write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_validate_echoes_resolved_config(tmp_path, capsys):
    p = _write(tmp_path, "N = 15\nK_initial = 2\npower_offsets_db = [0.0, 3.0]\n")
    assert main(["validate", str(p)]) == 0
    out = capsys.readouterr().out
    assert "snr_db = 15.0" in out and "training_symbols = 250" in out


@pytest.mark.parametrize("name", list(PRESETS))
def test_every_preset_validates(name, tmp_path, capsys):
    for label, cfg in PRESETS[name].variants:
        p = _write(tmp_path, dump_config(cfg), "p.toml")
        assert main(["validate", str(p)]) == 0


def test_show_preset_round_trips(tmp_path, capsys):
    assert main(["show-preset", "fig9", "--variant", "tracking"]) == 0
    text = capsys.readouterr().out
    p = _write(tmp_path, text)
    assert main(["validate", str(p)]) == 0
    assert main(["show-preset", "fig9", "--variant", "nope"]) == 2
    assert main(["show-preset"]) == 0
    assert "sweep-delta" in capsys.readouterr().out


def test_validate_training_longer_than_run(tmp_path, capsys):
    p = _write(tmp_path, "training_symbols = 2000\ntotal_symbols = 1500\n")
    assert main(["validate", str(p)]) == 2
    assert "training_symbols" in capsys.readouterr().err


def test_validate_delta1_out_of_range(tmp_path, capsys):
    p = _write(tmp_path, '[[algorithms]]\nkind = "ctvff"\ndelta1 = 1.0\n')
    assert main(["validate", str(p)]) == 2
    assert "delta1 must lie in (0,1)" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.toml"), "--out",
                 str(tmp_path / "o.csv")]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.toml")]) == 2


def test_unknown_preset_and_bad_usage(tmp_path, capsys):
    assert main(["run", "--preset", "fig99", "--out", str(tmp_path / "o.csv")]) == 2
    assert "unknown preset" in capsys.readouterr().err
    assert main(["run", "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["run", "--preset", "fig4", "--algorithms", "mgvff",
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_run_config_writes_csv_and_metadata(tmp_path):
    p = _write(tmp_path, "N = 7\nL_p = 2\nprofile_db = [0.0, -3.0]\nK_initial = 2\n"
                         "power_offsets_db = [0.0, 0.0]\nf_dT = 0.0\ntotal_symbols = 60\n"
                         "training_symbols = 20\nruns = 2\n"
                         '[[algorithms]]\nkind = "ctvff"\n[[algorithms]]\nkind = "sg"\n')
    out = tmp_path / "o.csv"
    assert main(["run", "--config", str(p), "--out", str(out), "--seed", "4", "-q",
                 "--analytical"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "symbol,algorithm,sinr_db,mse,lambda,mult_ops,add_ops,source"
    assert len(lines) == 1 + 3 * 60
    meta = json.loads((tmp_path / "o.csv.meta.json").read_text())
    assert meta["version"] == __version__ and meta["seed"] == 4
    assert "linear" in meta["sinr_averaging"]
    assert meta["variants"]["s"]["runs"] == 2


def test_run_config_sweep(tmp_path):
    p = _write(tmp_path, "N = 7\nL_p = 2\nprofile_db = [0.0, -3.0]\nK_initial = 2\n"
                         "power_offsets_db = [0.0, 0.0]\nf_dT = 0.0\ntotal_symbols = 60\n"
                         "training_symbols = 20\nruns = 2\n")
    out = tmp_path / "sweep.csv"
    assert main(["run", "--config", str(p), "--out", str(out), "-q", "--sweep", "SNR",
                 "--values", "5,10"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "axis,axis_value,algorithm,metric,statistic,source"
    assert rows[1].startswith("SNR,5,CTVFF,sinr_db,")


def test_all_runs_diverging_exits_3(tmp_path):
    p = _write(tmp_path, "N = 7\nL_p = 2\nprofile_db = [0.0, -3.0]\nK_initial = 2\n"
                         "power_offsets_db = [0.0, 0.0]\ntotal_symbols = 40\n"
                         "training_symbols = 20\nruns = 2\n"
                         '[[algorithms]]\nkind = "sg"\nstep = 50.0\n')
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o.csv"), "-q"]) == 3


def test_preset_algorithm_subset(tmp_path):
    out = tmp_path / "f4.csv"
    assert main(["run", "--preset", "fig4", "--runs", "1", "--algorithms", "ctvff,fixed",
                 "--out", str(out), "-q"]) == 0
    algs = {line.split(",")[1] for line in out.read_text().splitlines()[1:]}
    assert algs == {"CTVFF", "fixed"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ctvff", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and __version__ in res.stdout
