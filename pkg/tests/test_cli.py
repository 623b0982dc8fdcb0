import json
import math
from pathlib import Path

import pytest

from humps.bvp import SymbolCode, solve_code
from humps.cli import emit_plot_data, run
from humps.errors import IoError
from humps.integrate import Params
from humps.nonlinearity import rational_square
from humps.weight import sine_weight

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture(scope="module")
def entry():
    w = sine_weight(3 * math.pi, periodic=False)
    return solve_code(w, rational_square(), Params(3, 10), "dirichlet", SymbolCode.parse("12"))


# ----------------------------------------------------------------------------
# pure commands
# ----------------------------------------------------------------------------


def test_lyndon_count(capsys):
    assert run(["lyndon", "--n", "3", "--k", "10", "--count"]) == 0
    assert capsys.readouterr().out.strip() == "5880"


def test_lyndon_list(capsys):
    assert run(["lyndon", "--n", "2", "--k", "3", "--list"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2


@pytest.mark.parametrize("method", ["recursive", "induction", "product"])
def test_degree(capsys, method):
    assert run(["degree", "--I", "1", "--J", "2", "--m", "2", "--method", method]) == 0
    assert capsys.readouterr().out.strip() == "-1"


def test_degree_overlap_is_error(capsys):
    assert run(["degree", "--I", "1", "--J", "1", "--m", "2"]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_config_is_error(tmp_path, capsys):
    assert run(["--out", str(tmp_path), "atlas", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_bad_config_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text((CONFIGS / "sine_three_humps.cfg").read_text().replace("bc = dirichlet", "bc = robin"))
    assert run(["--out", str(tmp_path), "constants", "--config", str(bad)]) == 1
    assert "bad.cfg:" in capsys.readouterr().err


# ----------------------------------------------------------------------------
# emission
# ----------------------------------------------------------------------------


def test_emit_plot_data(tmp_path, entry):
    path = tmp_path / "sol.csv"
    emit_plot_data(entry, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,u,y"
    assert len(lines) - 1 >= 1000
    meta = json.loads(path.with_suffix(".json").read_text())
    assert meta["code"] == "12"
    first = path.read_bytes()
    emit_plot_data(entry, path)
    assert path.read_bytes() == first


def test_emit_missing_dir(tmp_path, entry):
    with pytest.raises(IoError):
        emit_plot_data(entry, tmp_path / "absent" / "sol.csv")


# ----------------------------------------------------------------------------
# end to end
# ----------------------------------------------------------------------------


def test_atlas_end_to_end(tmp_path, capsys):
    assert run(["--out", str(tmp_path), "atlas", "--config", str(CONFIGS / "sine_three_humps.cfg")]) == 0
    data = json.loads((tmp_path / "atlas.json").read_text())
    assert len(data["entries"]) == 8 and data["misses"] == []
    assert len(list(tmp_path.glob("solution_*.csv"))) == 8
    assert "found 8, missed 0" in capsys.readouterr().out


def test_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HUMPS_OUT", str(tmp_path / "env"))
    assert run(["solve", "--config", str(CONFIGS / "sine_three_humps.cfg"), "--code", "21"]) == 0
    assert (tmp_path / "env" / "solution_21.csv").exists()


def test_out_flag_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HUMPS_OUT", str(tmp_path / "env"))
    flag = tmp_path / "flag"
    assert run(["--out", str(flag), "solve", "--config", str(CONFIGS / "sine_three_humps.cfg"), "--code", "1,1"]) == 0
    assert (flag / "solution_11.csv").exists()
    assert not (tmp_path / "env").exists()


def test_constants(tmp_path, capsys):
    assert run(["--out", str(tmp_path), "constants", "--config", str(CONFIGS / "sine_three_humps.cfg")]) == 0
    assert "lambda" in capsys.readouterr().out.lower()


def test_radial_end_to_end(tmp_path):
    assert run(["--out", str(tmp_path), "radial", "--config", str(CONFIGS / "annulus_plane.cfg")]) == 0
    data = json.loads((tmp_path / "radial.json").read_text())
    assert data["misses"] == []
    assert all(row["radial_residual"] < 1e-6 for row in data["entries"])


def test_subharmonics_end_to_end(tmp_path, capsys):
    cfg = str(CONFIGS / "sine_periodic.cfg")
    assert run(["--out", str(tmp_path), "subharmonics", "--config", cfg, "--k", "2", "--codes", "11"]) == 0
    data = json.loads((tmp_path / "subharmonics.json").read_text())
    assert data["rows"][0]["commutes"] and data["rows"][0]["fixed_point_residual"] < 1e-7
    assert "commutation ok" in capsys.readouterr().out
