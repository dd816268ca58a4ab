"""Tests for the Output_Manager class."""

import json
import os

import pandas as pd
import pytest

from multicorr.config import Config
from multicorr.output_manager import Output_Manager

# get path of this script
script_path = os.path.realpath(__file__)
# get config path
config_path = os.path.join(os.path.dirname(script_path), "config.py")


@pytest.fixture
def config():
    """Test configuration that always overwrites."""
    config = Config(config_path)
    config.overwrite_mode = "always"
    return config


@pytest.fixture
def manager(config):
    """Output manager of the analyze command."""
    return Output_Manager(config, "analyze", "Cut analysis")


def test_output_path_for_bare_name(manager, tmp_path):
    """Test that bare names are prefixed with the command."""
    path = manager.get_output_path("result", ".json", custom_dir=tmp_path)
    assert path == tmp_path / "analyze_result.json"


def test_output_path_for_explicit_file(manager, tmp_path):
    """Test that an explicit file path is used as it is."""
    target = tmp_path / "sub" / "mine.json"
    assert manager.get_output_path(str(target), ".json") == target


def test_save_json_rounds_and_writes_sidecar(manager, tmp_path):
    """Test JSON output with rounding and the provenance sidecar."""
    path = manager.save_json({"work": 0.41503749927884376}, str(tmp_path / "w.json"))
    assert json.loads(path.read_text()) == {"work": 0.415037499279}
    sidecar = json.loads((tmp_path / "w.sidecar.json").read_text())
    assert sidecar["Toolkit"]["Command"] == "analyze"
    assert sidecar["Toolkit"]["OutputFile"] == "w.json"


def test_save_dataframe_csv(manager, tmp_path):
    """Test CSV output with 12 significant digits."""
    df = pd.DataFrame({"n": [3], "F": [0.9], "q": [0.061721339984836]})
    path = manager.save_dataframe(df, str(tmp_path / "fig2.csv"))
    assert path.read_text().splitlines() == ["n,F,q", "3,0.9,0.0617213399848"]
    assert (tmp_path / "fig2.json").exists()


def test_save_dataframe_unknown_format(manager, tmp_path):
    """Test that unsupported table formats are rejected."""
    with pytest.raises(ValueError, match="Unsupported format"):
        manager.save_dataframe(pd.DataFrame(), str(tmp_path / "x"), format="xlsx")


def test_overwrite_never_keeps_file(manager, config, tmp_path):
    """Test that existing files are kept with overwrite_mode never."""
    target = tmp_path / "note.txt"
    target.write_text("old")
    config.overwrite_mode = "never"
    manager.save_text("new", str(target))
    assert target.read_text() == "old"


def test_overwrite_ask_uses_auto_response(manager, config, tmp_path):
    """Test that the ask mode consults the configured auto response."""
    target = tmp_path / "note.txt"
    target.write_text("old")
    config.overwrite_mode = "ask"
    config.auto_response = "y"
    manager.save_text("new", str(target))
    assert target.read_text() == "new"


def test_overwrite_ifnewer(manager, config, tmp_path):
    """Test that ifnewer compares against the source document."""
    target = tmp_path / "state_report.txt"
    target.write_text("old")
    source = tmp_path / "state.json"
    source.write_text("{}")
    os.utime(target, (1, 1))
    config.overwrite_mode = "ifnewer"
    manager.save_text("new", str(target), source_file=source)
    assert target.read_text() == "new"


def test_sidecar_disabled(manager, config, tmp_path):
    """Test that sidecars can be switched off."""
    config.sidecar_auto_generate = False
    manager.save_text("text", str(tmp_path / "plain.txt"))
    assert not (tmp_path / "plain.json").exists()


def test_profiling_metadata(manager, config, tmp_path):
    """Test that profiling adds performance metadata."""
    config.output_profiling = True
    manager.save_text("text", str(tmp_path / "timed.txt"))
    sidecar = json.loads((tmp_path / "timed.json").read_text())
    assert "Duration" in sidecar["Performance"]
    assert sidecar["Performance"]["FileSizeBytes"] == 4
