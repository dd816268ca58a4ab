"""Tests for the Pipeline_Data class."""

import os

from multicorr.config import Config
from multicorr.pipeline_data import Pipeline_Data


class Some_Pipeline_Data(Pipeline_Data):
    """A concrete implementation of Pipeline_Data for testing purposes."""

    def __init__(self, config):
        super().__init__(config)


# get path of this script
script_path = os.path.realpath(__file__)
# get config path
config_path = os.path.join(os.path.dirname(script_path), "config.py")


def test_pipeline_data_initialization():
    """Test the initialization of the Pipeline_Data class."""
    config = Config(config_path)
    pipeline_data = Some_Pipeline_Data(config)
    assert pipeline_data.config == config
    assert pipeline_data.history == []


def test_pipeline_data_record():
    """Test that recorded entries are appended to the history."""
    pipeline_data = Some_Pipeline_Data(None)
    entry = pipeline_data.record("ap", before=0.0, after=1.0)
    assert entry == {"step": "ap", "before": 0.0, "after": 1.0}
    assert pipeline_data.history == [entry]
