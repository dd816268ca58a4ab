"""Tests for the Pipeline_Step class."""

import pytest

from multicorr.pipeline_step import (
    Constraint_Exception,
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Pipeline_Step,
    Size_Limit_Exception,
)


class Dummy_Pipeline_Step(Pipeline_Step):
    """A concrete implementation of Pipeline_Step for testing purposes."""

    def step(self, data):
        """Step method that simply returns the input data."""
        return data


def test_pipeline_step_initialization():
    """Test the initialization of the Pipeline_Step class."""
    description = "Test step"
    config = {"param": "value"}
    step = Dummy_Pipeline_Step(description, config)

    assert step.description == description
    assert step.config == config
    assert step.short_id == "dps"


def test_pipeline_step_short_id():
    """Test the short_id property of the Pipeline_Step class."""
    step = Dummy_Pipeline_Step("Test step", None, "custom_id")
    assert step.short_id == "custom_id"


def test_pipeline_step_logger_name():
    """Test that the step logger is named after the short id."""
    step = Dummy_Pipeline_Step("Test step", short_id="x1")
    assert step.logger.name == "multicorr.step.x1"


def test_pipeline_step_method():
    """Test the step method of the Pipeline_Step class."""
    step = Dummy_Pipeline_Step("Test step")
    data = {"key": "value"}
    assert step.step(data) == data


def test_pipeline_exception_hierarchy():
    """Test that all toolkit errors derive from Pipeline_Exception."""
    for cls in (Domain_Exception, Size_Limit_Exception, Constraint_Exception):
        with pytest.raises(Pipeline_Exception):
            raise cls("Test exception")
    with pytest.raises(Domain_Exception) as info:
        raise Impossible_Branch_Exception("gone", probability=1e-18)
    assert info.value.probability == 1e-18
