"""Core Pipeline class for chaining transformation steps."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import logging

from multicorr.pipeline_step import Pipeline_Exception, Pipeline_Step

lgr = logging.getLogger(__name__)


def _banner(message: str, width: int = 80, fill: str = "-") -> str:
    """Return a centered banner line for console/file logs."""
    return f" {message} ".center(width, fill)


class Pipeline:
    """
    Pipeline class to run steps in sequence.

    The Pipeline passes data through each step in order. Scenario runners and
    work-extraction protocols are both expressed as pipelines.

    Parameters
    ----------
    steps : list of Pipeline_Step
        A list of Pipeline_Step instances to execute in sequence.

    Attributes
    ----------
    pipeline_steps : list of Pipeline_Step
        The steps to be executed.

    Examples
    --------
    >>> from multicorr import Pipeline, Pipeline_Step
    >>>
    >>> class Multiply_Step(Pipeline_Step):
    ...     def __init__(self, factor):
    ...         super().__init__(f"Multiply by {factor}")
    ...         self.factor = factor
    ...     def step(self, data):
    ...         return data * self.factor
    >>>
    >>> pipeline = Pipeline([Multiply_Step(2), Multiply_Step(3)])
    >>> pipeline.run(5)
    30
    """

    def __init__(self, steps):
        """
        Initialize the Pipeline.

        Parameters
        ----------
        steps : list of Pipeline_Step
            A list of Pipeline_Step instances to execute in sequence.

        Raises
        ------
        ValueError
            If steps is not a list of Pipeline_Step instances.
        """
        steps = list(steps)
        if not all(isinstance(step, Pipeline_Step) for step in steps):
            raise ValueError("All steps must be Pipeline_Step instances.")
        self.pipeline_steps = steps

    def run(self, data=None):
        """
        Run the pipeline.

        Parameters
        ----------
        data : object, optional
            Optional input data to be passed to the first step.

        Returns
        -------
        data : object
            The output data after processing through all steps.

        Raises
        ------
        Pipeline_Exception
            Re-raised after logging which step failed.
        """
        for pos, step in enumerate(self.pipeline_steps, start=1):
            lgr.debug(_banner(f"Step {pos}: {step.__class__.__name__}"))
            lgr.debug("- %s", step.description)

            try:
                data = step.step(data)
            except Pipeline_Exception as e:
                lgr.error("Error in %s: %s", step.description, e)
                raise

        lgr.debug(_banner("Pipeline finished"))

        return data
