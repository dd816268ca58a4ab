"""Base class for transformation steps and the toolkit's exceptions."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import logging
from abc import ABC, abstractmethod

from multicorr.helper.naming import guess_short_id


class Pipeline_Step(ABC):
    """Abstract class for a step acting on data passed through a pipeline."""

    def __init__(self, description, config=None, short_id=""):
        self.description = description

        if short_id:
            self._short_id = short_id
        else:
            self._short_id = guess_short_id(self.__class__.__name__)

        self._config = config

        # Initialize logger for this step
        self._logger = None

    @property
    def logger(self):
        """
        Get a logger for this step.

        Returns
        -------
        logging.Logger
            Logger instance named after this step.
        """
        if self._logger is None:
            self._logger = logging.getLogger(f"multicorr.step.{self.short_id}")
        return self._logger

    @property
    def config(self):
        """Configuration of the step."""
        return self._config

    @property
    def short_id(self):
        """Short id of the step."""
        return self._short_id

    def __repr__(self):
        return f"{self.__class__.__name__}({self.description!r})"

    @abstractmethod
    def step(self, data):
        """Abstract method to be implemented by the step."""
        pass


class Pipeline_Exception(Exception):
    """Exception class for the toolkit."""

    pass


class Domain_Exception(Pipeline_Exception):
    """An input lies outside the numerical domain of an operation."""

    pass


class Impossible_Branch_Exception(Domain_Exception):
    """A postselected branch has (numerically) zero probability."""

    def __init__(self, message, probability=0.0):
        super().__init__(message)
        self.probability = probability


class Size_Limit_Exception(Pipeline_Exception):
    """A computation was refused because the system is too large."""

    pass


class Constraint_Exception(Pipeline_Exception):
    """A protocol is not CLOCC or communicates across a forbidden cut."""

    pass
