"""Data representation passed from step to step."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

from abc import ABC


class Pipeline_Data(ABC):
    """Data representation for a pipeline run."""

    _config = None

    def __init__(self, config=None):
        self._config = config
        self.history = []

    @property
    def config(self):
        """Configuration of the run."""
        return self._config

    @config.setter
    def config(self, value):
        """Set the configuration of the run."""
        self._config = value

    def record(self, step, **values):
        """Append an entry for a finished step to the history."""
        entry = {"step": step}
        entry.update(values)
        self.history.append(entry)
        return entry
