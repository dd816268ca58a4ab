"""Tabular forms of figure data and command results."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import logging

import numpy as np
import pandas as pd

from multicorr.covariance import wmix_closed_form
from multicorr.distillation import q_of_fidelity
from multicorr.pipeline_step import Pipeline_Exception

lgr = logging.getLogger(__name__)

FIGURES = ("fig2", "fig3")


def fidelity_grid(which, points):
    """
    Fidelity axis of a figure.

    The success-probability curves live on the open interval (1/2, 1), the
    covariance curves on [0, 1].
    """
    if points < 2:
        raise Pipeline_Exception(f"A figure needs at least 2 points, got {points}.")
    if which == "fig2":
        return np.linspace(0.5, 1.0, points + 2)[1:-1]
    return np.linspace(0.0, 1.0, points)


def figure_table(which, parties, points=101):
    """
    Curve data of a figure, one row per (n, F).

    Parameters
    ----------
    which : {"fig2", "fig3"}
        ``fig2``: success probability ``q`` of filtering the equal W/Wbar
        mixture to fidelity ``F``. ``fig3``: ``cov`` of sigma_z on every
        party for F|W><W| + (1-F)|Wbar><Wbar|.
    parties : sequence of int
        Party counts, emitted in ascending order (bottom curve first).
    points : int
        Grid points along the fidelity axis.

    Returns
    -------
    pandas.DataFrame
    """
    if which not in FIGURES:
        raise Pipeline_Exception(f"Unknown figure '{which}'. Use fig2 or fig3.")
    grid = fidelity_grid(which, points)
    rows = []
    for n in sorted(set(int(n) for n in parties)):
        for fidelity in grid:
            fidelity = float(fidelity)
            if which == "fig2":
                rows.append({"n": n, "F": fidelity, "q": q_of_fidelity(n, fidelity)})
            else:
                _, cov = wmix_closed_form(n, fidelity)
                rows.append({"n": n, "F": fidelity, "cov": cov})
    lgr.debug("%s: %d rows for n = %s", which, len(rows), sorted(set(parties)))
    return pd.DataFrame(rows)


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for key, value in obj.items():
            yield from _flatten(value, f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            yield prefix, ""
        for i, value in enumerate(obj):
            yield from _flatten(value, f"{prefix}.{i}" if prefix else str(i))
    else:
        yield prefix, obj


def result_table(result):
    """
    Flatten a command result into a table.

    A result holding ``rows`` (a list of records) becomes one row per record;
    anything else becomes ``field``/``value`` pairs with dotted field names.
    """
    rows = result.get("rows") if isinstance(result, dict) else None
    if rows and all(isinstance(row, dict) for row in rows):
        return pd.DataFrame(rows)
    return pd.DataFrame(list(_flatten(result)), columns=["field", "value"])


def result_text(result):
    """Render a command result as the aligned text of :func:`result_table`."""
    return result_table(result).to_string(index=False) + "\n"
