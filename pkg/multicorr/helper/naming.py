"""Naming and number formatting helpers."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import math
import re


def guess_short_id(name):
    """
    Obtain a short id (used for a Pipeline_Step) from a class or module name.

    E.g. "dab" for ``Dephase_And_Broadcast`` or "sa" for ``Send_Ancilla``.
    Leading digits, as in ``01_filter``, are kept as they are.
    As a fallback, use "00".
    """
    try:
        words = [w for w in re.split(r"[_.]", name.split(".")[-1]) if w]
        short_id = ""
        for word in words:
            # check if word is just numbers
            if word.isdigit():
                short_id += word
            else:
                short_id += word[0].lower()
        if not short_id:
            short_id = "00"
    except Exception:
        short_id = "00"
    return short_id


def significant(value, digits=12):
    """Round a real number to a number of significant digits."""
    value = float(value)
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


def round_floats(obj, digits=12):
    """Recursively round all floats in nested lists/dicts to significant digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return significant(obj, digits)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    # numpy scalars
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        return round_floats(obj.item(), digits)
    return obj
