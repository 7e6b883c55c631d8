"""Small shared helpers."""

import math


def round_half_away_from_zero(x):
    """Round to the nearest integer; ties (x.5) go away from zero.

    Python's built-in round() rounds half to even, which would make the
    selected-subset size depend on parity in a surprising way.
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))
