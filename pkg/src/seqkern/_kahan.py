"""Compensated (Kahan) summation primitives.

Long dot products in this package are accumulated in ascending index order
with Kahan compensation.  The op sequence per term is part of the
reproducibility contract: the scalar helpers here and the batched helpers
used by the engine perform the identical sequence of IEEE-754 operations
per path, which is what makes batched results bit-for-bit equal to the
per-path reference regardless of how replications are grouped.
"""

import numpy as np


def kahan_add(total, comp, term):
    """One compensated addition step.

    Works on floats or elementwise on arrays.  Returns the updated
    ``(total, comp)`` pair.
    """
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def kahan_add_where(total, comp, term, mask):
    """Batched compensated addition applied only where ``mask`` is true.

    Lanes with a false mask keep their running total *and* compensation
    untouched, so they see exactly the op sequence they would have seen
    had the masked terms never been presented.  A plain Kahan step with a
    zero term is not a no-op once the compensation carry is nonzero,
    hence the explicit gating of both state variables.
    """
    y = term - comp
    t = total + y
    c = (t - total) - y
    return np.where(mask, t, total), np.where(mask, c, comp)
