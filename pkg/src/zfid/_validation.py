"""Small input-checking helpers built on :func:`sklearn.utils.check_array`."""

import numpy as np
from sklearn.utils import check_array


def as_square_matrix(M, name="M"):
    """Return ``M`` as a finite 2-d float array, raising ``ValueError`` if not square."""
    arr = check_array(M, dtype=np.float64, ensure_2d=True, ensure_min_samples=1,
                      ensure_min_features=1, input_name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def as_vertex_list(vertices, order, name="vertices"):
    """Validate 1-indexed vertex labels against ``order``; keeps the given order, drops nothing.

    Raises ``ValueError`` on duplicates or labels outside ``1..order``.
    """
    out = []
    for v in vertices:
        iv = int(v)
        if iv != v:
            raise ValueError(f"{name}: non-integer vertex label {v!r}")
        if not 1 <= iv <= order:
            raise ValueError(f"{name}: vertex {iv} outside 1..{order}")
        out.append(iv)
    if len(set(out)) != len(out):
        raise ValueError(f"{name}: duplicate vertex labels in {out}")
    return out
