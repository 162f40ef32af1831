"""Dense order-3 tensor toolkit: unfoldings, foldings, mode products, geometry.

Tensors are plain ``numpy.ndarray`` objects of ``ndim == 3`` in C (row-major)
layout; matrices are 2-d arrays. All index formulas in docstrings are 1-based,
matching the usual mathematical convention; the storage layout is numpy's.

Unfolding conventions for a tensor of shape ``(d1, d2, d3)``:

* mode 1: ``M[x, y] = T[x, ceil(y/d3), (y-1) % d3 + 1]`` -> shape ``(d1, d2*d3)``
* mode 2: ``M[x, y] = T[(y-1) % d1 + 1, x, ceil(y/d1)]`` -> shape ``(d2, d1*d3)``
* mode 3: ``M[x, y] = T[ceil(y/d2), (y-1) % d2 + 1, x]`` -> shape ``(d3, d1*d2)``

These admit the identities (for suitable ``X``)::

    m1(X x3 T) = m1(T) (I_{d2} kron X^T)      m1(X x1 T) = X m1(T)
    m3(X x1 T) = m3(T) (X^T kron I_{d2})      m3(X x3 T) = X m3(T)

No function here mutates its inputs; every result is a fresh array.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_tensor3",
    "unfold",
    "fold",
    "mode_product",
    "frobenius_norm",
    "inner_product",
]

_MODES = (1, 2, 3)


def as_tensor3(t) -> np.ndarray:
    """Validate and return ``t`` as a float order-3 tensor."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got ndim={t.ndim}")
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite entries")
    return t


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Matricize ``t`` along ``mode``.

    Parameters
    ----------
    t : ndarray, shape (d1, d2, d3)
    mode : {1, 2, 3}
        Mode whose fibers become the rows.

    Returns
    -------
    ndarray
        Shape ``(d1, d2*d3)``, ``(d2, d1*d3)`` or ``(d3, d1*d2)``.
    """
    if t.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got ndim={t.ndim}")
    d1, d2, d3 = t.shape
    if mode == 1:
        return t.reshape(d1, d2 * d3)
    if mode == 2:
        return t.transpose(1, 2, 0).reshape(d2, d3 * d1)
    if mode == 3:
        return t.transpose(2, 0, 1).reshape(d3, d1 * d2)
    raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


def fold(m: np.ndarray, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold`: ``fold(unfold(t, mode), mode, t.shape) == t``."""
    m = np.asarray(m)
    d1, d2, d3 = dims
    expected = {1: (d1, d2 * d3), 2: (d2, d1 * d3), 3: (d3, d1 * d2)}
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if m.shape != expected[mode]:
        raise ValueError(
            f"mode-{mode} unfolding of a {dims} tensor has shape "
            f"{expected[mode]}, got {m.shape}"
        )
    if mode == 1:
        return m.reshape(d1, d2, d3)
    if mode == 2:
        return m.reshape(d2, d3, d1).transpose(2, 0, 1)
    return m.reshape(d3, d1, d2).transpose(1, 2, 0)


def mode_product(m: np.ndarray, t: np.ndarray, mode: int) -> np.ndarray:
    """Contract matrix ``m`` with ``t`` along ``mode``.

    ``(m x_i t)[.., a_i, ..] = sum_b m[a_i, b] t[.., b, ..]``; the mode-``i``
    dimension of the result is ``m.shape[0]``.
    """
    m = np.asarray(m)
    if t.ndim != 3 or m.ndim != 2:
        raise ValueError("mode_product expects a matrix and an order-3 tensor")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"matrix has {m.shape[1]} columns but tensor mode {mode} "
            f"has size {t.shape[mode - 1]}"
        )
    if mode == 1:
        return np.tensordot(m, t, axes=(1, 0))
    if mode == 2:
        return np.moveaxis(np.tensordot(m, t, axes=(1, 1)), 0, 1)
    return np.moveaxis(np.tensordot(m, t, axes=(1, 2)), 0, 2)


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(t).ravel()))


def inner_product(s: np.ndarray, t: np.ndarray) -> float:
    """Euclidean inner product of two same-shaped tensors."""
    s = np.asarray(s)
    t = np.asarray(t)
    if s.shape != t.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {t.shape}")
    return float(np.dot(s.ravel(), t.ravel()))
