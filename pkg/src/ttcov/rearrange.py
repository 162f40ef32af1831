"""Covariance matching layer: vectorization, Kronecker products, rearrangement.

The rearrangement operator maps a ``pqr x pqr`` matrix to a ``p^2 x q^2 x r^2``
tensor so that triple-Kronecker structure becomes low-rank tensor structure:

    rearrange(U kron V kron W) = vec(U) outer vec(V) outer vec(W)

with the row-major vectorization ``vec(M)[(a-1)*cols + b] = M[a, b]``. Both
directions are pure entry permutations, hence linear Frobenius isometries,
implemented as O(d^2) reshape/transpose index maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FactorShape", "vec", "kron", "rearrange", "rearrange_inv"]


@dataclass(frozen=True)
class FactorShape:
    """Kronecker block sizes ``(p, q, r)``; the matrix side is ``d = p*q*r``."""

    p: int
    q: int
    r: int

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def d(self) -> int:
        return self.p * self.q * self.r

    @property
    def tensor_dims(self) -> tuple[int, int, int]:
        return (self.p**2, self.q**2, self.r**2)


def vec(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization: ``vec(M)[(a-1)*cols + b] = M[a, b]``."""
    return np.asarray(m).ravel().copy()


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the standard block layout."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_side(s: np.ndarray, shape: FactorShape) -> None:
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if s.shape[0] != shape.d:
        raise ValueError(
            f"matrix side {s.shape[0]} does not equal p*q*r = {shape.d}"
        )


def rearrange(s: np.ndarray, shape: FactorShape) -> np.ndarray:
    """Rearrange a ``pqr x pqr`` matrix into a ``(p^2, q^2, r^2)`` tensor.

    Entry map (1-based): the tensor entry ``(a, b, c)`` is the matrix entry at
    row ``(ceil(a/p)-1)qr + (ceil(b/q)-1)r + ceil(c/r)`` and column
    ``((a-1)%p)qr + ((b-1)%q)r + (c-1)%r + 1``.
    """
    s = np.asarray(s, dtype=float)
    _check_side(s, shape)
    p, q, r = shape.p, shape.q, shape.r
    t = s.reshape(p, q, r, p, q, r).transpose(0, 3, 1, 4, 2, 5)
    return np.ascontiguousarray(t).reshape(p * p, q * q, r * r)


def rearrange_inv(t: np.ndarray, shape: FactorShape) -> np.ndarray:
    """Inverse rearrangement: ``rearrange_inv(rearrange(S)) == S`` entrywise."""
    t = np.asarray(t, dtype=float)
    p, q, r = shape.p, shape.q, shape.r
    if t.shape != shape.tensor_dims:
        raise ValueError(
            f"expected tensor dims {shape.tensor_dims}, got {t.shape}"
        )
    s = t.reshape(p, p, q, q, r, r).transpose(0, 2, 4, 1, 3, 5)
    return np.ascontiguousarray(s).reshape(shape.d, shape.d)
