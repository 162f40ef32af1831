"""Matrix spectral toolkit: truncated SVD (exact and randomized), soft
thresholding, spectral norms, and subspace distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncatedSvd",
    "truncated_svd",
    "soft_threshold_svd",
    "sin_theta",
    "spectral_norm",
    "sigma_k",
    "procrustes_distance",
]

ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class TruncatedSvd:
    """Rank-k factors: ``u (n, k)`` orthonormal columns, ``s`` nonincreasing,
    ``vt (k, m)`` orthonormal rows."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank(self) -> int:
        return self.s.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


def _validate_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    return m


def truncated_svd(
    m: np.ndarray,
    k: int,
    method: str = "exact",
    oversample: int = 10,
    power_iters: int = 2,
    seed=None,
    rng: np.random.Generator | None = None,
) -> TruncatedSvd:
    """Top-``k`` singular triplets of ``m``.

    Parameters
    ----------
    m : ndarray (n, p)
    k : int
        Target rank, ``1 <= k <= min(n, p)``.
    method : {"exact", "randomized"}
        "exact" truncates a full SVD. "randomized" uses a Gaussian sketch of
        width ``k + oversample`` refined by ``power_iters`` power iterations
        with QR re-orthonormalization, then solves the small problem exactly.
    seed, rng
        Randomness for the sketch; ``rng`` takes precedence. The randomized
        path is deterministic for a fixed seed.
    """
    m = _validate_matrix(m)
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"rank k={k} out of range for shape {m.shape}")
    if method == "exact":
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        return TruncatedSvd(u[:, :k].copy(), s[:k].copy(), vt[:k].copy())
    if method != "randomized":
        raise ValueError(f"unknown SVD method {method!r}")

    if rng is None:
        rng = np.random.default_rng(seed)
    n, p = m.shape
    width = min(k + oversample, min(n, p))
    g = rng.standard_normal((p, width))
    q = np.linalg.qr(m @ g)[0]
    for _ in range(power_iters):
        q = np.linalg.qr(m.T @ q)[0]
        q = np.linalg.qr(m @ q)[0]
    ub, s, vt = np.linalg.svd(q.T @ m, full_matrices=False)
    u = q @ ub
    return TruncatedSvd(u[:, :k].copy(), s[:k].copy(), vt[:k].copy())


def soft_threshold_svd(m: np.ndarray, lam: float) -> np.ndarray:
    """Shrink every singular value by ``lam/2`` and clip at zero."""
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    m = _validate_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return (u * np.maximum(s - lam / 2.0, 0.0)) @ vt


def _check_orthonormal(u: np.ndarray, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"{name} must be a matrix")
    gram = u.T @ u
    dev = np.max(np.abs(gram - np.eye(u.shape[1])))
    if dev > ORTHONORMALITY_TOL:
        raise ValueError(
            f"{name} does not have orthonormal columns (deviation {dev:.2e})"
        )
    return u


def sin_theta(u1: np.ndarray, u2: np.ndarray) -> float:
    """Spectral-norm sin-theta distance ``||(I - P_1) P_2||`` between the
    column spaces of two orthonormal matrices."""
    u1 = _check_orthonormal(u1, "u1")
    u2 = _check_orthonormal(u2, "u2")
    if u1.shape[0] != u2.shape[0]:
        raise ValueError("subspaces live in different ambient dimensions")
    resid = u2 - u1 @ (u1.T @ u2)
    return float(min(1.0, np.linalg.norm(resid, 2)))


def spectral_norm(m: np.ndarray, tol: float = 1e-10, max_iters: int = 1000) -> float:
    """Largest singular value via power iteration on ``m^T m``.

    Small matrices go straight to an exact SVD; the iterative path falls back
    to the exact computation if the relative change has not dropped below
    ``tol`` within ``max_iters`` iterations.
    """
    m = _validate_matrix(m)
    if m.size == 0:
        return 0.0
    if min(m.shape) <= 64:
        s = np.linalg.svd(m, compute_uv=False)
        return float(s[0]) if s.size else 0.0
    if m.shape[0] < m.shape[1]:
        m = m.T
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iters):
        w = m @ v
        est = np.linalg.norm(w)
        if est == 0.0:
            return 0.0
        v = m.T @ w
        v /= np.linalg.norm(v)
        if abs(est - prev) <= tol * est:
            return float(est)
        prev = est
    return float(np.linalg.svd(m, compute_uv=False)[0])


def sigma_k(m: np.ndarray, k: int) -> float:
    """The ``k``-th largest singular value (exact SVD)."""
    m = _validate_matrix(m)
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"k={k} out of range for shape {m.shape}")
    return float(np.linalg.svd(m, compute_uv=False)[k - 1])


def procrustes_distance(u1: np.ndarray, u2: np.ndarray) -> float:
    """Spectral-norm distance ``||u1 - u2 O||`` after the optimal rotation.

    ``O`` is the orthogonal polar factor of ``u2^T u1``, the standard
    alignment from the SVD of the cross-Gram matrix.
    """
    u1 = _check_orthonormal(u1, "u1")
    u2 = _check_orthonormal(u2, "u2")
    if u1.shape != u2.shape:
        raise ValueError(f"shape mismatch: {u1.shape} vs {u2.shape}")
    a, _, bt = np.linalg.svd(u2.T @ u1)
    return float(np.linalg.norm(u1 - u2 @ (a @ bt), 2))
