"""Synthetic data generation: the triple-Kronecker sampling model with exact
ground-truth covariance, spectrum-decay factor variants, and direct
tensor-plus-noise instances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rearrange import FactorShape, rearrange
from .tensor import unfold

__all__ = [
    "SpectrumDecay",
    "GroundTruth",
    "gen_ground_truth",
    "true_covariance",
    "sample_observations",
    "gen_tensor_instance",
    "TensorInstance",
]

_DECAY_KINDS = ("gaussian", "inverse_quadratic", "exponential", "linear")


@dataclass(frozen=True)
class SpectrumDecay:
    """Factor-matrix generation profile.

    ``gaussian`` draws symmetric matrices with i.i.d. standard-normal diagonal
    and upper-diagonal entries (mirrored). The decay kinds draw a random
    orthogonal eigenbasis and set eigenvalues ``scale * profile(i)`` with
    ``profile`` = ``1/i^2``, ``exp(-rate*(i-1))`` or ``(d-i+1)/d``.
    """

    kind: str = "gaussian"
    scale: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in _DECAY_KINDS:
            raise ValueError(f"kind must be one of {_DECAY_KINDS}, got {self.kind!r}")

    def eigenvalues(self, dim: int) -> np.ndarray:
        i = np.arange(1, dim + 1, dtype=float)
        if self.kind == "inverse_quadratic":
            profile = 1.0 / i**2
        elif self.kind == "exponential":
            profile = np.exp(-self.rate * (i - 1.0))
        elif self.kind == "linear":
            profile = (dim - i + 1.0) / dim
        else:
            raise ValueError(f"{self.kind} has no eigenvalue profile")
        return self.scale * profile


def _symmetric_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.standard_normal((dim, dim))
    return np.triu(m) + np.triu(m, 1).T


def _random_orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    # QR of a Gaussian matrix with sign-fixed diagonal (Haar at this scale)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _factor(rng: np.random.Generator, dim: int, decay: SpectrumDecay) -> np.ndarray:
    if decay.kind == "gaussian":
        return decay.scale * _symmetric_gaussian(rng, dim)
    basis = _random_orthogonal(rng, dim)
    return (basis * decay.eigenvalues(dim)) @ basis.T


@dataclass(frozen=True)
class GroundTruth:
    """Factor matrices of the sampling model.

    ``a[j]``, ``b[j, k]``, ``c[k]`` are symmetric; observations are sums over
    ``(j, k)`` of the three-mode products of the factors with fresh standard
    Gaussian tensors, and the population covariance is
    ``sum_{jk} a[j]^2 kron b[j,k]^2 kron c[k]^2``.
    """

    a: np.ndarray  # (J, p, p)
    b: np.ndarray  # (J, K, q, q)
    c: np.ndarray  # (K, r, r)
    shape: FactorShape
    seed: int | None = None

    @property
    def rank1(self) -> int:
        return self.a.shape[0]

    @property
    def rank3(self) -> int:
        return self.c.shape[0]


def gen_ground_truth(
    shape: FactorShape,
    rank1: int,
    rank3: int,
    decay: SpectrumDecay = SpectrumDecay(),
    seed=None,
) -> GroundTruth:
    """Draw the factor matrices of a ``(rank1, rank3)`` model, deterministically
    for a fixed seed."""
    if rank1 < 1 or rank3 < 1:
        raise ValueError("ranks must be >= 1")
    rng = np.random.default_rng(seed)
    p, q, r = shape.p, shape.q, shape.r
    a = np.stack([_factor(rng, p, decay) for _ in range(rank1)])
    b = np.stack(
        [np.stack([_factor(rng, q, decay) for _ in range(rank3)]) for _ in range(rank1)]
    )
    c = np.stack([_factor(rng, r, decay) for _ in range(rank3)])
    return GroundTruth(a=a, b=b, c=c, shape=shape, seed=seed)


def true_covariance(gt: GroundTruth) -> np.ndarray:
    """Population covariance ``sum_{jk} a_j^2 kron b_jk^2 kron c_k^2``."""
    d = gt.shape.d
    sigma = np.zeros((d, d))
    for j in range(gt.rank1):
        aj2 = gt.a[j] @ gt.a[j]
        for k in range(gt.rank3):
            bjk2 = gt.b[j, k] @ gt.b[j, k]
            ck2 = gt.c[k] @ gt.c[k]
            sigma += np.kron(np.kron(aj2, bjk2), ck2)
    return sigma


def sample_observations(
    gt: GroundTruth, n: int, seed=None, sampler: str = "factor"
) -> np.ndarray:
    """Draw ``n`` observations as rows of an ``(n, p*q*r)`` matrix.

    ``sampler="factor"`` realizes the model literally: for every observation
    and every ``(j, k)`` a fresh standard Gaussian ``(p, q, r)`` tensor is
    premultiplied by ``a_j``, ``b_jk``, ``c_k`` on modes 1-3 and the results
    are summed, then flattened row-major. ``sampler="spectral"`` draws the
    identical law ``N(0, true_covariance(gt))`` through the symmetric square
    root, at a fraction of the cost. Both are deterministic given the seed.
    """
    if n < 1:
        raise ValueError("need at least one observation")
    rng = np.random.default_rng(seed)
    p, q, r = gt.shape.p, gt.shape.q, gt.shape.r
    d = gt.shape.d
    if sampler == "spectral":
        w, v = np.linalg.eigh(true_covariance(gt))
        root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        return rng.standard_normal((n, d)) @ root
    if sampler != "factor":
        raise ValueError(f"unknown sampler {sampler!r}")
    x = np.zeros((n, d))
    for j in range(gt.rank1):
        for k in range(gt.rank3):
            noise = rng.standard_normal((n, p, q, r))
            contrib = np.einsum(
                "ia,jb,kc,nabc->nijk", gt.a[j], gt.b[j, k], gt.c[k], noise,
                optimize=True,
            )
            x += contrib.reshape(n, d)
    return x


@dataclass(frozen=True)
class TensorInstance:
    """A planted low-TT-rank tensor with additive Gaussian noise.

    ``u_star`` / ``v_star`` are orthonormal bases of the mode-1 / mode-3
    column spaces of the clean tensor, for subspace-distance evaluation.
    """

    t_star: np.ndarray
    y: np.ndarray
    u_star: np.ndarray
    v_star: np.ndarray
    shape: FactorShape = field(repr=False)


def gen_tensor_instance(
    shape: FactorShape,
    rank1: int,
    rank3: int,
    decay: SpectrumDecay = SpectrumDecay(),
    noise_sigma: float = 0.0,
    seed=None,
) -> TensorInstance:
    """Build ``y = t_star + noise`` where ``t_star`` is the rearrangement of a
    ``(rank1, rank3)`` triple-Kronecker sum, so its mode-1 / mode-3
    matricization ranks are at most ``(rank1, rank3)``."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    gt = gen_ground_truth(shape, rank1, rank3, decay=decay,
                          seed=rng.integers(2**63))
    d = shape.d
    s = np.zeros((d, d))
    for j in range(rank1):
        for k in range(rank3):
            s += np.kron(np.kron(gt.a[j], gt.b[j, k]), gt.c[k])
    t_star = rearrange(s, shape)
    y = t_star
    if noise_sigma > 0:
        y = t_star + noise_sigma * rng.standard_normal(t_star.shape)
    u_full, s1, _ = np.linalg.svd(unfold(t_star, 1), full_matrices=False)
    v_full, s3, _ = np.linalg.svd(unfold(t_star, 3), full_matrices=False)
    return TensorInstance(
        t_star=t_star,
        y=y,
        u_star=u_full[:, :rank1].copy(),
        v_star=v_full[:, :rank3].copy(),
        shape=shape,
    )
