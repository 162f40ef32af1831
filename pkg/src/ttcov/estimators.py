"""Estimation algorithms: sample covariance, HardTTh and its one-shot
TT-HOSVD baseline, Tucker/HOOI, PRLS soft thresholding, rank selection, and
the end-to-end covariance pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import truncated_svd
from .rearrange import FactorShape, rearrange, rearrange_inv
from .tensor import fold, mode_product, unfold

__all__ = [
    "Tucker2Factorization",
    "Tucker3Factorization",
    "EstimatorSpec",
    "sample_covariance",
    "hardtth",
    "tt_hosvd",
    "tucker_hooi",
    "prls",
    "tune_prls",
    "estimate_covariance",
    "select_ranks",
    "METHODS",
]

METHODS = ("sample", "hardtth", "tt_hosvd", "tucker", "tucker_hooi", "prls")


@dataclass(frozen=True)
class Tucker2Factorization:
    """Two-sided orthogonal factorization ``u x1 v x3 core`` with
    ``u (d1, J)``, ``v (d3, K)`` orthonormal and ``core (J, d2, K)``."""

    u: np.ndarray
    v: np.ndarray
    core: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return mode_product(self.u, mode_product(self.v, self.core, 3), 1)


@dataclass(frozen=True)
class Tucker3Factorization:
    """Full Tucker factorization: three orthonormal factors and a dense core."""

    factors: tuple[np.ndarray, np.ndarray, np.ndarray]
    core: np.ndarray

    def reconstruct(self) -> np.ndarray:
        t = self.core
        for i, f in enumerate(self.factors):
            t = mode_product(f, t, i + 1)
        return t


@dataclass(frozen=True)
class EstimatorSpec:
    """Method identifier plus hyperparameters for the covariance pipeline.

    ``ranks`` is ``(rank1, rank3)`` for the TT-family methods and
    ``(r1, r2, r3)`` for the Tucker family. ``lambda1``/``lambda2`` apply to
    PRLS only. ``center`` subtracts the sample mean first (off for the
    centered synthetic model). ``psd_projection`` clips negative eigenvalues
    of the final estimate.
    """

    method: str
    ranks: tuple = ()
    iters: int = 0
    lambda1: float | None = None
    lambda2: float | None = None
    svd_method: str = "exact"
    oversample: int = 10
    power_iters: int = 2
    seed: int | None = None
    center: bool = False
    psd_projection: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.iters < 0:
            raise ValueError("iters must be >= 0")
        if self.method in ("hardtth", "tt_hosvd"):
            if len(self.ranks) != 2:
                raise ValueError(f"{self.method} needs ranks=(rank1, rank3)")
        elif self.method in ("tucker", "tucker_hooi"):
            if len(self.ranks) != 3:
                raise ValueError(f"{self.method} needs ranks=(r1, r2, r3)")
        elif self.method == "prls":
            if self.lambda1 is None or self.lambda2 is None:
                raise ValueError("prls needs lambda1 and lambda2")
            if self.lambda1 < 0 or self.lambda2 < 0:
                raise ValueError("prls thresholds must be nonnegative")


def sample_covariance(x: np.ndarray, center: bool = False) -> np.ndarray:
    """``(1/n) X^T X`` for row observations, symmetrized on output.

    The model treats observations as centered; ``center=True`` subtracts the
    empirical mean first for external data.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need a nonempty (n, d) matrix of row observations")
    if center:
        x = x - x.mean(axis=0, keepdims=True)
    s = x.T @ x / x.shape[0]
    return (s + s.T) / 2.0


def _top_left(m: np.ndarray, k: int, spec: EstimatorSpec,
              rng: np.random.Generator | None) -> np.ndarray:
    return truncated_svd(
        m, k, method=spec.svd_method, oversample=spec.oversample,
        power_iters=spec.power_iters, rng=rng,
    ).u


def _check_tt_ranks(dims, rank1: int, rank3: int) -> None:
    d1, d2, d3 = dims
    if not 1 <= rank1 <= min(d1, d2 * d3):
        raise ValueError(f"rank1={rank1} out of range for dims {dims}")
    if not 1 <= rank3 <= min(d3, rank1 * d2):
        raise ValueError(f"rank3={rank3} out of range for dims {dims}")


def hardtth(
    y: np.ndarray,
    rank1: int,
    rank3: int,
    iters: int = 10,
    svd_method: str = "exact",
    seed=None,
    oversample: int = 10,
    power_iters: int = 2,
    with_initial: bool = False,
):
    """Hard tensor-train thresholding: alternating truncated-SVD refinement.

    Initialization takes ``u`` from the top-``rank1`` left singular vectors of
    the mode-1 unfolding of ``y`` and ``v`` from the mode-3 unfolding of the
    mode-1-projected tensor; each of the ``iters`` rounds re-extracts ``u``
    from the mode-3-projected tensor and ``v`` from the mode-1-projected one.
    ``iters=0`` stops after initialization.

    Returns the :class:`Tucker2Factorization`; with ``with_initial=True`` also
    returns the initialization pair ``(u0, v0)``.
    """
    _check_tt_ranks(y.shape, rank1, rank3)
    spec = EstimatorSpec(
        method="hardtth", ranks=(rank1, rank3), iters=iters,
        svd_method=svd_method, oversample=oversample, power_iters=power_iters,
    )
    rng = np.random.default_rng(seed) if svd_method == "randomized" else None
    u = _top_left(unfold(y, 1), rank1, spec, rng)
    v = _top_left(unfold(mode_product(u.T, y, 1), 3), rank3, spec, rng)
    u0, v0 = u, v
    for _ in range(iters):
        u = _top_left(unfold(mode_product(v.T, y, 3), 1), rank1, spec, rng)
        v = _top_left(unfold(mode_product(u.T, y, 1), 3), rank3, spec, rng)
    core = mode_product(v.T, mode_product(u.T, y, 1), 3)
    fact = Tucker2Factorization(u=u, v=v, core=core)
    if with_initial:
        return fact, (u0, v0)
    return fact


def tt_hosvd(
    y: np.ndarray,
    rank1: int,
    rank3: int,
    svd_method: str = "exact",
    seed=None,
    oversample: int = 10,
    power_iters: int = 2,
) -> Tucker2Factorization:
    """One-shot baseline: ``u`` and ``v`` from independent truncated SVDs of
    the mode-1 and mode-3 unfoldings of ``y``, core from the double projection.

    Unlike ``hardtth(iters=0)``, the mode-3 factor is computed from the raw
    (unprojected) unfolding; this is the reference one-shot baseline the
    benchmark tables are calibrated against.
    """
    _check_tt_ranks(y.shape, rank1, rank3)
    spec = EstimatorSpec(
        method="tt_hosvd", ranks=(rank1, rank3),
        svd_method=svd_method, oversample=oversample, power_iters=power_iters,
    )
    rng = np.random.default_rng(seed) if svd_method == "randomized" else None
    u = _top_left(unfold(y, 1), rank1, spec, rng)
    v = _top_left(unfold(y, 3), rank3, spec, rng)
    core = mode_product(v.T, mode_product(u.T, y, 1), 3)
    return Tucker2Factorization(u=u, v=v, core=core)


def tucker_hooi(y: np.ndarray, ranks: tuple[int, int, int],
                iters: int = 0) -> Tucker3Factorization:
    """Tucker factorization: truncated SVDs of the three unfoldings, then
    ``iters`` rounds of orthogonal iteration (modes swept in order 1, 2, 3)."""
    if len(ranks) != 3:
        raise ValueError("ranks must be (r1, r2, r3)")
    for i, r in enumerate(ranks):
        if not 1 <= r <= y.shape[i]:
            raise ValueError(f"rank {r} out of range for mode {i + 1}")
    factors = [
        truncated_svd(unfold(y, i + 1), ranks[i]).u for i in range(3)
    ]
    for _ in range(iters):
        for i in range(3):
            z = y
            for j in range(3):
                if j != i:
                    z = mode_product(factors[j].T, z, j + 1)
            factors[i] = truncated_svd(unfold(z, i + 1), ranks[i]).u
    core = y
    for i in range(3):
        core = mode_product(factors[i].T, core, i + 1)
    return Tucker3Factorization(factors=tuple(factors), core=core)


def prls(y: np.ndarray, lambda1: float, lambda2: float) -> np.ndarray:
    """Sequential soft-thresholded SVD denoiser.

    Singular values of the mode-1 unfolding are shrunk by ``lambda1/2`` and
    clipped at zero; the result is refolded and the mode-3 unfolding is shrunk
    by ``lambda2/2`` the same way.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("thresholds must be nonnegative")
    m1 = unfold(y, 1)
    u, s, vt = np.linalg.svd(m1, full_matrices=False)
    x1 = (u * np.maximum(s - lambda1 / 2.0, 0.0)) @ vt
    xp = fold(x1, 1, y.shape)
    m3 = unfold(xp, 3)
    u, s, vt = np.linalg.svd(m3, full_matrices=False)
    x3 = (u * np.maximum(s - lambda2 / 2.0, 0.0)) @ vt
    return fold(x3, 3, y.shape)


def tune_prls(
    y: np.ndarray,
    target: np.ndarray,
    grid_points: int = 20,
    grid_span: float = 1e-3,
) -> tuple[float, float, float]:
    """Oracle grid search for the PRLS thresholds.

    Each threshold ranges over ``grid_points`` log-spaced values from
    ``grid_span * sigma1`` to ``sigma1`` of the respective unfolding (mode 1
    of ``y``; mode 3 of the stage-one output). Returns
    ``(lambda1, lambda2, best_frobenius_error)`` where the error is
    ``||prls(y, l1, l2) - target||_F``, evaluated without materializing the
    full reconstruction per grid point.
    """
    if y.shape != target.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {target.shape}")
    u1, s1, vt1 = np.linalg.svd(unfold(y, 1), full_matrices=False)
    m3_target = unfold(target, 3)
    target_sq = float(np.linalg.norm(m3_target) ** 2)
    if s1[0] == 0.0:
        return 0.0, 0.0, float(np.sqrt(target_sq))
    best = (np.inf, 0.0, 0.0)
    for lam1 in np.geomspace(grid_span * s1[0], s1[0], grid_points):
        x1 = (u1 * np.maximum(s1 - lam1 / 2.0, 0.0)) @ vt1
        u3, s3, vt3 = np.linalg.svd(unfold(fold(x1, 1, y.shape), 3),
                                    full_matrices=False)
        # ||u3 diag(s') vt3 - target||^2 splits into the aligned block and the
        # target mass outside the row space of vt3
        b = u3.T @ m3_target @ vt3.T
        off = target_sq - float(np.linalg.norm(b) ** 2)
        lam2_grid = (np.geomspace(grid_span * s3[0], s3[0], grid_points)
                     if s3[0] > 0 else np.array([0.0]))
        for lam2 in lam2_grid:
            shrunk = np.maximum(s3 - lam2 / 2.0, 0.0)
            err_sq = float(np.linalg.norm(np.diag(shrunk) - b) ** 2) + off
            if err_sq < best[0]:
                best = (err_sq, float(lam1), float(lam2))
    return best[1], best[2], float(np.sqrt(max(best[0], 0.0)))


def _psd_clip(sigma: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(sigma)
    return (v * np.clip(w, 0.0, None)) @ v.T


def _denoise(y: np.ndarray, spec: EstimatorSpec) -> tuple[np.ndarray, dict]:
    details: dict = {}
    if spec.method == "sample":
        return y, details
    if spec.method == "hardtth":
        fact, (u0, v0) = hardtth(
            y, *spec.ranks, iters=spec.iters, svd_method=spec.svd_method,
            seed=spec.seed, oversample=spec.oversample,
            power_iters=spec.power_iters, with_initial=True,
        )
        details["factorization"] = fact
        details["initial_factors"] = (u0, v0)
        return fact.reconstruct(), details
    if spec.method == "tt_hosvd":
        fact = tt_hosvd(
            y, *spec.ranks, svd_method=spec.svd_method, seed=spec.seed,
            oversample=spec.oversample, power_iters=spec.power_iters,
        )
        details["factorization"] = fact
        details["initial_factors"] = (fact.u, fact.v)
        return fact.reconstruct(), details
    if spec.method in ("tucker", "tucker_hooi"):
        iters = spec.iters if spec.method == "tucker_hooi" else 0
        fact3 = tucker_hooi(y, spec.ranks, iters=iters)
        details["factorization"] = fact3
        return fact3.reconstruct(), details
    if spec.method == "prls":
        return prls(y, spec.lambda1, spec.lambda2), details
    raise ValueError(f"unknown method {spec.method!r}")


def estimate_covariance(
    x: np.ndarray,
    shape: FactorShape,
    spec: EstimatorSpec,
    return_details: bool = False,
):
    """Full pipeline: sample covariance -> rearrange -> denoise -> inverse
    rearrangement -> symmetrize (-> optional PSD projection).

    ``x`` holds row observations of dimension ``shape.d``. With
    ``return_details=True`` also returns a dict with the intermediate sample
    covariance, the denoised tensor, and (for the TT family) the factors.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != shape.d:
        raise ValueError(
            f"observations must be (n, {shape.d}) for shape {shape}, got {x.shape}"
        )
    cov = sample_covariance(x, center=spec.center)
    y = rearrange(cov, shape)
    t_hat, details = _denoise(y, spec)
    est = rearrange_inv(t_hat, shape)
    est = (est + est.T) / 2.0
    if spec.psd_projection:
        est = _psd_clip(est)
        est = (est + est.T) / 2.0
    if return_details:
        details.update(cov_sample=cov, tensor_noisy=y, tensor_estimate=t_hat)
        return est, details
    return est


def select_ranks(
    sigma_hat: np.ndarray,
    shape: FactorShape,
    n: int,
    omega: float,
    delta: float,
    c_prime: float,
) -> tuple[int, int]:
    """Threshold-based selection of the two matricization ranks.

    The mode-1 rank is the largest count of singular values of the mode-1
    unfolding of ``rearrange(sigma_hat)`` at or above
    ``c' * omega * ||sigma_hat|| * sqrt((r1^2 + r2^2 r3^2 + log(6/delta)) / n)``
    with the effective dimensions evaluated on ``sigma_hat``; the mode-3 rank
    is selected analogously with the already-selected mode-1 rank in the
    threshold. Returns ``(0, ...)`` when nothing clears.
    """
    from .diagnostics import effective_dims  # local import to avoid a cycle

    if omega <= 0:
        raise ValueError("omega must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if c_prime <= 0:
        raise ValueError("c_prime must be positive")
    if n <= 0:
        raise ValueError("n must be positive")
    y = rearrange(sigma_hat, shape)
    dims = effective_dims(sigma_hat, shape)
    norm = float(np.linalg.norm(sigma_hat, 2))
    base = c_prime * omega * norm
    r1sq, r2sq, r3sq = dims.r1**2, dims.r2**2, dims.r3**2

    s1 = np.linalg.svd(unfold(y, 1), compute_uv=False)
    thr1 = base * np.sqrt((r1sq + r2sq * r3sq + np.log(6.0 / delta)) / n)
    rank1 = int(np.count_nonzero(s1 >= thr1))

    s3 = np.linalg.svd(unfold(y, 3), compute_uv=False)
    thr3 = base * np.sqrt(
        (rank1 * r1sq + rank1 * r2sq + r3sq + np.log(48.0 / delta)) / n
    )
    rank3 = int(np.count_nonzero(s3 >= thr3))
    return rank1, rank3
