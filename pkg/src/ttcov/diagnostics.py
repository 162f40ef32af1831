"""Partial traces, effective dimensions, recovery-condition checking, and
deterministic perturbation-bound evaluation for the two-sided SVD algorithm."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import spectral_norm
from .rearrange import FactorShape, rearrange
from .tensor import mode_product, unfold

__all__ = [
    "partial_trace",
    "EffectiveDims",
    "effective_dims",
    "ConditionReport",
    "recovery_condition_report",
    "SensitivityReport",
    "sensitivity_report",
]

_ROW_LABELS = ("a", "b", "c")
_COL_LABELS = ("d", "e", "f")


def partial_trace(sigma: np.ndarray, shape: FactorShape, modes) -> np.ndarray:
    """Trace out the Kronecker factors listed in ``modes``.

    ``sigma`` is indexed by composite row/column indices
    ``(a-1)qr + (b-1)r + c``; tracing mode ``i`` sums over equal row/column
    indices in factor ``i``. The result is a matrix over the surviving
    factors in their original order; tracing all three modes yields the full
    trace as a 1x1 matrix. Composition order does not matter.
    """
    modes = sorted(set(int(m) for m in modes))
    if not modes or any(m not in (1, 2, 3) for m in modes):
        raise ValueError(f"modes must be a nonempty subset of {{1,2,3}}, got {modes}")
    sigma = np.asarray(sigma, dtype=float)
    p, q, r = shape.p, shape.q, shape.r
    if sigma.shape != (shape.d, shape.d):
        raise ValueError(f"expected a {shape.d}x{shape.d} matrix, got {sigma.shape}")
    s6 = sigma.reshape(p, q, r, p, q, r)
    sub = list(_ROW_LABELS + _COL_LABELS)
    for m in modes:
        sub[3 + m - 1] = sub[m - 1]
    keep = [i for i in range(3) if (i + 1) not in modes]
    out = "".join(_ROW_LABELS[i] for i in keep) + "".join(_COL_LABELS[i] for i in keep)
    traced = np.einsum("".join(sub) + "->" + out, s6)
    side = int(np.prod([(p, q, r)[i] for i in keep])) if keep else 1
    return traced.reshape(side, side)


@dataclass(frozen=True)
class EffectiveDims:
    """Effective dimensions with the constituent partial-trace norm ratios.

    Each ``r_i`` is the maximum of the ratios listed under key ``i`` in
    ``ratios`` and is bounded by the corresponding factor dimension.
    """

    r1: float
    r2: float
    r3: float
    ratios: dict = field(default_factory=dict)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)


def effective_dims(sigma: np.ndarray, shape: FactorShape) -> EffectiveDims:
    """Partial-trace spectral-norm ratios acting as effective dimensions.

    ``r1 = max(||Tr_1|| / ||sigma||, ||Tr_{1,2}|| / ||Tr_2||)`` and similarly
    for ``r2``; ``r3`` additionally includes ``||Tr_{1,2,3}|| / ||Tr_{1,2}||``.
    Scale-invariant; requires a nonzero, (numerically) symmetric input.
    """
    sigma = np.asarray(sigma, dtype=float)
    scale = np.max(np.abs(sigma))
    if scale == 0.0:
        raise ValueError("effective dimensions are undefined for the zero matrix")
    if np.max(np.abs(sigma - sigma.T)) > 1e-8 * scale:
        raise ValueError("input must be symmetric")

    norms = {"": spectral_norm(sigma)}
    for key in ((1,), (2,), (3,), (1, 2), (2, 3), (1, 3), (1, 2, 3)):
        name = ",".join(map(str, key))
        norms[name] = spectral_norm(partial_trace(sigma, shape, key))

    def ratio(num: str, den: str) -> float:
        if norms[den] == 0.0:
            raise ValueError(f"partial trace over {{{den}}} has zero norm")
        return norms[num] / norms[den]

    ratios = {
        1: (ratio("1", ""), ratio("1,2", "2")),
        2: (ratio("2", ""), ratio("2,3", "3")),
        3: (ratio("3", ""), ratio("1,3", "1"), ratio("1,2,3", "1,2")),
    }
    return EffectiveDims(
        r1=max(ratios[1]), r2=max(ratios[2]), r3=max(ratios[3]), ratios=ratios
    )


# Constants of the high-probability recovery guarantee, verbatim.
_BIAS_FACTOR = 25.0
_CONDITION_FACTOR = 768.0
_VARIANCE_FACTOR = 96.0
_ANCILLARY_FACTOR = 32.0
_CONTRACTION_FACTOR = 200.0
_DIAMOND_FACTOR = 96.0


@dataclass(frozen=True)
class ConditionReport:
    """Evaluation of the singular-value recovery conditions at sample size n.

    ``condition1``/``condition2`` hold the (lhs, rhs, margin, passed) of the
    mode-1 and mode-3 inequalities. ``leading_variance`` is the dominant
    variance term of the error bound; ``sample_gate`` is the minimal sample
    size and ``sample_gate_passed`` whether ``n`` clears it. ``ancillary``
    carries the reported remainder diagnostics; its trailing variance factor
    includes the ``||sigma||`` multiplier for dimensional consistency, which
    ``ancillary_scale_flag`` records (the printed form omits it).
    """

    condition1: dict
    condition2: dict
    leading_variance: float
    sample_gate: float
    sample_gate_passed: bool
    effective: EffectiveDims
    sigma_norm: float
    singular1: float
    singular3: float
    ancillary: dict
    ancillary_scale_flag: bool = True

    @property
    def passed(self) -> bool:
        return bool(
            self.condition1["passed"]
            and self.condition2["passed"]
            and self.sample_gate_passed
        )


def recovery_condition_report(
    sigma: np.ndarray,
    shape: FactorShape,
    n: int,
    rank1: int,
    rank3: int,
    omega: float,
    delta: float,
    bias_norm1: float = 0.0,
    bias_norm3: float = 0.0,
    iters: int = 10,
) -> ConditionReport:
    """Evaluate, for a given covariance, the two singular-value conditions,
    the leading variance term, and the sample-size gate.

    ``bias_norm1``/``bias_norm3`` are the spectral norms of the mode-1/mode-3
    unfoldings of the model-misspecification tensor (zero for an exact model);
    the ancillary diagnostics bound contracted bias terms by these norms.
    Purely evaluative; nothing is estimated.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if n <= 0:
        raise ValueError("n must be positive")
    if bias_norm1 < 0 or bias_norm3 < 0:
        raise ValueError("bias norms must be nonnegative")
    sigma = np.asarray(sigma, dtype=float)
    t = rearrange(sigma, shape)
    dims = effective_dims(sigma, shape)
    r1sq, r2sq, r3sq = dims.r1**2, dims.r2**2, dims.r3**2
    j, k = rank1, rank3
    norm = spectral_norm(sigma)
    s1 = np.linalg.svd(unfold(t, 1), compute_uv=False)
    s3 = np.linalg.svd(unfold(t, 3), compute_uv=False)
    sing1 = float(s1[j - 1])
    sing3 = float(s3[k - 1])
    log6 = np.log(6.0 / delta)
    log48 = np.log(48.0 / delta)

    def cond(lhs: float, bias: float, load: float) -> dict:
        rhs = _BIAS_FACTOR * bias + _CONDITION_FACTOR * omega * norm * np.sqrt(load / n)
        return {
            "lhs": lhs,
            "rhs": float(rhs),
            "margin": float(lhs - rhs),
            "passed": bool(lhs >= rhs),
        }

    condition1 = cond(sing1, bias_norm1, r1sq + r2sq * r3sq + log6)
    condition2 = cond(sing3, bias_norm3, j * r1sq + j * r2sq + r3sq + log48)

    variance = _VARIANCE_FACTOR * omega * norm * np.sqrt(
        (j * r1sq + j * k * r2sq + k * r3sq + log48) / n
    )
    gate = j * r1sq + j * k * r2sq + k * r3sq + r2sq * r3sq + log48

    # Reported remainder diagnostics: bias contractions bounded by the
    # supplied unfolding norms, variance pieces at their stated loads.
    vterm = lambda load: _ANCILLARY_FACTOR * omega * norm * np.sqrt(load / n)
    alpha_u = bias_norm1 + vterm(r1sq + k * r2sq + log48)
    beta_u = bias_norm1 + vterm(r1sq + k * r2sq + k * r3sq + log48)
    alpha_v = bias_norm3 + vterm(r3sq + j * r2sq + log48)
    beta_v = bias_norm3 + vterm(r3sq + j * r1sq + j * r2sq + log48)
    diamond2 = _DIAMOND_FACTOR * (
        np.sqrt(k) * beta_v * alpha_u / sing1 + np.sqrt(j) * beta_u * alpha_v / sing3
    )
    contraction = _CONTRACTION_FACTOR * beta_v * beta_u / (sing1 * sing3)
    # trailing factor carries the norm multiplier (dimensional consistency)
    r_t = (
        (np.sqrt(j) + np.sqrt(k))
        * contraction**iters
        * (bias_norm1 + vterm(r1sq + r2sq * r3sq + log6))
    )
    ancillary = {
        "alpha_u": float(alpha_u),
        "beta_u": float(beta_u),
        "alpha_v": float(alpha_v),
        "beta_v": float(beta_v),
        "diamond2": float(diamond2),
        "contraction": float(contraction),
        "r_t": float(r_t),
        "iters": iters,
    }
    return ConditionReport(
        condition1=condition1,
        condition2=condition2,
        leading_variance=float(variance),
        sample_gate=float(gate),
        sample_gate_passed=bool(n >= gate),
        effective=dims,
        sigma_norm=float(norm),
        singular1=sing1,
        singular3=sing3,
        ancillary=ancillary,
    )


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _polar_factor(g: np.ndarray) -> np.ndarray:
    a, _, bt = np.linalg.svd(g, full_matrices=False)
    return a @ bt


def _beta_mode1_lower(e, rank3, restarts, seed, iters=100, tol=1e-8):
    """Alternating lower estimate of sup ||m1(V^T x3 e)|| over ||V|| <= 1."""
    d1, d2, d3 = e.shape
    best = 0.0
    for child in _as_seedseq(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        v = rng.standard_normal((d3, rank3))
        v /= np.linalg.norm(v, 2)
        prev = 0.0
        for _ in range(iters):
            z = mode_product(v.T, e, 3)
            u, s, vt = np.linalg.svd(unfold(z, 1), full_matrices=False)
            obj, x, y = s[0], u[:, 0], vt[0]
            g = np.einsum("a,bk,abc->ck", x, y.reshape(d2, rank3), e)
            v = _polar_factor(g)
            if abs(obj - prev) <= tol * max(obj, 1e-300):
                break
            prev = obj
        best = max(best, float(obj))
    return best


def _beta_mode3_lower(e, rank1, restarts, seed, iters=100, tol=1e-8):
    """Alternating lower estimate of sup ||m3(U^T x1 e)|| over ||U|| <= 1."""
    d1, d2, d3 = e.shape
    best = 0.0
    for child in _as_seedseq(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        u = rng.standard_normal((d1, rank1))
        u /= np.linalg.norm(u, 2)
        prev = 0.0
        for _ in range(iters):
            z = mode_product(u.T, e, 1)
            uu, s, vt = np.linalg.svd(unfold(z, 3), full_matrices=False)
            obj, x, y = s[0], uu[:, 0], vt[0]
            g = np.einsum("c,jb,abc->aj", x, y.reshape(rank1, d2), e)
            u = _polar_factor(g)
            if abs(obj - prev) <= tol * max(obj, 1e-300):
                break
            prev = obj
        best = max(best, float(obj))
    return best


def _sup_projection_lower(e, rank1, rank3, restarts, seed, iters=100, tol=1e-8):
    """Alternating lower estimate of sup ||U^T x1 V^T x3 e||_F over
    orthonormal U, V (orthogonal-iteration ascent on e)."""
    d1, d2, d3 = e.shape

    def run(u, v):
        prev = 0.0
        for _ in range(iters):
            u = np.linalg.svd(unfold(mode_product(v.T, e, 3), 1),
                              full_matrices=False)[0][:, :rank1]
            v = np.linalg.svd(unfold(mode_product(u.T, e, 1), 3),
                              full_matrices=False)[0][:, :rank3]
            obj = float(np.linalg.norm(mode_product(v.T, mode_product(u.T, e, 1), 3)))
            if abs(obj - prev) <= tol * max(obj, 1e-300):
                break
            prev = obj
        return obj

    u0 = np.linalg.svd(unfold(e, 1), full_matrices=False)[0][:, :rank1]
    v0 = np.linalg.svd(unfold(e, 3), full_matrices=False)[0][:, :rank3]
    best = run(u0, v0)
    for child in _as_seedseq(seed).spawn(max(restarts - 1, 0)):
        rng = np.random.default_rng(child)
        u = np.linalg.qr(rng.standard_normal((d1, rank1)))[0]
        v = np.linalg.qr(rng.standard_normal((d3, rank3)))[0]
        best = max(best, run(u, v))
    return best


@dataclass(frozen=True)
class SensitivityReport:
    """Deterministic perturbation-bound terms for a planted tensor.

    ``alpha_u``/``alpha_v`` are exact contracted-noise spectral norms. The
    ``beta`` suprema are not polynomially computable, so each is bracketed:
    ``*_lower`` from projected alternating maximization, ``*_upper`` the
    rigorous unfolding-norm bound. ``diamond2``/``r_t`` are assembled from
    bracket midpoints with their half-bracket widths reported;
    ``error_bound_upper`` assembles the full right-hand side from the upper
    brackets and is the quantity guaranteed to dominate the reconstruction
    error when the conditions hold.
    """

    alpha_u: float
    alpha_v: float
    beta_u_lower: float
    beta_u_upper: float
    beta_v_lower: float
    beta_v_upper: float
    sup_term: float
    sup_term_upper: float
    diamond2: float
    diamond2_width: float
    r_t: float
    r_t_width: float
    singular1: float
    singular3: float
    condition_flags: dict
    error_bound_upper: float
    iters: int


def sensitivity_report(
    t_star: np.ndarray,
    e: np.ndarray,
    u_star: np.ndarray,
    v_star: np.ndarray,
    rank1: int,
    rank3: int,
    iters: int = 10,
    restarts: int = 20,
    seed=None,
) -> SensitivityReport:
    """Evaluate the deterministic error-bound terms for ``y = t_star + e``.

    ``u_star``/``v_star`` must be orthonormal bases of the mode-1/mode-3
    column spaces of ``t_star``. ``iters`` is the iteration count the bound
    is evaluated at (the contraction term decays geometrically in it).
    """
    from .linalg import ORTHONORMALITY_TOL

    for name, m, rows in (("u_star", u_star, t_star.shape[0]),
                          ("v_star", v_star, t_star.shape[2])):
        m = np.asarray(m)
        if m.shape[0] != rows:
            raise ValueError(f"{name} has {m.shape[0]} rows, expected {rows}")
        dev = np.max(np.abs(m.T @ m - np.eye(m.shape[1])))
        if dev > ORTHONORMALITY_TOL:
            raise ValueError(f"{name} is not orthonormal (deviation {dev:.2e})")
    if t_star.shape != e.shape:
        raise ValueError("t_star and e must share dimensions")
    j, k = rank1, rank3

    alpha_u = float(np.linalg.norm(unfold(mode_product(v_star.T, e, 3), 1), 2))
    alpha_v = float(np.linalg.norm(unfold(mode_product(u_star.T, e, 1), 3), 2))
    m1_norm = float(np.linalg.norm(unfold(e, 1), 2))
    m3_norm = float(np.linalg.norm(unfold(e, 3), 2))
    ss = np.random.SeedSequence(seed).spawn(3)
    beta_u_lower = _beta_mode1_lower(e, k, restarts, ss[0])
    beta_v_lower = _beta_mode3_lower(e, j, restarts, ss[1])
    # contraction by an operator of norm <= 1 cannot increase the spectral norm
    beta_u_upper = m1_norm
    beta_v_upper = m3_norm
    beta_u_lower = min(beta_u_lower, beta_u_upper)
    beta_v_lower = min(beta_v_lower, beta_v_upper)
    sup_term = _sup_projection_lower(e, j, k, restarts, ss[2])
    e_frob = float(np.linalg.norm(e))
    sup_upper = min(e_frob, np.sqrt(j) * m1_norm, np.sqrt(k) * m3_norm)
    sup_term = min(sup_term, sup_upper)

    sing1 = float(np.linalg.svd(unfold(t_star, 1), compute_uv=False)[j - 1])
    sing3 = float(np.linalg.svd(unfold(t_star, 3), compute_uv=False)[k - 1])

    def diamond(bu, bv):
        return 48.0 * (np.sqrt(k) * bv * alpha_u / sing1
                       + np.sqrt(j) * bu * alpha_v / sing3)

    def tail(bu, bv):
        return (3.0 * (np.sqrt(j) + np.sqrt(k))
                * (64.0 * bv * bu / (sing1 * sing3)) ** iters * m1_norm)

    bu_mid = (beta_u_lower + beta_u_upper) / 2.0
    bv_mid = (beta_v_lower + beta_v_upper) / 2.0
    diamond_mid = diamond(bu_mid, bv_mid)
    diamond_hi = diamond(beta_u_upper, beta_v_upper)
    diamond_lo = diamond(beta_u_lower, beta_v_lower)
    tail_mid = tail(bu_mid, bv_mid)
    tail_hi = tail(beta_u_upper, beta_v_upper)
    tail_lo = tail(beta_u_lower, beta_v_lower)

    flags = {
        "condition1": bool(sing1 >= 24.0 * m1_norm),
        "condition2_upper": bool(sing3 >= 24.0 * beta_v_upper),
        "condition2_heuristic": bool(sing3 >= 24.0 * beta_v_lower),
    }
    bound_upper = (sup_upper + 4.0 * np.sqrt(k) * alpha_v
                   + 4.0 * np.sqrt(j) * alpha_u + diamond_hi + tail_hi)
    return SensitivityReport(
        alpha_u=alpha_u,
        alpha_v=alpha_v,
        beta_u_lower=beta_u_lower,
        beta_u_upper=beta_u_upper,
        beta_v_lower=beta_v_lower,
        beta_v_upper=beta_v_upper,
        sup_term=sup_term,
        sup_term_upper=float(sup_upper),
        diamond2=float(diamond_mid),
        diamond2_width=float((diamond_hi - diamond_lo) / 2.0),
        r_t=float(tail_mid),
        r_t_width=float((tail_hi - tail_lo) / 2.0),
        singular1=sing1,
        singular3=sing3,
        condition_flags=flags,
        error_bound_upper=float(bound_upper),
        iters=iters,
    )
