"""Structure, spectrum, and full factorization of a complex matrix pair.

Given ``a`` (m x n) and ``c`` (q x n), the generalized SVD writes
``u @ a @ qmat = (sigma_a, 0)`` and ``v @ c @ qmat = (sigma_c, 0)`` with
``u, v`` unitary and the sigma factors carrying an identity block of size
``r``, a paired diagonal block of size ``s`` with ``alpha_i^2 + beta_i^2 = 1``,
and a complementary block.  The squared generalized singular values are
``w_i = alpha_i^2 / beta_i^2``; their count ``s`` and the block sizes are pure
functions of the dimension triple.

The standing assumption is ``q >= m`` (callers with a short second factor
should swap arguments themselves; there is no silent reciprocal mapping).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import linalg
from .errors import (
    DecompositionError,
    DegeneracyError,
    DimensionError,
    RegimeError,
    SingularityError,
    UndefinedExpectationError,
)

# classification thresholds: a cosine-type singular value counts as one
# above 1 - ONE_TOL and as zero below ZERO_TOL; anything else is interior.
ONE_TOL = 1e-8
ZERO_TOL = 1e-8
# relative floor below which a singular/eigen value is treated as lost rank
RANK_TOL = 1e-12
# explicit factor construction is reference scale only
FACTORIZE_DIM_CAP = 32


class Regime(Enum):
    """Dimension regime of the pair; decides which reductions exist."""

    TALL_C = "tall_c"  # q >= n: both Gram matrices of c are invertible
    INTERMEDIATE = "intermediate"  # q < n < q + m
    DETERMINISTIC = "deterministic"  # n >= q + m: s = 0, no random spectrum


@dataclass(frozen=True)
class ProblemDims:
    """Dimension triple (m, q, n) of the pair, with the q >= m convention."""

    m: int
    q: int
    n: int

    def __post_init__(self):
        if min(self.m, self.q, self.n) < 1:
            raise DimensionError(f"dimensions must be >= 1, got {self}")
        if self.q < self.m:
            raise DimensionError(
                f"q = {self.q} < m = {self.m}: swap the pair so the factor "
                "with more rows comes second"
            )

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.m, self.q, self.n)


@dataclass(frozen=True)
class GsvdStructure:
    """Block sizes (k, r, s) and the regime they classify."""

    k: int
    r: int
    s: int
    regime: Regime


@dataclass(frozen=True)
class ReducedDims:
    """Dimensions (m', p, n') of the equivalent Gaussian-ratio ensemble."""

    m_prime: int
    p: int
    n_prime: int

    def __post_init__(self):
        if min(self.m_prime, self.p, self.n_prime) < 1:
            raise DimensionError(f"reduced dimensions must be >= 1, got {self}")
        if self.m_prime > self.n_prime:
            raise DimensionError(
                f"m' = {self.m_prime} > n' = {self.n_prime}: the ratio ensemble "
                "needs at least as many denominator columns as rows"
            )

    @property
    def l(self) -> int:
        """Number of nonzero eigenvalues."""
        return min(self.p, self.m_prime)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.m_prime, self.p, self.n_prime)


def compute_structure(dims: ProblemDims) -> GsvdStructure:
    """Block sizes from the dimension triple.

    ``k = min(m+q, n)`` is the stacked rank, ``r = k - min(q, n)`` the size
    of the identity block, and ``s = min(m,n) + min(q,n) - k`` the number of
    random squared generalized singular values.
    """
    m, q, n = dims.m, dims.q, dims.n
    k = min(m + q, n)
    r = k - min(q, n)
    s = min(m, n) + min(q, n) - k
    if q >= n:
        regime = Regime.TALL_C
    elif n < q + m:
        regime = Regime.INTERMEDIATE
    else:
        regime = Regime.DETERMINISTIC
    return GsvdStructure(k=k, r=r, s=s, regime=regime)


def reduced_dims(dims: ProblemDims) -> ReducedDims | None:
    """Map (m, q, n) to the ratio-ensemble dimensions (m', p, n').

    Returns ``None`` in the DETERMINISTIC regime (``n >= q + m``), where
    ``s = 0`` and the sigma factors carry no random block.
    """
    st = compute_structure(dims)
    if st.regime is Regime.TALL_C:
        return ReducedDims(dims.n, dims.m, dims.q)
    if st.regime is Regime.INTERMEDIATE:
        return ReducedDims(dims.q, st.s, dims.n)
    return None


@dataclass(frozen=True, eq=False)
class GsvdSpectrum:
    """Paired diagonal values: alphas, betas, and w = alpha^2/beta^2."""

    alphas: np.ndarray
    betas: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        a, b, w = self.alphas, self.betas, self.w
        if not (a.shape == b.shape == w.shape) or a.ndim != 1:
            raise DimensionError("spectrum arrays must be 1-d and equal length")
        if a.size:
            if np.any(a <= 0.0) or np.any(a >= 1.0) or np.any(np.diff(a) > 0):
                raise DegeneracyError("alphas must lie in (0,1), descending")
            if np.max(np.abs(a**2 + b**2 - 1.0)) > 1e-10:
                raise DegeneracyError("alpha^2 + beta^2 deviates from 1")
            if np.max(np.abs(w - a**2 / b**2) / np.maximum(w, 1e-300)) > 1e-8:
                raise DegeneracyError("w inconsistent with alpha^2/beta^2")
        for arr in (a, b, w):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.alphas.size


@dataclass(frozen=True, eq=False)
class GsvdFactors:
    """Explicit factors: u a qmat = (sigma_a, 0), v c qmat = (sigma_c, 0)."""

    u: np.ndarray
    v: np.ndarray
    qmat: np.ndarray
    sigma_a: np.ndarray
    sigma_c: np.ndarray
    structure: GsvdStructure


def _pair_dims(a: np.ndarray, c: np.ndarray) -> ProblemDims:
    a = linalg._as_matrix(a)
    c = linalg._as_matrix(c)
    if a.shape[1] != c.shape[1]:
        raise DimensionError(
            f"column counts differ: a is {a.shape}, c is {c.shape}"
        )
    return ProblemDims(m=a.shape[0], q=c.shape[0], n=a.shape[1])


def _classified_interior(sv: np.ndarray, st: GsvdStructure) -> np.ndarray:
    """Extract the s interior values; counts must match the structure.

    Values inside the dead zones are never reassigned: a count mismatch is
    a loud failure, since Gaussian inputs reach it with probability ~0 and
    silent repair would bias downstream statistics.
    """
    n_one = int(np.count_nonzero(sv > 1.0 - ONE_TOL))
    n_zero = int(np.count_nonzero(sv < ZERO_TOL))
    n_interior = sv.size - n_one - n_zero
    if n_one != st.r or n_zero != 0 or n_interior != st.s:
        raise DegeneracyError(
            f"singular value classification mismatch: expected {st.r} ones and "
            f"{st.s} interior values, found {n_one} ones, {n_interior} interior, "
            f"{n_zero} zeros"
        )
    return sv[st.r : st.r + st.s]


def _spectrum_from_alphas(alphas: np.ndarray) -> GsvdSpectrum:
    alphas = np.array(alphas, dtype=np.float64)
    betas = np.sqrt(1.0 - alphas**2)
    w = alphas**2 / (1.0 - alphas**2)
    return GsvdSpectrum(alphas=alphas, betas=betas, w=w)


def _stacked_left_block(a: np.ndarray, c: np.ndarray, k: int) -> np.ndarray:
    """First m rows of the k leading left singular vectors of the stack."""
    b = np.vstack([np.asarray(a, np.complex128), np.asarray(c, np.complex128)])
    p, sb, _ = np.linalg.svd(b, full_matrices=False)
    if sb[k - 1] <= RANK_TOL * sb[0]:
        raise DecompositionError(
            f"stacked pair is rank deficient: sigma_{k} / sigma_1 = "
            f"{sb[k - 1] / sb[0]:.3e}"
        )
    return p[: a.shape[0], :k]


def gsvd_spectrum(a, c) -> GsvdSpectrum:
    """Squared generalized singular values via the stacked-SVD path.

    Algorithm: SVD the (m+q) x n stack, keep the k leading left singular
    vectors, and SVD their top m rows.  Those singular values split into
    exactly r ones and s interior values; the interior values are the
    alphas, and ``w = alpha^2 / (1 - alpha^2)``.  Valid in every regime
    with ``s >= 1``.
    """
    dims = _pair_dims(a, c)
    st = compute_structure(dims)
    if st.s == 0:
        raise RegimeError(
            f"dims {dims.as_tuple()} are in the {st.regime.value} regime: "
            "s = 0, the pair has no random spectrum"
        )
    p1 = _stacked_left_block(a, c, st.k)
    sv = np.linalg.svd(p1, compute_uv=False)
    alphas = _classified_interior(sv, st)
    return _spectrum_from_alphas(alphas)


def gsvd_spectrum_direct(a, c) -> GsvdSpectrum:
    """Independent spectrum oracle through the Gram-inverse route.

    Only valid when ``q >= n`` (so the Gram matrix of ``c`` is invertible):
    the w values are the nonzero eigenvalues of ``a (c^H c)^{-1} a^H``,
    computed by a Hermitian positive-definite solve followed by an
    eigendecomposition.  Kept deliberately separate from the stacked-SVD
    path so the two can cross-check each other.
    """
    dims = _pair_dims(a, c)
    st = compute_structure(dims)
    if st.regime is not Regime.TALL_C:
        raise RegimeError(
            f"gram-inverse route needs q >= n, got q = {dims.q}, n = {dims.n}"
        )
    a = np.asarray(a, np.complex128)
    c = np.asarray(c, np.complex128)
    gram = c.conj().T @ c
    solved = linalg.solve_hermitian_posdef(gram, a.conj().T)
    ratio = a @ solved
    ratio = 0.5 * (ratio + ratio.conj().T)
    evals, _ = np.linalg.eigh(ratio)
    w = evals[::-1][: st.s]
    if np.any(w <= 0.0):
        raise DecompositionError("nonpositive eigenvalue in the ratio matrix")
    alphas = np.sqrt(w / (1.0 + w))
    return _spectrum_from_alphas(alphas)


def gsvd_factorize(a, c) -> GsvdFactors:
    """Explicit GSVD factors via the cosine-sine construction.

    SVD the stack to get the orthonormal left block and the shared right
    factor; SVD the top block for ``u`` and the middle unitary; obtain the
    columns of ``v`` by normalizing the bottom block's image wherever the
    sine values are safely nonzero and complete the rest orthonormally.
    The shared factor is assembled as (right singular vectors) times the
    inverse of (middle unitary conjugate times the diagonal of stacked
    singular values), padded with zero columns beyond k.
    """
    dims = _pair_dims(a, c)
    if max(dims.m, dims.q, dims.n) > FACTORIZE_DIM_CAP:
        raise DimensionError(
            f"explicit factorization is reference scale: dims must be "
            f"<= {FACTORIZE_DIM_CAP}, got {dims.as_tuple()}"
        )
    st = compute_structure(dims)
    m, q, n = dims.m, dims.q, dims.n
    k, r, s = st.k, st.r, st.s

    b = np.vstack([np.asarray(a, np.complex128), np.asarray(c, np.complex128)])
    p_full, sb, rh_full = np.linalg.svd(b, full_matrices=True)
    if sb[k - 1] <= RANK_TOL * sb[0]:
        raise DecompositionError("stacked pair is rank deficient")
    pk = p_full[:, :k]
    sigma_b = sb[:k]

    u_cs, sv1, wh = np.linalg.svd(pk[:m, :], full_matrices=True)
    _classified_interior(sv1, st)  # count check only; values reused below
    wmat = wh.conj().T  # k x k

    # image of the bottom block under the middle unitary: its columns are
    # mutually orthogonal with norms (0..0, beta_1..beta_s, 1..1)
    t = pk[m:, :] @ wmat
    norms = np.linalg.norm(t, axis=0)
    if np.any(norms[r:] <= ZERO_TOL):
        raise DegeneracyError("sine value vanished for a non-identity column")
    v_cs = np.empty((q, q), dtype=np.complex128)
    det_count = k - r
    v_cs[:, q - det_count :] = t[:, r:] / norms[r:]
    if q > det_count:
        v_cs[:, : q - det_count] = linalg.orthonormal_completion(
            v_cs[:, q - det_count :], q
        )

    sigma_a = np.zeros((m, k))
    idx = np.arange(r + s)
    sigma_a[idx, idx] = sv1[: r + s]
    sigma_c = np.zeros((q, k))
    rows = (q - det_count) + np.arange(det_count)
    cols = r + np.arange(det_count)
    sigma_c[rows, cols] = norms[r:]

    qk = rh_full[:k, :].conj().T
    qmat = np.zeros((n, n), dtype=np.complex128)
    qmat[:, :k] = qk @ (wmat / sigma_b[:, None])

    factors = GsvdFactors(
        u=u_cs.conj().T,
        v=v_cs.conj().T,
        qmat=qmat,
        sigma_a=sigma_a,
        sigma_c=sigma_c,
        structure=st,
    )
    _validate_factors(factors, b[:m], b[m:])
    return factors


def _validate_factors(f: GsvdFactors, a: np.ndarray, c: np.ndarray) -> None:
    """Self-check against the construction contracts; loud on violation."""
    m, n = a.shape
    q = c.shape[0]
    k = f.structure.k
    scale = 1.0 + np.linalg.norm(a) + np.linalg.norm(c)
    pad_a = np.hstack([f.sigma_a, np.zeros((m, n - k))])
    pad_c = np.hstack([f.sigma_c, np.zeros((q, n - k))])
    checks = (
        (np.linalg.norm(f.u @ a @ f.qmat - pad_a), 1e-8 * scale, "reconstruction of a"),
        (np.linalg.norm(f.v @ c @ f.qmat - pad_c), 1e-8 * scale, "reconstruction of c"),
        (np.linalg.norm(f.u @ f.u.conj().T - np.eye(m)), 1e-10, "unitarity of u"),
        (np.linalg.norm(f.v @ f.v.conj().T - np.eye(q)), 1e-10, "unitarity of v"),
        (
            np.linalg.norm(f.sigma_a.T @ f.sigma_a + f.sigma_c.T @ f.sigma_c - np.eye(k)),
            1e-10,
            "cosine-sine identity",
        ),
    )
    for value, bound, label in checks:
        if value > bound:
            raise DegeneracyError(
                f"factor validation failed: {label} residual {value:.3e} > {bound:.3e}"
            )


def q_power_trace(a, c) -> float:
    """Power of the shared right factor: sum of reciprocal stack eigenvalues.

    Equals ``trace(qmat qmat^H)`` of the explicit factorization, but is
    computed directly from the k nonzero eigenvalues of the stacked Gram
    matrix (taking whichever of the two Gram products is smaller).
    """
    dims = _pair_dims(a, c)
    if dims.m + dims.q == dims.n:
        raise DimensionError(
            "q_power_trace requires m + q != n (the square-stack boundary)"
        )
    b = np.vstack([np.asarray(a, np.complex128), np.asarray(c, np.complex128)])
    if b.shape[1] <= b.shape[0]:
        gram = b.conj().T @ b
    else:
        gram = b @ b.conj().T
    evals = np.linalg.eigvalsh(gram)
    if evals[0] <= RANK_TOL * evals[-1]:
        raise SingularityError(
            f"near-singular stack: lambda_min/lambda_max = {evals[0] / evals[-1]:.3e}"
        )
    return float(np.sum(1.0 / evals))


def expected_q_power(dims: ProblemDims) -> float:
    """Closed-form mean of q_power_trace over standard Gaussian pairs."""
    total = dims.m + dims.q
    if total == dims.n:
        raise UndefinedExpectationError(
            f"expectation undefined at m + q = n (= {dims.n})"
        )
    return min(total, dims.n) / abs(total - dims.n)
