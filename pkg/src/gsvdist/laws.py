"""Closed-form eigenvalue laws of the complex Gaussian ratio ensemble.

For independent standard complex Gaussian ``x`` (m' x p) and ``y``
(m' x n') with ``m' <= n'``, the nonzero eigenvalues of
``x^H (y y^H)^{-1} x`` have the joint density

    f(w_1..w_l) = M * prod w_i^t1 / prod (1+w_i)^t2 * prod_{i<j} (w_i-w_j)^2

with ``l = min(p, m')``, ``t1 = |m' - p|``, ``t2 = p + n'``, and a
normalization constant M built from complex multivariate gamma functions.
The single-eigenvalue marginal is a signed sum over pairs of permutations
whose weights are products of Beta functions; it satisfies a reciprocal
identity relating the density at ``w`` to the density with shifted exponent
``t1' = n' - m'`` evaluated at ``1/w``.

Everything is evaluated in log domain, and the heavily cancelling signed
sums use exponent-merged weights plus compensated accumulation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, betaln, logsumexp

from .errors import (
    ComplexityError,
    ConsistencyError,
    DimensionError,
    PoleError,
)

LOG_PI = math.log(math.pi)
# the (l!)^2 permutation enumeration is the reference semantics; above this
# cap the cost is ruled out rather than approximated
MAX_MARGINAL_ORDER = 7
_MAX_UNMERGED_ORDER = 5
# cancellation residue more negative than this (relative to the largest
# summand) means the term table itself is inconsistent
NEGATIVE_CLAMP = 1e-12


def log_mvgamma(dim: int, a: float) -> float:
    """Log of the complex multivariate gamma function.

    ``pi^(dim(dim-1)/2) * prod_{i=1}^{dim} Gamma(a - i + 1)``, evaluated
    entirely in log domain.  Requires ``a > dim - 1`` (pole otherwise).
    """
    if dim < 1:
        raise DimensionError(f"dimension must be >= 1, got {dim}")
    if a <= dim - 1:
        raise PoleError(f"log_mvgamma({dim}, {a}): need a > {dim - 1}")
    return 0.5 * dim * (dim - 1) * LOG_PI + sum(
        math.lgamma(a - i) for i in range(dim)
    )


def log_norm_constant(m_prime: int, p: int, n_prime: int) -> float:
    """Log normalization constant M of the joint eigenvalue density.

    Two branches depending on the sign of ``p - m'``; the exponent of pi is
    ``d(d-1)`` (not halved) with ``d`` the smaller of the two, exactly as
    the density requires.
    """
    _validate_triple(m_prime, p, n_prime)
    if p >= m_prime:
        d = m_prime
        others = (p, n_prime, d)
    else:
        d = p
        others = (m_prime, p + n_prime - m_prime, d)
    value = d * (d - 1) * LOG_PI + log_mvgamma(d, p + n_prime) - math.lgamma(d + 1)
    for arg in others:
        value -= log_mvgamma(d, arg)
    return value


def _validate_triple(m_prime: int, p: int, n_prime: int) -> None:
    if min(m_prime, p, n_prime) < 1:
        raise DimensionError(
            f"law parameters must be >= 1, got ({m_prime}, {p}, {n_prime})"
        )
    if m_prime > n_prime:
        raise DimensionError(
            f"need m' <= n', got m' = {m_prime}, n' = {n_prime}"
        )


@dataclass(frozen=True)
class LawParams:
    """Frozen parameter bundle for the eigenvalue laws.

    Derived fields: ``l = min(p, m')``, ``t1 = |m' - p|``, ``t2 = p + n'``,
    ``t1_reciprocal = n' - m'``, and the log normalization constant.  The
    identity ``t2 - t1 - 2l + 1 = n' - m' + 1 >= 1`` guarantees every Beta
    argument in the marginal is at least one.
    """

    m_prime: int
    p: int
    n_prime: int
    l: int
    t1: int
    t2: int
    t1_reciprocal: int
    log_m: float


def law_params(m_prime: int, p: int, n_prime: int) -> LawParams:
    """Validate a triple and derive the full law parameterization."""
    _validate_triple(m_prime, p, n_prime)
    params = LawParams(
        m_prime=m_prime,
        p=p,
        n_prime=n_prime,
        l=min(p, m_prime),
        t1=abs(m_prime - p),
        t2=p + n_prime,
        t1_reciprocal=n_prime - m_prime,
        log_m=log_norm_constant(m_prime, p, n_prime),
    )
    if params.t2 - params.t1 - 2 * params.l + 1 < 1:
        raise ConsistencyError(f"Beta-argument positivity violated for {params}")
    return params


@dataclass(frozen=True)
class SignedPermutationTerm:
    """One monomial of the marginal: ``sign * exp(log_beta_product) * w^exponent``.

    Unmerged terms carry the Beta product of a single permutation pair;
    merged terms carry the log magnitude of the signed weight summed over
    all pairs sharing the exponent.
    """

    exponent: int
    sign: int
    log_beta_product: float


def _perm_sign(perm: tuple[int, ...]) -> int:
    inversions = sum(
        1
        for i in range(len(perm))
        for j in range(i + 1, len(perm))
        if perm[i] > perm[j]
    )
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=16)
def _perms_and_signs(l: int) -> tuple[np.ndarray, np.ndarray]:
    perms = np.array(list(itertools.permutations(range(1, l + 1))), dtype=np.int64)
    signs = np.array([_perm_sign(tuple(p)) for p in perms], dtype=np.int64)
    return perms, signs


def _beta_arguments(l: int, t1: int, t2: int, v: int) -> tuple[int, int]:
    # v = sigma1(i) + sigma2(i) ranges over [2, 2l]
    a = t1 + 2 * l - v + 1
    b = t2 - t1 - 2 * l - 1 + v
    if a < 1 or b < 1:
        raise ConsistencyError(
            f"Beta argument below one: B({a}, {b}) at l={l}, t1={t1}, t2={t2}"
        )
    return a, b


def _beta_log_table(l: int, t1: int, t2: int) -> np.ndarray:
    """log B at every achievable index sum, positioned at index v."""
    table = np.full(2 * l + 1, np.nan)
    for v in range(2, 2 * l + 1):
        a, b = _beta_arguments(l, t1, t2, v)
        table[v] = betaln(a, b)
    return table


def _enumerate_terms(l: int, t1: int, t2: int):
    """Reference (l!)^2 enumeration, one term per permutation pair."""
    perms, signs = _perms_and_signs(l)
    table = _beta_log_table(l, t1, t2)
    for p1, s1 in zip(perms, signs):
        for p2, s2 in zip(perms, signs):
            sums = p1 + p2
            yield SignedPermutationTerm(
                exponent=int(t1 + 2 * l - sums[-1]),
                sign=int(s1 * s2),
                log_beta_product=float(table[sums[:-1]].sum()),
            )


@lru_cache(maxsize=64)
def _merged_terms(l: int, t1: int, t2: int) -> tuple[SignedPermutationTerm, ...]:
    """Exponent-merged terms, streamed one outer permutation at a time.

    Exponents are integers in [t1, t1 + 2l - 2], so at most 2l - 1 merged
    terms survive; the signed weights per exponent are combined in
    log-magnitude/sign representation.
    """
    perms, signs = _perms_and_signs(l)
    table = _beta_log_table(l, t1, t2)
    n_perm = perms.shape[0]
    exponents = np.arange(t1, t1 + 2 * l - 1)
    row_logs = np.full((n_perm, exponents.size), -np.inf)
    row_signs = np.zeros((n_perm, exponents.size))
    for i in range(n_perm):
        sums = perms[i] + perms  # (l!, l)
        logb = table[sums[:, :-1]].sum(axis=1) if l > 1 else np.zeros(n_perm)
        term_exp = t1 + 2 * l - sums[:, -1]
        term_sign = signs[i] * signs
        for j, e in enumerate(exponents):
            mask = term_exp == e
            if mask.any():
                row_logs[i, j], row_signs[i, j] = logsumexp(
                    logb[mask], b=term_sign[mask].astype(float), return_sign=True
                )
    out = []
    for j, e in enumerate(exponents):
        log_total, sign_total = logsumexp(
            row_logs[:, j], b=row_signs[:, j], return_sign=True
        )
        if sign_total != 0.0 and np.isfinite(log_total):
            out.append(
                SignedPermutationTerm(
                    exponent=int(e),
                    sign=int(sign_total),
                    log_beta_product=float(log_total),
                )
            )
    return tuple(out)


def marginal_terms(
    params: LawParams, merge: bool = True
) -> tuple[SignedPermutationTerm, ...]:
    """Signed monomial table of the single-eigenvalue marginal.

    With ``merge=True`` (the default and what the evaluators consume),
    permutation pairs sharing an exponent are combined, which both bounds
    the term count by ``2l - 1`` and removes most of the cancellation.
    The unmerged table is the literal (l!)^2 enumeration.
    """
    if params.l > MAX_MARGINAL_ORDER:
        raise ComplexityError(
            f"marginal enumeration capped at l <= {MAX_MARGINAL_ORDER}, "
            f"got l = {params.l}"
        )
    if merge:
        return _merged_terms(params.l, params.t1, params.t2)
    if params.l > _MAX_UNMERGED_ORDER:
        raise ComplexityError(
            f"unmerged enumeration capped at l <= {_MAX_UNMERGED_ORDER}"
        )
    return tuple(_enumerate_terms(params.l, params.t1, params.t2))


def _kahan_total(parts: np.ndarray) -> np.ndarray:
    """Compensated sum over the leading axis."""
    total = np.zeros(parts.shape[1:])
    comp = np.zeros(parts.shape[1:])
    for row in parts:
        y = row - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _clamped(total: np.ndarray, scale: np.ndarray) -> np.ndarray:
    floor = -NEGATIVE_CLAMP * np.maximum(1.0, scale)
    if np.any(total < floor):
        worst = float(np.min(total))
        raise ConsistencyError(
            f"signed term sum produced {worst:.3e}, beyond cancellation residue"
        )
    return np.maximum(total, 0.0)


def _check_positive(w: np.ndarray) -> None:
    if w.size == 0:
        raise DimensionError("empty evaluation point")
    if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
        raise DimensionError("evaluation points must be finite and positive")


def joint_pdf(params: LawParams, w) -> float:
    """Joint density of the unordered nonzero eigenvalues.

    Symmetric in its arguments (the eigenvalue collection is exchangeable)
    and zero whenever two coordinates coincide, through the squared
    Vandermonde factor.
    """
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.size != params.l:
        raise DimensionError(f"expected {params.l} eigenvalues, got {w.size}")
    _check_positive(w)
    log_value = (
        params.log_m
        + params.t1 * np.sum(np.log(w))
        - params.t2 * np.sum(np.log1p(w))
    )
    for i in range(w.size):
        for j in range(i + 1, w.size):
            diff = abs(w[i] - w[j])
            if diff == 0.0:
                return 0.0
            log_value += 2.0 * math.log(diff)
    return float(np.exp(log_value))


def _marginal_eval(params: LawParams, terms, log_w, log_1pw, log_prefactor):
    parts = np.empty((len(terms),) + log_w.shape)
    for i, term in enumerate(terms):
        parts[i] = term.sign * np.exp(
            log_prefactor
            + params.log_m
            + term.log_beta_product
            + term.exponent * log_w
            - params.t2 * log_1pw
        )
    total = _kahan_total(parts)
    scale = np.max(np.abs(parts), axis=0) if len(terms) else np.zeros(log_w.shape)
    return _clamped(total, scale)


def marginal_pdf(params: LawParams, w):
    """Density of a single (uniformly chosen) eigenvalue at ``w``.

    Accepts a scalar or an array of positive points.  Tiny negative values
    from cancellation (within ``1e-12`` of the accumulation scale) clamp to
    zero; anything more negative raises.
    """
    w_arr = np.asarray(w, dtype=np.float64)
    scalar = w_arr.ndim == 0
    w_arr = np.atleast_1d(w_arr)
    _check_positive(w_arr)
    terms = marginal_terms(params)
    out = _marginal_eval(
        params, terms, np.log(w_arr), np.log1p(w_arr), 0.0
    )
    return float(out[0]) if scalar else out


def marginal_pdf_reciprocal(params: LawParams, w):
    """Marginal density through the reciprocal-argument identity.

    Evaluates ``M * w^{-2} * g'(1/w)`` with the shifted exponent
    ``t1' = n' - m'``; agrees with :func:`marginal_pdf` to within signed-sum
    roundoff, which makes the pair a mutual consistency check.
    """
    w_arr = np.asarray(w, dtype=np.float64)
    scalar = w_arr.ndim == 0
    w_arr = np.atleast_1d(w_arr)
    _check_positive(w_arr)
    if params.l > MAX_MARGINAL_ORDER:
        raise ComplexityError(
            f"marginal enumeration capped at l <= {MAX_MARGINAL_ORDER}"
        )
    terms = _merged_terms(params.l, params.t1_reciprocal, params.t2)
    log_w = np.log(w_arr)
    # at 1/w: log(1/w) = -log w and log(1 + 1/w) = log1p(w) - log w
    out = _marginal_eval(
        params, terms, -log_w, np.log1p(w_arr) - log_w, -2.0 * log_w
    )
    return float(out[0]) if scalar else out


def marginal_cdf(params: LawParams, w):
    """Distribution function of a single eigenvalue.

    Each monomial integrates in closed form under ``u = t/(1+t)`` to a
    regularized incomplete Beta value, so the CDF is the same signed sum
    with every term damped into [0, 1]; cross-checked against quadrature of
    the density in the test suite.
    """
    w_arr = np.asarray(w, dtype=np.float64)
    scalar = w_arr.ndim == 0
    w_arr = np.atleast_1d(w_arr).astype(np.float64)
    if np.any(~np.isfinite(w_arr) & ~np.isposinf(w_arr)) or np.any(w_arr < 0.0):
        raise DimensionError("CDF points must be nonnegative (inf allowed)")
    terms = marginal_terms(params)
    u = np.ones_like(w_arr)
    finite = np.isfinite(w_arr)
    u[finite] = w_arr[finite] / (1.0 + w_arr[finite])
    parts = np.empty((len(terms),) + w_arr.shape)
    for i, term in enumerate(terms):
        a = term.exponent + 1
        b = params.t2 - term.exponent - 1
        coef = term.sign * np.exp(
            params.log_m + term.log_beta_product + betaln(a, b)
        )
        parts[i] = coef * betainc(a, b, u)
    total = _kahan_total(parts)
    if np.any(total < -1e-9) or np.any(total > 1.0 + 1e-9):
        raise ConsistencyError("CDF accumulation left [0, 1] beyond roundoff")
    out = np.clip(total, 0.0, 1.0)
    return float(out[0]) if scalar else out
