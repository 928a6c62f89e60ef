"""Continuous-ensemble representations and Monte Carlo operator estimators.

A density matrix is represented by a nonnegative density over unit vectors
whose weighted projector average reproduces it.  This module provides the
smeared spectral density (all combinatorial coefficients handled in log
space), its exact normalization via the Haar moment formula, Monte Carlo
reconstruction, the closed-form first-moment integrals the contraction
analysis relies on, and the exponential-weight image estimator driven by
the fixed-point solver.

Every Monte Carlo average reduces over fixed-width chunks whose partial
sums are combined in chunk-index order, so results are bit-identical for
any worker count (`SEPITER_THREADS`).
"""

from __future__ import annotations

import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .operators import DensityMatrix, HermitianOperator, UnitVector, hermitize, identity, partial_trace, tensor
from .params import ln_smear_coeff
from .sampling import REDUCTION_CHUNK, SampleSet

# Abort exponentiation this far below the IEEE double overflow threshold.
EXPONENT_CAP = math.log(sys.float_info.max) - 10.0


class FloatRangeError(RuntimeError):
    """A log-space quantity left the representable float range."""

    def __init__(self, message: str, extreme: float):
        super().__init__(message)
        self.extreme = extreme


def worker_count() -> int:
    """Worker threads for chunked reductions (env ``SEPITER_THREADS``)."""
    raw = os.environ.get("SEPITER_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SEPITER_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def choose_smear_order(p0: float, n: int) -> int:
    """Smallest valid smearing order for a spectrum with least eigenvalue p0.

    Returns the smallest integer ``K >= max(1, 1/(n p0) - 1)``; the result
    satisfies ``(K+1) n >= 1/p0``, which keeps the smeared density
    nonnegative everywhere.  Smaller orders mean lower-degree overlap powers
    and therefore lower Monte Carlo variance, so the minimum is preferred.
    """
    if p0 <= 0.0:
        raise ValueError("p0 must be positive; regularize rank-deficient states first")
    if n < 1:
        raise ValueError("n must be >= 1")
    if p0 > 1.0 / n + 1e-12:
        raise ValueError(f"p0 ={p0!r} exceeds 1/n; not a least eigenvalue")
    k = max(1, math.ceil(1.0 / (n * p0) - 1.0 - 1e-12))
    while (k + 1) * n < 1.0 / p0:
        k += 1
    return k


@dataclass(frozen=True, eq=False)
class SmearedSpectrum:
    """Spectral data prepared for the smeared continuous representation."""

    n: int
    smear_order: int
    probs: np.ndarray
    basis: np.ndarray  # columns are the eigenvectors
    _offset: float = field(init=False)  # 1/((K+1) n)

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).reshape(-1)
        b = np.array(self.basis, dtype=np.complex128)
        if p.size != self.n or b.shape != (self.n, self.n):
            raise ValueError("spectrum shape inconsistent with dimension")
        if np.any(p < -1e-12):
            raise ValueError("eigenvalues must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-10:
            raise ValueError("eigenvalues must sum to 1")
        gram = b.conj().T @ b
        if float(np.max(np.abs(gram - np.eye(self.n)))) > 1e-10:
            raise ValueError("eigenvectors must be orthonormal")
        p0 = float(p.min())
        if p0 <= 0.0:
            raise ValueError("spectrum must be strictly positive (full rank); regularize first")
        if (self.smear_order + 1) * self.n < 1.0 / p0:
            raise ValueError(
                f"smearing order {self.smear_order} violates the positivity bound "
                f"(K+1)n >= 1/p0 for p0 = {p0!r}; need at least {choose_smear_order(p0, self.n)}"
            )
        p.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "_offset", 1.0 / ((self.smear_order + 1) * self.n))

    @property
    def ln_coeff(self) -> float:
        return ln_smear_coeff(self.smear_order, self.n)

    def coefficients(self) -> np.ndarray:
        """Per-eigenvector weights ``p_k - 1/((K+1)n)``, all nonnegative."""
        return self.probs - self._offset


def smeared_from_density(rho: DensityMatrix, smear_order: int | None = None) -> SmearedSpectrum:
    """Eigendecompose a full-rank single-party state into a SmearedSpectrum."""
    if rho.dims[1] != 1:
        raise ValueError("smeared spectra are single-party; decompose factors first")
    evals, evecs = np.linalg.eigh(rho.mat)
    p0 = float(evals[0])
    if p0 <= 0.0:
        raise ValueError("state is rank deficient; regularize first")
    n = rho.dim
    if smear_order is None:
        smear_order = choose_smear_order(p0, n)
    return SmearedSpectrum(n=n, smear_order=smear_order, probs=evals, basis=evecs)


def haar_moment_log(m: int, n: int) -> float:
    """Log of the overlap moment ``E |<e|phi>|^(2m) = m! (n-1)! / (m+n-1)!``
    under the Haar measure on the unit sphere of C^n."""
    return math.lgamma(m + 1) + math.lgamma(n) - math.lgamma(m + n)


def ln_mu_values(spec: SmearedSpectrum, rows: np.ndarray) -> np.ndarray:
    """Log-density of the smeared spectral measure at each row vector.

    Rows must be unit vectors in C^n.  All arithmetic stays in log space:
    the combinatorial coefficient joins the overlap powers before a single
    final logsumexp, so intermediate factors never overflow.
    """
    coeff = spec.coefficients()
    overlap_sq = np.abs(rows @ spec.basis.conj()) ** 2  # (N, n)
    power = 2 * spec.smear_order * spec.n
    with np.errstate(divide="ignore"):
        ln_terms = np.where(
            coeff[None, :] > 0.0,
            np.log(np.where(coeff[None, :] > 0.0, coeff[None, :], 1.0))
            + 0.5 * power * np.log(overlap_sq),
            -np.inf,
        )
    out = spec.ln_coeff + logsumexp(ln_terms, axis=1)
    top = float(np.max(out)) if out.size else -math.inf
    if top > EXPONENT_CAP:
        raise FloatRangeError(
            f"smeared density exceeds the float range (ln mu = {top:.1f}); "
            f"the smearing order {spec.smear_order} is too large to exponentiate",
            top,
        )
    return out


def mu_smeared(spec: SmearedSpectrum, phi: UnitVector) -> float:
    """Smeared spectral density at one unit vector (nonnegative)."""
    if phi.dim != spec.n:
        raise ValueError(f"dimension mismatch: spectrum {spec.n}, vector {phi.dim}")
    return float(np.exp(ln_mu_values(spec, phi.vec[None, :]))[0])


def closed_form_normalization(spec: SmearedSpectrum) -> float:
    """The exact sphere integral of the smeared density, via the moment
    formula.  Telescoping makes this 1 up to log-gamma rounding."""
    ln_moment = haar_moment_log(spec.smear_order * spec.n, spec.n)
    coeff_sum = float(np.sum(spec.coefficients()))
    return math.exp(spec.ln_coeff + ln_moment + math.log(coeff_sum))


def _chunk_slices(count: int):
    return [slice(lo, min(lo + REDUCTION_CHUNK, count)) for lo in range(0, count, REDUCTION_CHUNK)]


def _weighted_projector_mean(rows: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Mean of ``w_i |v_i><v_i|`` plus a trace-norm-scale noise floor.

    Partial sums are accumulated per fixed-width chunk and combined in chunk
    order; with ``SEPITER_THREADS > 1`` chunks are evaluated concurrently
    but the combination order (hence the result, bitwise) is unchanged.
    The noise floor is ``sqrt(d) * ||SE||_F`` with SE the per-entry standard
    error of the mean: an upper-scale one-sigma figure for the trace-norm
    error, since ``||E||_1 <= sqrt(d) ||E||_F``.
    """
    count, d = rows.shape
    slices = _chunk_slices(count)

    def partial(sl):
        v = rows[sl]
        w = weights[sl]
        a = v.real**2 + v.imag**2
        s1 = np.einsum("i,id,ie->de", w, v, v.conj())
        s2 = np.einsum("i,id,ie->de", w * w, a, a)
        return s1, s2

    threads = worker_count()
    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(partial, slices))
    else:
        partials = [partial(sl) for sl in slices]

    sum1 = np.zeros((d, d), dtype=np.complex128)
    sum2 = np.zeros((d, d), dtype=np.float64)
    for s1, s2 in partials:
        sum1 += s1
        sum2 += s2
    mean = sum1 / count
    var = np.maximum(sum2 / count - (mean.real**2 + mean.imag**2), 0.0)
    noise_floor = math.sqrt(d) * math.sqrt(float(np.sum(var / count)))
    return mean, noise_floor


def _sandwich_values(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Real quadratic forms <v_i|X|v_i> for Hermitian X, one per row."""
    return np.einsum("id,de,ie->i", rows.conj(), x, rows).real


def reconstruct(
    rho: DensityMatrix, smear_order: int, s: SampleSet
) -> tuple[HermitianOperator, float]:
    """Monte Carlo reconstruction of a full-rank single-party state from its
    smeared continuous ensemble; returns (estimate, noise floor)."""
    if rho.dims[1] != 1:
        raise ValueError("reconstruct is single-party; apply factor-wise for products")
    if s.dims[0] != rho.dim:
        raise ValueError(f"sample set dims {s.dims} do not match state dimension {rho.dim}")
    spec = smeared_from_density(rho, smear_order)
    weights = np.exp(ln_mu_values(spec, s.phi))
    mean, noise_floor = _weighted_projector_mean(s.phi, weights)
    return HermitianOperator(hermitize(mean)), noise_floor


def moment_single_closed(a: HermitianOperator) -> HermitianOperator:
    """Exact sphere integral of ``<phi|A|phi> |phi><phi|``:
    ``(A + I tr A) / (n (n+1))``."""
    n = a.dim
    out = (a.mat + np.trace(a.mat) * np.eye(n)) / (n * (n + 1))
    return HermitianOperator(hermitize(out))


def moment_bipartite_closed(y: HermitianOperator, dims: tuple[int, int]) -> HermitianOperator:
    """Exact torus integral of ``<pp'|Y|pp'> |pp'><pp'|`` for square dims:
    ``(Y + I (x) tr_I Y + tr_II Y (x) I + tr Y * I) / (n^2 (n+1)^2)``."""
    n_a, n_b = dims
    if n_a != n_b:
        raise ValueError(f"square bipartite dims required, got {dims}")
    n = n_a
    eye = identity(n)
    t_first = partial_trace(y, dims, "first")  # operator on the second factor
    t_second = partial_trace(y, dims, "second")  # operator on the first factor
    out = (
        y.mat
        + tensor(eye, t_first).mat
        + tensor(t_second, eye).mat
        + np.trace(y.mat) * np.eye(n * n)
    ) / (n**2 * (n + 1) ** 2)
    return HermitianOperator(hermitize(out))


def estimate_image(x: HermitianOperator, s: SampleSet) -> tuple[HermitianOperator, float]:
    """Monte Carlo estimate of the exponential-weight image
    ``avg_i exp(<v_i|X|v_i>) |v_i><v_i|`` over the sample set's product
    vectors; returns (estimate, noise floor).

    Raises FloatRangeError before exponentiating if any sandwich value
    exceeds `EXPONENT_CAP` — a runaway iterate must fail loudly rather than
    saturate silently.
    """
    d = s.dims[0] * s.dims[1]
    if x.dim != d:
        raise ValueError(f"operator dimension {x.dim} does not match sample dims {s.dims}")
    q = _sandwich_values(s.joint, x.mat)
    top = float(np.max(q))
    if top > EXPONENT_CAP:
        raise FloatRangeError(
            f"exponent {top:.1f} exceeds the float-safe cap {EXPONENT_CAP:.1f}; "
            "the iterate has left any reasonable domain",
            top,
        )
    mean, noise_floor = _weighted_projector_mean(s.joint, np.exp(q))
    return HermitianOperator(hermitize(mean)), noise_floor


def mc_moment_single(a: HermitianOperator, s: SampleSet) -> tuple[HermitianOperator, float]:
    """Monte Carlo counterpart of `moment_single_closed` over the set's
    first-factor vectors (use a single-party sample set, dims (n, 1))."""
    if s.dims[0] != a.dim:
        raise ValueError(f"sample set dims {s.dims} do not match operator dimension {a.dim}")
    weights = _sandwich_values(s.phi, a.mat)
    mean, noise_floor = _weighted_projector_mean(s.phi, weights)
    return HermitianOperator(hermitize(mean)), noise_floor


def mc_moment_bipartite(y: HermitianOperator, s: SampleSet) -> tuple[HermitianOperator, float]:
    """Monte Carlo counterpart of `moment_bipartite_closed` over the set's
    product vectors."""
    d = s.dims[0] * s.dims[1]
    if y.dim != d:
        raise ValueError(f"operator dimension {y.dim} does not match sample dims {s.dims}")
    weights = _sandwich_values(s.joint, y.mat)
    mean, noise_floor = _weighted_projector_mean(s.joint, weights)
    return HermitianOperator(hermitize(mean)), noise_floor
