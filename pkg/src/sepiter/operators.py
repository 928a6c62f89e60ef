"""Dense complex operator algebra on small Hilbert spaces.

Everything here works on tiny dense matrices (composite dimension <= ~64),
so exact symmetric eigensolvers are always affordable and no sparse or
iterative machinery is used.  The composite index convention for bipartite
operators is ``i = i_A * n_B + i_B`` (row-major over the second factor),
which matches ``numpy.kron`` and the on-disk state format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Construction-time tolerance for conjugate symmetry, per entry.
HERMITIAN_ATOL = 1e-12
# Allowed Hermiticity drift after floating-point accumulations, before
# re-symmetrization.
ACCUMULATION_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
UNIT_NORM_ATOL = 1e-12


def hermitize(mat: np.ndarray, atol: float = ACCUMULATION_ATOL) -> np.ndarray:
    """Re-establish exact conjugate symmetry after an accumulation.

    Asserts the drift ``max |M - M^H|`` is below `atol` and returns
    ``(M + M^H) / 2``.  Raises ValueError when the input has drifted too far
    to plausibly be a rounding artifact.
    """
    m = np.asarray(mat, dtype=np.complex128)
    drift = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if drift > atol:
        raise ValueError(f"Hermiticity drift {drift:.3e} exceeds {atol:.1e}")
    return (m + m.conj().T) / 2.0


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A dense self-adjoint operator; immutable after construction."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("dimension must be >= 1")
        drift = float(np.max(np.abs(m - m.conj().T)))
        if drift > HERMITIAN_ATOL:
            raise ValueError(
                f"not Hermitian: max |M - M^H| = {drift:.3e} > {HERMITIAN_ATOL:.1e}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class UnitVector:
    """A normalized state vector."""

    vec: np.ndarray

    def __post_init__(self):
        v = np.array(self.vec, dtype=np.complex128).reshape(-1)
        if v.size < 1:
            raise ValueError("dimension must be >= 1")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_NORM_ATOL:
            raise ValueError(f"norm {norm!r} is not 1 within {UNIT_NORM_ATOL:.1e}")
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    @property
    def dim(self) -> int:
        return self.vec.size


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A unit-trace positive semidefinite operator with bipartite dims.

    ``dims = (n_A, n_B)`` with ``n_A * n_B`` equal to the operator dimension;
    single-party states use ``n_B = 1``.
    """

    op: HermitianOperator
    dims: tuple[int, int]

    def __post_init__(self):
        n_a, n_b = int(self.dims[0]), int(self.dims[1])
        if n_a < 1 or n_b < 1:
            raise ValueError(f"dims must be positive, got {self.dims}")
        if n_a * n_b != self.op.dim:
            raise ValueError(
                f"dims {self.dims} inconsistent with operator dimension {self.op.dim}"
            )
        object.__setattr__(self, "dims", (n_a, n_b))
        tr = complex(np.trace(self.op.mat))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"trace {tr!r} is not 1 within {TRACE_ATOL:.1e}")
        lo = float(np.linalg.eigvalsh(self.op.mat)[0])
        if lo < -PSD_ATOL:
            raise ValueError(f"minimum eigenvalue {lo!r} below -{PSD_ATOL:.1e}")

    @classmethod
    def from_matrix(cls, mat: np.ndarray, dims: tuple[int, int]) -> "DensityMatrix":
        return cls(HermitianOperator(mat), dims)

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


def identity(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim, dtype=np.complex128))


def maximally_mixed(dims: tuple[int, int]) -> DensityMatrix:
    d = dims[0] * dims[1]
    return DensityMatrix.from_matrix(np.eye(d, dtype=np.complex128) / d, dims)


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product; composite index ``i = i_A * b.dim + i_B``."""
    return HermitianOperator(np.kron(a.mat, b.mat))


def _split(mat: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    n_a, n_b = dims
    if n_a * n_b != mat.shape[0]:
        raise ValueError(f"dims {dims} inconsistent with matrix shape {mat.shape}")
    return mat.reshape(n_a, n_b, n_a, n_b)


def partial_trace(
    a: HermitianOperator, dims: tuple[int, int], which: str
) -> HermitianOperator:
    """Trace out one factor of a bipartite operator.

    `which` names the subsystem being traced out: ``"first"`` returns an
    operator on the second factor, ``"second"`` on the first.  The total
    trace is preserved.
    """
    r = _split(a.mat, dims)
    if which == "first":
        out = np.einsum("kikj->ij", r)
    elif which == "second":
        out = np.einsum("ikjk->ij", r)
    else:
        raise ValueError(f"which must be 'first' or 'second', got {which!r}")
    return HermitianOperator(hermitize(out))


def partial_transpose(rho: DensityMatrix) -> HermitianOperator:
    """Transpose the second factor's indices; requires n_B >= 2."""
    if rho.dims[1] < 2:
        raise ValueError("partial transpose needs a genuinely bipartite state (n_B >= 2)")
    r = _split(rho.mat, rho.dims)
    out = np.einsum("abcd->adcb", r).reshape(rho.dim, rho.dim)
    return HermitianOperator(hermitize(out))


def trace_norm(a: HermitianOperator) -> float:
    """Sum of absolute eigenvalues (the L1 / nuclear norm for Hermitians)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(a.mat))))


def trace_norm_of(mat: np.ndarray) -> float:
    """`trace_norm` for a raw array that is Hermitian up to accumulation drift."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(mat)))))


def min_eigenvalue(a: HermitianOperator) -> float:
    return float(np.linalg.eigvalsh(a.mat)[0])


def expectation(a: HermitianOperator, v: UnitVector) -> float:
    """Real sandwich value <v|A|v>; the imaginary residue must be negligible."""
    if a.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {a.dim}, vector {v.dim}")
    val = complex(np.vdot(v.vec, a.mat @ v.vec))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has non-real residue {val.imag:.3e}")
    return float(val.real)
