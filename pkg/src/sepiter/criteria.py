"""Independent separability oracles and a seeded state zoo.

The positive-partial-transpose check is exact for 2x2 and 2x3 systems and
necessary-only beyond, which makes it the ground-truth referee for every
desk-scale cross-validation of the iterative solver.  All generators are
deterministic given their seed so failures replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    DensityMatrix,
    hermitize,
    min_eigenvalue,
    partial_transpose,
)
from .sampling import SeedStream, _haar_rows

PPT_ATOL = 1e-9


def ppt_min_eigenvalue(rho: DensityMatrix) -> float:
    """Smallest eigenvalue of the partial transpose.

    Nonnegative iff the state is separable for dims (2,2) and (2,3); in
    higher dimensions nonnegativity is necessary but not sufficient.
    """
    return min_eigenvalue(partial_transpose(rho))


def is_ppt(rho: DensityMatrix, atol: float = PPT_ATOL) -> bool:
    return ppt_min_eigenvalue(rho) >= -atol


def singlet() -> DensityMatrix:
    """The Bell singlet projector on dims (2, 2)."""
    psi = np.zeros(4, dtype=np.complex128)
    psi[1] = 1.0 / np.sqrt(2.0)
    psi[2] = -1.0 / np.sqrt(2.0)
    return DensityMatrix.from_matrix(np.outer(psi, psi.conj()), (2, 2))


def werner(w: float) -> DensityMatrix:
    """Singlet weight `w` mixed with white noise on dims (2, 2): separable
    exactly for w <= 1/3."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w!r}")
    mat = w * singlet().mat + (1.0 - w) * np.eye(4) / 4.0
    return DensityMatrix.from_matrix(mat, (2, 2))


def isotropic(d: int, alpha: float) -> DensityMatrix:
    """Maximally entangled weight `alpha` mixed with white noise on dims
    (d, d): separable exactly for alpha <= 1/(d+1)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {alpha!r}")
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[:: d + 1] = 1.0 / np.sqrt(d)
    mat = alpha * np.outer(psi, psi.conj()) + (1.0 - alpha) * np.eye(d * d) / (d * d)
    return DensityMatrix.from_matrix(mat, (d, d))


def pure_product(dims: tuple[int, int], seed: int) -> DensityMatrix:
    """Projector onto a Haar-random product vector."""
    gen = SeedStream(seed, 0).generator()
    phi = _haar_rows(gen, dims[0])[0]
    phi_prime = _haar_rows(gen, dims[1])[0]
    vec = np.kron(phi, phi_prime)
    return DensityMatrix.from_matrix(np.outer(vec, vec.conj()), dims)


def random_separable(dims: tuple[int, int], terms: int, seed: int) -> DensityMatrix:
    """Random convex combination of `terms` Haar-random product projectors;
    separable by construction."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    gen = SeedStream(seed, 0).generator()
    weights = gen.dirichlet(np.ones(terms))
    d = dims[0] * dims[1]
    mat = np.zeros((d, d), dtype=np.complex128)
    for c in weights:
        phi = _haar_rows(gen, dims[0])[0]
        phi_prime = _haar_rows(gen, dims[1])[0]
        vec = np.kron(phi, phi_prime)
        mat += c * np.outer(vec, vec.conj())
    return DensityMatrix.from_matrix(hermitize(mat, atol=1e-11), dims)


def random_full_rank(dims: tuple[int, int], seed: int) -> DensityMatrix:
    """Hilbert-Schmidt-style random state ``G G^H / tr``; full rank almost
    surely, with a stream-advancing retry on a degenerate draw."""
    d = dims[0] * dims[1]
    for attempt in range(16):
        gen = SeedStream(seed, attempt).generator()
        g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        mat = g @ g.conj().T
        mat /= np.trace(mat).real
        if float(np.linalg.eigvalsh(mat)[0]) > 0.0:
            return DensityMatrix.from_matrix(hermitize(mat, atol=1e-11), dims)
    raise RuntimeError(f"no full-rank draw after 16 attempts (seed {seed})")


_FAMILIES = {
    "werner": lambda p: werner(float(p.get("w", 0.0))),
    "isotropic": lambda p: isotropic(int(p.get("d", 2)), float(p.get("alpha", 0.0))),
    "bell": lambda p: singlet(),
    "pure_product": lambda p: pure_product(_dims_of(p), int(p.get("seed", 0))),
    "random_separable": lambda p: random_separable(
        _dims_of(p), int(p.get("terms", 4)), int(p.get("seed", 0))
    ),
    "random_full_rank": lambda p: random_full_rank(_dims_of(p), int(p.get("seed", 0))),
}


def _dims_of(p: dict) -> tuple[int, int]:
    dims = p.get("dims", (2, 2))
    return int(dims[0]), int(dims[1])


@dataclass(frozen=True)
class StateSpec:
    """A named state family plus its parameters; `build` materializes it."""

    family: str
    parameters: dict = field(default_factory=dict)

    def build(self) -> DensityMatrix:
        if self.family not in _FAMILIES:
            raise ValueError(
                f"unknown family {self.family!r}; choose from {sorted(_FAMILIES)}"
            )
        return _FAMILIES[self.family](self.parameters)


def family_names() -> list[str]:
    return sorted(_FAMILIES)
