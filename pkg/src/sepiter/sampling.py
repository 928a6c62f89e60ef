"""Reproducible Haar sampling of unit vectors and product-state pairs.

Streams are counter-based: every sample is a pure function of
``(seed, stream_id)`` through a Philox generator keyed by that pair, so a
sample set can be partitioned across workers arbitrarily and reassembled
bit-identically.  Averages over a sample set must reduce in fixed chunk
order (see `ensemble`); the chunk width is `REDUCTION_CHUNK`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import UnitVector

# Fixed chunk width for all deterministic partial-sum reductions over a
# sample set.  Must not depend on worker count.
REDUCTION_CHUNK = 8192

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, k: int) -> int:
    """Derive an independent 64-bit seed from (seed, k) via splitmix64."""
    x = (int(seed) + (int(k) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass(frozen=True)
class SeedStream:
    """Identifies one reproducible random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _haar_rows(gen: np.random.Generator, n: int, count: int = 1) -> np.ndarray:
    """Draw `count` Haar-uniform unit vectors in C^n from one generator.

    Each vector consumes exactly one ``standard_normal(2n)`` call; real and
    imaginary parts interleave.  Renormalization retries on an (essentially
    impossible) zero draw keep the map total.
    """
    z = gen.standard_normal((count, 2 * n))
    v = z[:, 0::2] + 1j * z[:, 1::2]
    norms = np.linalg.norm(v, axis=1)
    while np.any(norms < 1e-150):
        bad = np.flatnonzero(norms < 1e-150)
        z = gen.standard_normal((bad.size, 2 * n))
        v[bad] = z[:, 0::2] + 1j * z[:, 1::2]
        norms[bad] = np.linalg.norm(v[bad], axis=1)
    return v / norms[:, None]


def haar_unit_vector(n: int, stream: SeedStream) -> UnitVector:
    """One Haar-uniform unit vector in C^n (Gaussian draw, normalized)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return UnitVector(_haar_rows(stream.generator(), n)[0])


def haar_unitary(n: int, stream: SeedStream) -> np.ndarray:
    """Haar-uniform n x n unitary (QR of a complex Ginibre matrix)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    gen = stream.generator()
    g = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True, eq=False)
class ProductSample:
    """One point on the torus: a pair of independent Haar factors."""

    phi: UnitVector
    phi_prime: UnitVector


def torus_sample(dims: tuple[int, int], stream: SeedStream) -> ProductSample:
    """Draw both factors from the same stream, first factor first.

    The first factor consumes the identical draws as
    ``haar_unit_vector(dims[0], stream)`` would.
    """
    n_a, n_b = dims
    if n_a < 1 or n_b < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    gen = stream.generator()
    phi = _haar_rows(gen, n_a)[0]
    phi_prime = _haar_rows(gen, n_b)[0]
    return ProductSample(UnitVector(phi), UnitVector(phi_prime))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """A deterministic, regenerable batch of product samples.

    ``phi[i]`` and ``phi_prime[i]`` reproduce ``torus_sample(dims,
    SeedStream(seed, i))`` bit-exactly; `joint` holds the Kronecker products
    ``phi[i] (x) phi_prime[i]`` used by the operator estimators.
    """

    seed: int
    count: int
    dims: tuple[int, int]
    phi: np.ndarray = field(repr=False)
    phi_prime: np.ndarray = field(repr=False)
    joint: np.ndarray = field(repr=False)

    def sample(self, i: int) -> ProductSample:
        return ProductSample(UnitVector(self.phi[i]), UnitVector(self.phi_prime[i]))

    def __len__(self) -> int:
        return self.count

    def __iter__(self):
        return (self.sample(i) for i in range(self.count))


def make_sample_set(seed: int, count: int, dims: tuple[int, int]) -> SampleSet:
    """Generate `count` product samples, sample i from stream_id = i.

    One Philox bit generator is reused with its state reset per index, which
    is bit-identical to constructing a fresh ``SeedStream(seed, i)``
    generator for each sample but roughly 20x faster.
    """
    n_a, n_b = int(dims[0]), int(dims[1])
    if count < 1:
        raise ValueError("count must be >= 1")
    if n_a < 1 or n_b < 1:
        raise ValueError(f"dims must be positive, got {dims}")

    # Tight loop: only the raw Gaussian draws happen per sample; splitting,
    # complexification and normalization are vectorized afterwards.  A batched
    # standard_normal call consumes the stream identically to the split calls
    # in `torus_sample`, so per-index equality is preserved.
    m = 2 * (n_a + n_b)
    raw = np.empty((count, m))
    bitgen = np.random.Philox(key=np.array([seed & _MASK64, 0], dtype=np.uint64))
    gen = np.random.Generator(bitgen)
    template = bitgen.state
    key_word = template["state"]["key"]
    for i in range(count):
        key_word[1] = i
        bitgen.state = template
        raw[i] = gen.standard_normal(m)

    phi = raw[:, 0 : 2 * n_a : 2] + 1j * raw[:, 1 : 2 * n_a : 2]
    phi_prime = raw[:, 2 * n_a :: 2] + 1j * raw[:, 2 * n_a + 1 :: 2]
    norms_a = np.linalg.norm(phi, axis=1)
    norms_b = np.linalg.norm(phi_prime, axis=1)
    bad = np.flatnonzero((norms_a < 1e-150) | (norms_b < 1e-150))
    for i in bad:  # formal guard; never taken in practice
        resampled = torus_sample((n_a, n_b), SeedStream(seed, int(i)))
        phi[i] = resampled.phi.vec
        phi_prime[i] = resampled.phi_prime.vec
        norms_a[i] = norms_b[i] = 1.0
    phi /= norms_a[:, None]
    phi_prime /= norms_b[:, None]

    joint = np.einsum("ia,ib->iab", phi, phi_prime).reshape(count, n_a * n_b)
    for arr in (phi, phi_prime, joint):
        arr.setflags(write=False)
    return SampleSet(seed=int(seed), count=count, dims=(n_a, n_b),
                     phi=phi, phi_prime=phi_prime, joint=joint)
