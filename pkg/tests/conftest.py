import numpy as np
import pytest

from sepiter import HermitianOperator, make_sample_set, trace_norm
from sepiter.sampling import SeedStream

# One fixed suite seed; individual tests derive offsets from it so every
# statistical assertion is replayable.
SUITE_SEED = 20250809


@pytest.fixture(scope="session")
def set22():
    return make_sample_set(SUITE_SEED, 100_000, (2, 2))


@pytest.fixture(scope="session")
def set33():
    return make_sample_set(SUITE_SEED + 1, 100_000, (3, 3))


@pytest.fixture(scope="session")
def set21():
    return make_sample_set(SUITE_SEED + 2, 100_000, (2, 1))


@pytest.fixture(scope="session")
def set31():
    return make_sample_set(SUITE_SEED + 3, 100_000, (3, 1))


def random_hermitian(d: int, seed: int, unit_trace_norm: bool = True) -> HermitianOperator:
    gen = SeedStream(seed, 0).generator()
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    h = HermitianOperator((g + g.conj().T) / 2.0)
    if unit_trace_norm:
        h = HermitianOperator(h.mat / trace_norm(h))
    return h


def random_traceless_hermitian(d: int, seed: int) -> HermitianOperator:
    h = random_hermitian(d, seed, unit_trace_norm=False)
    m = h.mat - np.trace(h.mat) * np.eye(d) / d
    return HermitianOperator(m / trace_norm(HermitianOperator(m)))


@pytest.fixture(scope="session")
def rand_herm():
    return random_hermitian


@pytest.fixture(scope="session")
def rand_traceless():
    return random_traceless_hermitian
