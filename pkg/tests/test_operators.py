import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from sepiter import (
    DensityMatrix,
    HermitianOperator,
    UnitVector,
    expectation,
    hermitize,
    identity,
    maximally_mixed,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    tensor,
    trace_norm,
)
from sepiter.criteria import singlet
from sepiter.sampling import SeedStream, haar_unitary

seeds = st.integers(0, 2**32 - 1)


def diag_op(*entries):
    return HermitianOperator(np.diag(np.array(entries, dtype=complex)))


class TestTypes:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            HermitianOperator(np.zeros((2, 3)))

    def test_entries_immutable(self):
        op = identity(2)
        with pytest.raises(ValueError):
            op.mat[0, 0] = 5.0

    def test_density_requires_unit_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix.from_matrix(np.eye(4), (2, 2))

    def test_density_requires_psd(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix.from_matrix(np.diag([1.5, -0.5]).astype(complex), (2, 1))

    def test_density_dims_consistency(self):
        with pytest.raises(ValueError, match="dims"):
            DensityMatrix.from_matrix(np.eye(4) / 4, (2, 3))

    def test_unit_vector_norm(self):
        with pytest.raises(ValueError, match="norm"):
            UnitVector(np.array([1.0, 1.0]))

    def test_hermitize_rejects_large_drift(self):
        m = np.array([[0.0, 1e-3], [0.0, 0.0]])
        with pytest.raises(ValueError, match="drift"):
            hermitize(m)

    def test_hermitize_symmetrizes(self):
        m = np.array([[1.0, 1e-12j], [0.0, 2.0]], dtype=complex)
        out = hermitize(m)
        assert np.array_equal(out, out.conj().T)


class TestTensor:
    def test_identity_case(self):
        assert np.array_equal(tensor(identity(2), identity(2)).mat, np.eye(4))

    def test_basis_projectors(self):
        out = tensor(diag_op(1, 0), diag_op(0, 1))
        assert np.array_equal(out.mat, np.diag([0, 1, 0, 0]).astype(complex))

    def test_composite_index_convention(self):
        # i = i_A * n_B + i_B, asserted entry by entry
        a = random_hermitian(2, 5, unit_trace_norm=False)
        b = random_hermitian(3, 6, unit_trace_norm=False)
        out = tensor(a, b)
        for ia in range(2):
            for ib in range(3):
                for ja in range(2):
                    for jb in range(3):
                        assert out.mat[ia * 3 + ib, ja * 3 + jb] == pytest.approx(
                            a.mat[ia, ja] * b.mat[ib, jb]
                        )

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, na=st.sampled_from([1, 2, 3]), nb=st.sampled_from([1, 2, 3]))
    def test_trace_multiplicative(self, seed, na, nb):
        a = random_hermitian(na, seed, unit_trace_norm=False)
        b = random_hermitian(nb, seed + 1, unit_trace_norm=False)
        lhs = np.trace(tensor(a, b).mat)
        rhs = np.trace(a.mat) * np.trace(b.mat)
        assert lhs == pytest.approx(rhs, abs=1e-10)


class TestPartialTrace:
    def test_product_operator(self):
        a = random_hermitian(2, 11, unit_trace_norm=False)
        b = random_hermitian(2, 12, unit_trace_norm=False)
        out = partial_trace(tensor(a, b), (2, 2), "second")
        expected = np.trace(b.mat) * a.mat
        assert np.allclose(out.mat, expected, atol=1e-12)
        out_first = partial_trace(tensor(a, b), (2, 2), "first")
        assert np.allclose(out_first.mat, np.trace(a.mat) * b.mat, atol=1e-12)

    def test_identity(self):
        out = partial_trace(identity(4), (2, 2), "first")
        assert np.allclose(out.mat, 2.0 * np.eye(2))

    def test_bell_marginal(self):
        out = partial_trace(singlet().op, (2, 2), "first")
        assert np.allclose(out.mat, np.eye(2) / 2, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, which=st.sampled_from(["first", "second"]))
    def test_trace_preserved(self, seed, which):
        a = random_hermitian(6, seed, unit_trace_norm=False)
        out = partial_trace(a, (2, 3), which)
        assert np.trace(out.mat) == pytest.approx(np.trace(a.mat), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace(identity(4), (2, 3), "first")

    def test_bad_selector(self):
        with pytest.raises(ValueError, match="which"):
            partial_trace(identity(4), (2, 2), "both")


class TestPartialTranspose:
    def test_product_state(self):
        a = np.array([[0.6, 0.15 - 0.1j], [0.15 + 0.1j, 0.4]])
        rho_a = DensityMatrix.from_matrix(a, (2, 1))
        b = np.array([[0.75, 0.1 + 0.2j], [0.1 - 0.2j, 0.25]])
        rho_b = DensityMatrix.from_matrix(b, (2, 1))
        prod = DensityMatrix.from_matrix(np.kron(rho_a.mat, rho_b.mat), (2, 2))
        out = partial_transpose(prod)
        assert np.allclose(out.mat, np.kron(rho_a.mat, rho_b.mat.T), atol=1e-12)
        assert min_eigenvalue(out) >= -1e-12

    def test_identity_fixed(self):
        rho = maximally_mixed((2, 2))
        assert np.allclose(partial_transpose(rho).mat, np.eye(4) / 4)

    def test_bell_minimum_eigenvalue(self):
        # independent oracle: hand-built partially transposed singlet
        expected = np.zeros((4, 4), dtype=complex)
        expected[1, 1] = expected[2, 2] = 0.5
        expected[0, 3] = expected[3, 0] = -0.5
        out = partial_transpose(singlet())
        assert np.allclose(out.mat, expected, atol=1e-12)
        assert min_eigenvalue(out) == pytest.approx(-0.5, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds)
    def test_involution_and_norm_preservation(self, seed):
        from sepiter.criteria import random_separable

        rho = random_separable((2, 2), 6, seed)  # separable, so PT stays PSD
        pt = partial_transpose(rho)
        assert np.trace(pt.mat) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(pt.mat) == pytest.approx(np.linalg.norm(rho.mat), abs=1e-10)
        again = partial_transpose(DensityMatrix(pt, (2, 2)))
        assert np.allclose(again.mat, rho.mat, atol=1e-12)

    def test_single_party_rejected(self):
        rho = DensityMatrix.from_matrix(np.eye(2) / 2, (2, 1))
        with pytest.raises(ValueError, match="bipartite"):
            partial_transpose(rho)


class TestNormsAndExpectation:
    def test_trace_norm_identity(self):
        assert trace_norm(identity(5)) == pytest.approx(5.0)

    def test_trace_norm_known_spectrum(self):
        assert trace_norm(diag_op(1, -1)) == pytest.approx(2.0)

    def test_trace_norm_density(self):
        for seed in range(3):
            mat = random_hermitian(4, seed + 30, unit_trace_norm=False).mat
            rho_mat = mat @ mat + 1e-6 * np.eye(4)
            rho = DensityMatrix.from_matrix(rho_mat / np.trace(rho_mat).real, (2, 2))
            assert trace_norm(rho.op) == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_trace_norm_subadditive(self, seed):
        a = random_hermitian(3, seed, unit_trace_norm=False)
        b = random_hermitian(3, seed + 9, unit_trace_norm=False)
        total = trace_norm(HermitianOperator(a.mat + b.mat))
        assert total <= trace_norm(a) + trace_norm(b) + 1e-10

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_trace_norm_unitarily_invariant(self, seed):
        a = random_hermitian(3, seed, unit_trace_norm=False)
        u = haar_unitary(3, SeedStream(seed, 77))
        rotated = HermitianOperator(hermitize(u @ a.mat @ u.conj().T, atol=1e-9))
        assert trace_norm(rotated) == pytest.approx(trace_norm(a), abs=1e-9)

    def test_min_eigenvalue_cases(self):
        assert min_eigenvalue(HermitianOperator(np.eye(3) / 3)) == pytest.approx(1 / 3)
        assert min_eigenvalue(diag_op(0.7, 0.3)) == pytest.approx(0.3)

    def test_expectation_identity(self):
        v = UnitVector(np.array([0.6, 0.8j]))
        assert expectation(identity(2), v) == pytest.approx(1.0)

    def test_expectation_basis_vector(self):
        e1 = UnitVector(np.array([1.0, 0.0]))
        assert expectation(diag_op(1, 0), e1) == pytest.approx(1.0)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds)
    def test_expectation_within_eigenvalue_bounds(self, seed):
        a = random_hermitian(4, seed, unit_trace_norm=False)
        gen = SeedStream(seed, 3).generator()
        z = gen.standard_normal(8)
        v = z[0::2] + 1j * z[1::2]
        v = UnitVector(v / np.linalg.norm(v))
        val = expectation(a, v)
        evals = np.linalg.eigvalsh(a.mat)
        assert evals[0] - 1e-10 <= val <= evals[-1] + 1e-10

    def test_expectation_dim_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            expectation(identity(3), UnitVector(np.array([1.0, 0.0])))
