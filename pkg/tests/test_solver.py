import math

import numpy as np
import pytest

from conftest import SUITE_SEED, random_traceless_hermitian
from sepiter import DensityMatrix, HermitianOperator, maximally_mixed, make_sample_set
from sepiter.criteria import pure_product, random_separable, werner
from sepiter.ensemble import choose_smear_order, moment_bipartite_closed
from sepiter.operators import min_eigenvalue, trace_norm, trace_norm_of
from sepiter.params import ln_range_coeff_at, ln_smear_coeff
from sepiter.sampling import derive_seed
from sepiter.solver import (
    ENTANGLED,
    INCONCLUSIVE,
    SEPARABLE,
    WARN_EXPONENT_OVERFLOW,
    WARN_KAPPA_BELOW_NOISE,
    PaperModeRefusal,
    SolverConfig,
    default_practical_lambda,
    fixed_point_step,
    regularize,
    revalidate,
    run,
)

FAST = dict(sample_count=20_000, seed=SUITE_SEED)


class TestRegularize:
    def test_maximally_mixed_fixed_point(self):
        rho = maximally_mixed((2, 2))
        out = regularize(rho, 0.3)
        assert np.allclose(out.mat, rho.mat, atol=1e-15)

    def test_pure_product_floor(self):
        out = regularize(pure_product((2, 2), 1), 0.1)
        assert min_eigenvalue(out.op) == pytest.approx(0.025, abs=1e-12)

    def test_trace_preserved(self):
        for seed in range(3):
            rho = random_separable((2, 2), 5, seed)
            out = regularize(rho, 0.05)
            assert np.trace(out.mat).real == pytest.approx(1.0, abs=1e-12)

    def test_kappa_validated(self):
        with pytest.raises(ValueError):
            regularize(maximally_mixed((2, 2)), 0.0)


class TestDefaultLambda:
    def test_values(self):
        assert default_practical_lambda(2) == 18.0
        assert default_practical_lambda(3) == 72.0

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_linearized_step_contracts_traceless_directions(self, seed):
        # exact closed-form step at rho = I/n**2 from X = eps*Y, traceless Y
        n = 2
        y = random_traceless_hermitian(n * n, 1000 + seed)
        lam = default_practical_lambda(n)
        image = y.mat - lam * moment_bipartite_closed(y, (n, n)).mat
        assert trace_norm_of(image) < trace_norm(y)


class TestFixedPointStep:
    def test_zero_lambda_is_identity(self, set22):
        x = HermitianOperator(0.2 * random_traceless_hermitian(4, 5).mat)
        out, residual, noise_floor = fixed_point_step(x, maximally_mixed((2, 2)), 0.0, set22)
        assert np.array_equal(out.mat, x.mat)

    def test_zero_start_stays_near_zero_for_mixed_state(self, set22):
        zero = HermitianOperator(np.zeros((4, 4)))
        lam = 18.0
        out, residual, noise_floor = fixed_point_step(zero, maximally_mixed((2, 2)), lam, set22)
        assert residual <= 3 * noise_floor  # pure Monte Carlo noise at the fixed point
        assert trace_norm(out) <= lam * residual + 1e-12

    def test_deterministic(self, set22):
        x = HermitianOperator(0.1 * random_traceless_hermitian(4, 6).mat)
        rho = werner(0.2)
        a = fixed_point_step(x, rho, 2.0, set22)
        b = fixed_point_step(x, rho, 2.0, set22)
        assert np.array_equal(a[0].mat, b[0].mat)
        assert a[1:] == b[1:]


class TestRunTermination:
    def test_maximally_mixed_immediate(self):
        res = run(maximally_mixed((2, 2)),
                  SolverConfig(kappa=0.05, sample_count=100_000, seed=SUITE_SEED))
        v = res.verdict
        assert v.outcome == SEPARABLE
        assert v.steps_used <= 3
        assert v.final_x_norm <= 0.5

    def test_separable_werner_with_ppt_agreement(self):
        res = run(werner(0.2), SolverConfig(kappa=0.05, max_iters=200, **FAST))
        assert res.verdict.outcome == SEPARABLE
        assert res.verdict.final_residual <= 0.05

    def test_entangled_werner_never_separable(self):
        res = run(werner(0.8), SolverConfig(kappa=0.05, max_iters=60, **FAST))
        assert res.verdict.outcome != SEPARABLE

    def test_bound_escape_gives_entangled_signal(self):
        res = run(werner(0.8), SolverConfig(kappa=0.01, bound=5.0, max_iters=60, **FAST))
        assert res.verdict.outcome == ENTANGLED
        assert any(r.x_norm > 5.0 for r in res.trace)

    def test_budget_exhaustion_is_inconclusive(self):
        res = run(werner(0.9), SolverConfig(kappa=0.01, max_iters=5, **FAST))
        assert res.verdict.outcome == INCONCLUSIVE
        assert res.verdict.steps_used == 5

    def test_exponent_overflow_annotated(self):
        cfg = SolverConfig(kappa=0.01, lam=1e7, adaptive=False, max_iters=10, **FAST)
        res = run(werner(0.8), cfg)
        assert res.verdict.outcome == ENTANGLED
        assert WARN_EXPONENT_OVERFLOW in res.verdict.warnings

    def test_kappa_below_noise_floor_warning(self):
        res = run(maximally_mixed((2, 2)),
                  SolverConfig(kappa=0.006, sample_count=100_000, seed=SUITE_SEED))
        v = res.verdict
        assert v.outcome == SEPARABLE
        assert v.final_residual <= 0.006
        assert (WARN_KAPPA_BELOW_NOISE in v.warnings) == (0.006 < 2 * v.noise_floor)

    def test_rectangular_dims_rejected(self):
        rho = DensityMatrix.from_matrix(np.eye(6) / 6, (2, 3))
        with pytest.raises(ValueError, match="square"):
            run(rho, SolverConfig(kappa=0.1, **FAST))


class TestPaperMode:
    def test_refuses_on_underflow(self):
        cfg = SolverConfig(kappa=0.1, mode="paper", **FAST)
        with pytest.raises(PaperModeRefusal, match="underflows"):
            run(werner(0.2), cfg)

    def test_refuses_rank_deficient(self):
        cfg = SolverConfig(kappa=0.99, mode="paper", **FAST)
        with pytest.raises(PaperModeRefusal, match="regularize"):
            run(pure_product((2, 2), 3), cfg)

    def test_runs_at_loose_tolerance_with_analytic_budget(self):
        # kappa = 0.99 keeps ln(lambda) representable; the run uses the
        # analytic step count as its budget
        cfg = SolverConfig(kappa=0.99, mode="paper", max_iters=10, **FAST)
        res = run(regularize(werner(0.8), 0.01), cfg)
        assert res.params.lambda_underflows is False
        assert res.verdict.steps_used <= min(10, res.params.n_steps)

    def test_maximally_mixed_trivially_within_loose_tolerance(self):
        cfg = SolverConfig(kappa=0.99, mode="paper", **FAST)
        res = run(maximally_mixed((2, 2)), cfg)
        assert res.verdict.outcome == SEPARABLE


class TestDeterminismAndAdaptivity:
    def test_bit_identical_reruns(self):
        cfg = SolverConfig(kappa=0.03, max_iters=40, **FAST)
        a = run(werner(0.2), cfg)
        b = run(werner(0.2), cfg)
        assert a.verdict == b.verdict
        assert len(a.trace) == len(b.trace)
        for ra, rb in zip(a.trace, b.trace):
            assert ra == rb  # dataclass equality over raw floats: bitwise
        assert np.array_equal(a.final_x.mat, b.final_x.mat)

    def test_running_minimum_non_increasing(self):
        res = run(werner(0.25), SolverConfig(kappa=0.02, max_iters=120, **FAST))
        best = math.inf
        mins = []
        for row in res.trace:
            best = min(best, row.residual)
            mins.append(best)
        assert all(a >= b for a, b in zip(mins, mins[1:]))

    def test_lambda_only_ever_halves(self):
        res = run(werner(0.3), SolverConfig(kappa=0.02, max_iters=120, **FAST))
        lams = [r.lambda_used for r in res.trace]
        assert lams[0] == 18.0
        for prev, cur in zip(lams, lams[1:]):
            assert cur == prev or cur == prev / 2 or cur == prev / 4
        assert any(cur < prev for prev, cur in zip(lams, lams[1:]))

    def test_non_adaptive_keeps_lambda(self):
        cfg = SolverConfig(kappa=0.02, adaptive=False, lam=4.5, max_iters=50, **FAST)
        res = run(werner(0.1), cfg)
        assert all(r.lambda_used == 4.5 for r in res.trace)
        assert res.verdict.outcome == SEPARABLE

    def test_sink_receives_every_row(self):
        rows = []
        res = run(werner(0.2), SolverConfig(kappa=0.05, max_iters=60, **FAST), sink=rows.append)
        assert rows == list(res.trace)


class TestFixedPointConsistency:
    def test_revalidation_with_fresh_samples(self):
        cfg = SolverConfig(kappa=0.05, sample_count=50_000, max_iters=120, seed=SUITE_SEED)
        res = run(werner(0.2), cfg)
        assert res.verdict.outcome == SEPARABLE
        residual, noise_floor = revalidate(
            werner(0.2), res.final_x, cfg.sample_count, derive_seed(cfg.seed, 9999)
        )
        assert residual <= cfg.kappa + 3 * noise_floor

    def test_weight_domain_consistency(self):
        # accepted iterate's sampled log-weights stay inside the analytic
        # band +-2(ln C_smear + ln C_range) evaluated at the true p0
        kappa = 0.05
        rho = regularize(random_separable((2, 2), 8, 5), kappa)
        cfg = SolverConfig(kappa=kappa, sample_count=50_000, max_iters=200, seed=SUITE_SEED)
        res = run(rho, cfg)
        assert res.verdict.outcome == SEPARABLE
        s = make_sample_set(cfg.seed, cfg.sample_count, rho.dims)
        q = np.einsum("id,de,ie->i", s.joint.conj(), res.final_x.mat, s.joint).real
        assert np.all(np.isfinite(q))
        p0 = float(np.linalg.eigvalsh(rho.mat)[0])
        n = rho.dims[0]
        order = choose_smear_order(p0, n)
        band = 2.0 * (ln_smear_coeff(order, n) + ln_range_coeff_at(n, p0, order))
        assert float(np.abs(q).max()) <= band


class TestConfigValidation:
    def test_bad_kappa(self):
        with pytest.raises(ValueError):
            SolverConfig(kappa=0.0)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            SolverConfig(kappa=0.1, mode="magic")

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            SolverConfig(kappa=0.1, lam=-1.0)

    def test_bad_strategy(self):
        with pytest.raises(ValueError):
            SolverConfig(kappa=0.1, sample_strategy="sometimes")
