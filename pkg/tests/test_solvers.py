import csv
import io
import math

import numpy as np
import pytest

from irlsreg.linops import DenseOperator
from irlsreg.penalty import PenaltySpec, evaluate_objective, lambda_max
from irlsreg.problems import logspace, make_reverse_svd_matrix
from irlsreg.solvers import (
    TRACE_HEADER,
    SolverConfig,
    SolverError,
    epsilon_update,
    firls_step,
    fista_momentum_coefficient,
    irls_step,
    irls_weights,
    ista_step,
    solve,
)
from irlsreg.surrogate import SurrogateInputs, evaluate_G
from conftest import random_scaled_problem
from oracles import grid_argmin, ridge_solution


def well_conditioned(n, seed, frac):
    op = make_reverse_svd_matrix(n, n, logspace(0.95, 0.5, n), seed)
    b = np.random.default_rng(100 + seed).standard_normal(n)
    return op, b, PenaltySpec.uniform(n, lambda_max(op, b) * frac)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(alpha=1.0), dict(alpha=0.0), dict(eps_init=0.0),
                                    dict(max_iters=0), dict(variant="CG"), dict(step_tol=-1.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_default_step_tol(self):
        assert SolverConfig().resolved_step_tol(100) == pytest.approx(1e-7)

    def test_variant_case(self):
        assert SolverConfig(variant="firls").variant == "FIRLS"


class TestWeights:
    def test_examples(self):
        assert irls_weights([0.0], 1.0, [1.0])[0] == 1.0
        assert irls_weights([3.0], 4.0, [1.0])[0] == pytest.approx(0.2)
        np.testing.assert_array_equal(irls_weights([5.0, -2.0, 0.0], 0.1, [2.0, 2.0, 2.0]), 1.0)

    def test_general_exponent(self):
        w = irls_weights([1.0], 1.0, [1.5])[0]
        assert w == pytest.approx(2.0 ** (-0.25))

    def test_positive_finite(self, rng):
        w = irls_weights(rng.standard_normal(50) * 1e3, 1e-8, rng.uniform(0.5, 2, 50))
        assert np.all(np.isfinite(w)) and np.all(w > 0)

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_bad_eps(self, eps):
        with pytest.raises(ValueError):
            irls_weights([1.0], eps, [1.0])


class TestEpsilonUpdate:
    def test_examples(self):
        assert epsilon_update(1.0, 0.21, 0.04, 1) == pytest.approx(0.5)
        assert epsilon_update(0.01, 1.0, 0.9, 3) == 0.01
        assert epsilon_update(10.0, 0.0, 0.9, 2) == pytest.approx(0.9)

    def test_positive_after_underflow(self):
        e = epsilon_update(1e-5, 0.0, 0.5, 5000)
        assert 0 < e <= 1e-5

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            epsilon_update(1.0, 0.0, 1.0, 1)


class TestSteps:
    op = DenseOperator([[0.5]])

    def test_irls_examples(self):
        w = irls_weights([0.0], 1.0, [1.0])
        assert irls_step(self.op, [2.0], [0.0], w, PenaltySpec([1.0], [1.0]))[0] == pytest.approx(0.5)
        assert irls_step(self.op, [2.0], [0.0], [1.0], PenaltySpec([1.0], [2.0]))[0] == pytest.approx(1 / 3)

    def test_ista_examples(self):
        assert ista_step(self.op, [2.0], [0.0], 0.4)[0] == pytest.approx(0.6)
        assert ista_step(self.op, [2.0], [0.0], 2.0)[0] == 0.0

    @pytest.mark.parametrize("a,b,tau", [(0.5, 2.0, 0.1), (0.9, -1.0, 0.3), (0.3, 0.5, 0.01)])
    def test_ista_fixed_point_is_1d_minimizer(self, a, b, tau):
        op = DenseOperator([[a]])
        x = np.zeros(1)
        for _ in range(500 if a > 0.4 else 5000):
            x = ista_step(op, [b], x, tau)
        shift = tau / a**2
        closed = math.copysign(max(abs(b / a) - shift, 0.0), b)
        assert x[0] == pytest.approx(closed, abs=1e-8)
        grid = grid_argmin(lambda t: (a * t - b) ** 2 + 2 * tau * np.abs(t), -10, 10)
        assert x[0] == pytest.approx(grid, abs=1e-6)

    def test_firls_zero_momentum_matches_irls(self, rng):
        for seed in range(20):
            op, b = random_scaled_problem(7, 5, seed)
            p = PenaltySpec(rng.uniform(0, 1, 5), rng.uniform(1, 2, 5))
            y = rng.standard_normal(5)
            w = irls_weights(y, 0.5, p.q)
            np.testing.assert_array_equal(firls_step(op, b, y, w, p), irls_step(op, b, y, w, p))

    def test_first_firls_iteration_is_irls(self):
        op, b = random_scaled_problem(10, 10, 1)
        p = PenaltySpec.uniform(10, 0.1)
        a = solve(op, b, p, SolverConfig("IRLS", max_iters=1))
        f = solve(op, b, p, SolverConfig("FIRLS", max_iters=1))
        np.testing.assert_array_equal(a.x_final, f.x_final)


class TestMomentum:
    def test_examples(self):
        t2, c = fista_momentum_coefficient(1.0)
        assert t2 == pytest.approx((1 + math.sqrt(5)) / 2) and c == 0.0
        t3, _ = fista_momentum_coefficient(t2)
        assert t3 == pytest.approx(2.193527, abs=1e-6)

    def test_monotone(self, rng):
        for t in rng.uniform(1, 1e3, 100):
            assert fista_momentum_coefficient(t)[0] > t

    def test_rejects_small_t(self):
        with pytest.raises(ValueError):
            fista_momentum_coefficient(0.5)


class TestSolveExamples:
    @pytest.mark.parametrize("variant", ["ISTA", "FISTA"])
    def test_zero_solution_threshold(self, variant):
        op, b = random_scaled_problem(30, 30, 7)
        p = PenaltySpec.uniform(30, 1.01 * lambda_max(op, b))
        res = solve(op, b, p, SolverConfig(variant, max_iters=500))
        assert np.max(np.abs(res.x_final)) < 1e-6

    def test_zero_solution_irls_decays(self):
        # the smoothed weights only reach zero as eps does, so decay is sublinear
        op, b = random_scaled_problem(30, 30, 7)
        p = PenaltySpec.uniform(30, 1.01 * lambda_max(op, b))
        peaks = [np.max(np.abs(solve(op, b, p, SolverConfig(max_iters=k, step_tol=0.0)).x_final))
                 for k in (50, 500, 5000)]
        assert peaks[0] > peaks[1] > peaks[2]
        assert peaks[2] < peaks[0] / 10

    def test_zero_data(self):
        op, _ = random_scaled_problem(10, 8, 2)
        res = solve(op, np.zeros(10), PenaltySpec.uniform(8, 0.1), SolverConfig())
        assert res.iterations_run == 1 and res.termination == "step_tol_reached"
        np.testing.assert_array_equal(res.x_final, 0.0)

    def test_irls_ista_agree_100(self):
        op, b, p = well_conditioned(100, 0, 1e-3)
        fi = solve(op, b, p, SolverConfig("IRLS", max_iters=300, step_tol=0.0)).trace.F[-1]
        fs = solve(op, b, p, SolverConfig("ISTA", max_iters=300, step_tol=0.0)).trace.F[-1]
        assert abs(fi - fs) / fs < 1e-4

    @pytest.mark.parametrize("variant", ["ISTA", "FISTA"])
    def test_refuses_general_penalty(self, variant):
        op, b = random_scaled_problem(5, 4, 0)
        with pytest.raises(SolverError):
            solve(op, b, PenaltySpec([0.1] * 4, [1, 1, 1, 1.5]), SolverConfig(variant))
        with pytest.raises(SolverError):
            solve(op, b, PenaltySpec([0.1, 0.1, 0.1, 0.2], [1] * 4), SolverConfig(variant))

    def test_divergence_reports_iteration(self):
        # an operator with norm > 1 violates the precondition and blows up
        op = DenseOperator(np.eye(3) * 3.0)
        with pytest.raises(SolverError) as exc:
            solve(op, np.ones(3), PenaltySpec.uniform(3, 1e-6, 2.0), SolverConfig(max_iters=200))
        assert exc.value.iteration is not None and exc.value.iteration > 1

    def test_dimension_errors(self):
        op, b = random_scaled_problem(5, 4, 0)
        with pytest.raises(ValueError):
            solve(op, b[:3], PenaltySpec.uniform(4, 0.1))
        with pytest.raises(ValueError):
            solve(op, b, PenaltySpec.uniform(3, 0.1))
        with pytest.raises(ValueError):
            solve(op, b, PenaltySpec.uniform(4, 0.1), SolverConfig(x0=np.zeros(2)))

    def test_ridge_fixed_point(self, rng):
        op, b = random_scaled_problem(12, 10, 4)
        lam = rng.uniform(0.01, 0.5, 10)
        res = solve(op, b, PenaltySpec(lam, np.full(10, 2.0)), SolverConfig(max_iters=5000, step_tol=1e-14))
        ref = ridge_solution(op.to_dense(), b, lam)
        np.testing.assert_allclose(res.x_final, ref, atol=1e-8, rtol=0)

    def test_deterministic(self):
        op, b = random_scaled_problem(20, 20, 3)
        p = PenaltySpec.uniform(20, 0.05)
        for v in ("IRLS", "FIRLS", "ISTA", "FISTA"):
            r1 = solve(op, b, p, SolverConfig(v, max_iters=50))
            r2 = solve(op, b, p, SolverConfig(v, max_iters=50))
            np.testing.assert_array_equal(r1.x_final, r2.x_final)

    def test_callback_and_final_iterate(self):
        op, b = random_scaled_problem(15, 15, 5)
        seen = []
        res = solve(op, b, PenaltySpec.uniform(15, 0.05), SolverConfig(max_iters=20, step_tol=0.0,
                                                                        keep_iterates=True),
                    callback=lambda it, x: seen.append((it, x.copy())))
        assert [i for i, _ in seen] == list(range(1, 21))
        np.testing.assert_array_equal(res.x_final, seen[-1][1])
        np.testing.assert_array_equal(res.x_final, res.trace.iterates[-1])


class TestTraceProperties:
    @pytest.fixture(params=range(4))
    def run(self, request, rng):
        seed = request.param
        op, b = random_scaled_problem(30, 30, seed)
        q = np.ones(30) if seed % 2 == 0 else np.random.default_rng(seed).choice([1.0, 1.5, 2.0], 30)
        p = PenaltySpec(np.full(30, 0.05), q)
        res = solve(op, b, p, SolverConfig(max_iters=300, step_tol=0.0, keep_iterates=True))
        return op, b, p, res

    def test_sandwich(self, run):
        op, b, p, res = run
        for F, g in zip(res.trace.F, res.trace.G):
            assert 0 <= F <= g * (1 + 1e-10)

    def test_g_nonincreasing(self, run):
        G = np.array(run[3].trace.G)
        assert np.all(G[1:] <= G[:-1] * (1 + 1e-12))

    def test_eps_schedule(self, run):
        eps = np.array(run[3].trace.eps)
        assert np.all(eps > 0) and np.all(np.diff(eps) <= 0) and eps[0] <= 1.0

    def test_l1_bound(self, run):
        op, b, p, res = run
        g1 = res.trace.G[0]
        bound = p.n * np.max((g1 / p.lam) ** (1 / p.q))
        for x in res.trace.iterates:
            assert np.sum(np.abs(x)) <= bound

    def test_step_summability(self, run):
        steps = np.array(run[3].trace.step_norm)
        first = steps[steps > 0][0]
        assert np.isfinite(np.sum(steps ** 2))
        assert steps[-1] < 0.01 * first

    def test_x_minimizes_surrogate(self, run, rng):
        op, b, p, res = run
        eps_seq = [res.trace.eps0] + res.trace.eps
        for n in (0, 5, 50):
            xn, x1, e = res.trace.iterates[n], res.trace.iterates[n + 1], eps_seq[n]
            w = irls_weights(xn, e, p.q)
            g = evaluate_G(SurrogateInputs(op, b, p, x1, xn, w, e))
            for _ in range(20):
                d = rng.standard_normal(30)
                d *= 1e-3 / np.linalg.norm(d)
                assert g <= evaluate_G(SurrogateInputs(op, b, p, x1 + d, xn, w, e))

    def test_eps_tends_to_step_scale(self):
        op, b = random_scaled_problem(20, 20, 8)
        cfg = SolverConfig(max_iters=20000, step_tol=1e-8)
        res = solve(op, b, PenaltySpec.uniform(20, 0.05), cfg)
        assert res.termination == "step_tol_reached"
        assert res.trace.eps[-1] < 10 * math.sqrt(1e-8)
        n = res.iterations_run
        assert res.trace.eps[-1] ** 2 <= res.trace.step_norm[-1] + cfg.alpha ** n + 1e-15 or \
            res.trace.eps[-1] == min(res.trace.eps)


class TestAgreement:
    @pytest.mark.parametrize("seed", range(3))
    def test_irls_ista_50(self, seed):
        op, b, p = well_conditioned(50, seed, 1e-3)
        fi = solve(op, b, p, SolverConfig("IRLS", max_iters=300, step_tol=0.0)).trace.F[-1]
        fs = solve(op, b, p, SolverConfig("ISTA", max_iters=300, step_tol=0.0)).trace.F[-1]
        assert abs(fs - fi) / fs < 1e-3

    @pytest.mark.parametrize("seed", range(3))
    def test_firls_50_vs_irls_300(self, seed):
        op, b, p = well_conditioned(50, seed, 1e-4)
        f300 = solve(op, b, p, SolverConfig("IRLS", max_iters=300, step_tol=0.0)).trace.F[-1]
        f50 = solve(op, b, p, SolverConfig("FIRLS", max_iters=50, step_tol=0.0)).trace.F[-1]
        assert abs(f50 - f300) < 1e-6

    def test_fista_reaches_lasso_minimum(self):
        op, b, p = well_conditioned(40, 1, 1e-2)
        fs = solve(op, b, p, SolverConfig("FISTA", max_iters=3000, step_tol=0.0))
        x = fs.x_final
        assert evaluate_objective(op, b, x, p) == pytest.approx(fs.trace.F[-1], rel=1e-12)
        fi = solve(op, b, p, SolverConfig("ISTA", max_iters=3000, step_tol=0.0)).trace.F[-1]
        assert fs.trace.F[-1] <= fi * (1 + 1e-9)


class TestTraceCsv:
    def test_irls_rows(self):
        op, b = random_scaled_problem(10, 10, 0)
        res = solve(op, b, PenaltySpec.uniform(10, 0.05), SolverConfig(max_iters=7, step_tol=0.0))
        rows = list(csv.reader(io.StringIO(res.trace.to_csv())))
        assert tuple(rows[0]) == TRACE_HEADER
        assert len(rows) == 8 and [int(r[0]) for r in rows[1:]] == list(range(1, 8))
        assert float(rows[-1][1]) == res.trace.F[-1]
        assert all(r[2] != "" for r in rows[1:])

    def test_ista_blank_surrogate(self):
        op, b = random_scaled_problem(10, 10, 0)
        res = solve(op, b, PenaltySpec.uniform(10, 0.05), SolverConfig("ISTA", max_iters=3))
        rows = list(csv.reader(io.StringIO(res.trace.to_csv())))
        assert all(r[2] == "" and r[3] == "" for r in rows[1:])

    def test_snapshots_need_iterates(self):
        op, b = random_scaled_problem(5, 5, 0)
        p = PenaltySpec.uniform(5, 0.05)
        res = solve(op, b, p, SolverConfig(max_iters=3))
        with pytest.raises(ValueError):
            res.trace.snapshots(p)
