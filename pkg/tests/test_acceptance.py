"""Acceptance suite: every stated deliverable criterion, one test each.

Each test asserts exactly the numbers and tolerances the package promises,
so a verbose run of this file reads as the acceptance checklist.  The heavy
rows (million-sample Monte Carlo, desk-scale sweeps) run here and nowhere
else; unit-level coverage lives in the per-module test files.
"""

import math
import time

import numpy as np
import pytest

from hqopt.experiment import ExperimentConfig, run_experiment
from hqopt.instances import (
    CASE_A,
    CASE_B,
    CASE_C,
    CASE_D,
    MAX_COUPLING,
    MAX_UNBOUNDED_RELAXATION,
    MIN_COUPLING,
    MIN_GAP_INFINITE,
    OBJECTIVE_IDENTITY,
    OBJECTIVE_INDEFINITE,
    BruteGrid,
    GeneratorSpec,
    brute_force_qcqp,
    canonical,
    generate,
    generate_report,
)
from hqopt.lowrank import reduce_rank
from hqopt.matrices import SymMatrix
from hqopt.probability import (
    CHI2_ASYM_BOUND,
    EXP_ASYM_BOUND,
    SHARPENED_COEFF,
    SIGN_ASYM_BOUND,
    asym_prob,
    exp_asymmetry_scan,
    exp_closed_form,
    run_lemma_check,
)
from hqopt.rounding import (
    GAUSSIAN_MAX,
    GAUSSIAN_MIN,
    SIGN_MAX,
    RoundingParams,
    bound_certificate_max,
    bound_certificate_min,
    complex_exact_extraction,
    gaussian_round_max,
    gaussian_round_min,
    sign_round_max,
)
from hqopt.sdp import (
    COMPLEX,
    MAXIMIZE,
    MINIMIZE,
    OPTIMAL,
    REAL,
    UNBOUNDED,
    constraint_values,
    objective_value,
    solve_instance,
)


def qp_lower_bound(M: float) -> float:
    root = (M + math.sqrt(M * M + 4.0)) / 2.0
    return 1.0 + root * root


def three_sigma_floor(freq: float, samples: int) -> float:
    return 3.0 * math.sqrt(max(freq * (1.0 - freq), 1e-12) / samples)


class TestCanonicalExamples:
    def test_infinite_gap_sdp_zero_witness_three_ratio_inf(self):
        t0 = time.monotonic()
        ex = canonical(MIN_GAP_INFINITE)
        sol = solve_instance(ex.instance)
        assert sol.status == OPTIMAL
        assert abs(sol.objective_value) <= 1e-7

        witness = np.array([math.sqrt(2.0), math.sqrt(2.0), 0.0, math.sqrt(3.0)])
        assert constraint_values(ex.instance, witness).min() >= 1.0 - 1e-12
        assert objective_value(ex.instance, witness) == pytest.approx(3.0, abs=1e-12)

        ratio = math.inf if abs(sol.objective_value) <= 1e-9 else 3.0 / sol.objective_value
        assert math.isinf(ratio)
        assert time.monotonic() - t0 < 1.0

    @pytest.mark.parametrize("M", [1.0, 10.0, 100.0])
    @pytest.mark.xfail(
        strict=True,
        reason="the coupled-pair relaxation value is 2, not 1: X = I is feasible "
        "with objective 2 and the constraints force X_11 >= 1 + M|X_12| and "
        "X_22 >= 1, so trace >= 2; the stated value of 1 belongs to the "
        "variant whose first constraint bounds x_1^2 instead of x_2^2, and "
        "that variant has no relaxation gap at all",
    )
    def test_coupled_min_relaxation_value_as_stated(self, M):
        ex = canonical(MIN_COUPLING, M=M)
        sol = solve_instance(ex.instance)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("M", [1.0, 10.0, 100.0])
    def test_coupled_min_relaxation_value(self, M):
        ex = canonical(MIN_COUPLING, M=M)
        sol = solve_instance(ex.instance)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(2.0, abs=1e-6)

    def test_coupled_min_variant_without_gap(self):
        # bounding x_1^2 instead of x_2^2 makes x = (1, 0) optimal on both sides
        for M in (1.0, 10.0, 100.0):
            inst = canonical(MIN_COUPLING, M=M).instance
            variant = type(inst)(
                sense=inst.sense,
                field=inst.field,
                objective=inst.objective,
                constraints=(SymMatrix(np.diag([1.0, 0.0])),) + inst.constraints[1:],
            )
            sol = solve_instance(variant)
            assert sol.status == OPTIMAL
            assert sol.objective_value == pytest.approx(1.0, abs=1e-6)
            assert brute_force_qcqp(variant) == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("M", [1.0, 10.0, 100.0])
    def test_coupled_min_rounded_solutions_cost_at_least_qp_optimum(self, M):
        ex = canonical(MIN_COUPLING, M=M)
        sol = solve_instance(ex.instance)
        low = reduce_rank(sol, ex.instance)
        params = RoundingParams(scheme=GAUSSIAN_MIN, num_samples=3000, seed=5)
        report = gaussian_round_min(ex.instance, low, params)
        assert not report.failed
        assert report.samples_feasible >= 1
        # best is the cheapest feasible sample, so this covers every sample
        assert report.best_objective >= qp_lower_bound(M) - 1e-4

    @pytest.mark.parametrize("M", [10.0, 100.0])
    def test_coupled_max_band_brute_force_and_ratio(self, M):
        t0 = time.monotonic()
        ex = canonical(MAX_COUPLING, M=M)
        sol = solve_instance(ex.instance)
        assert sol.status == OPTIMAL
        assert 1.0 + 1.0 / M - 1e-6 <= sol.objective_value <= 1.0 + 2.0 / M + 1e-6

        v_qp = brute_force_qcqp(ex.instance)
        assert v_qp <= 2.618 / M + 1e-3
        assert sol.objective_value / v_qp >= 0.38 * M
        assert time.monotonic() - t0 < 5.0

    def test_unbounded_relaxation_certificate_and_true_optimum(self):
        ex = canonical(MAX_UNBOUNDED_RELAXATION)
        sol = solve_instance(ex.instance)
        assert sol.status == UNBOUNDED
        assert sol.ray is not None
        ray = sol.ray.a
        assert np.linalg.eigvalsh(ray)[0] >= -1e-8
        for a in ex.instance.constraints:
            assert np.tensordot(a.a, ray) <= 1e-7
        assert np.tensordot(ex.instance.objective.a, ray) > 1e-9

        v_qp = brute_force_qcqp(ex.instance)
        assert v_qp == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0, abs=1e-4)


class TestLemmaSuite:
    def test_sign_asymmetry_exhaustive_500_cases(self):
        t0 = time.monotonic()
        out = run_lemma_check("L4_1", cases=500)
        assert out.passed, out.notes
        assert len(out.results) == 500
        for res in out.results:
            assert res.method == "Exhaustive"
            assert res.estimate > SIGN_ASYM_BOUND
        assert time.monotonic() - t0 < 60.0

    def test_chi2_asymmetry_million_samples_200_profiles(self):
        out = run_lemma_check("L3_1", samples=10**6, cases=200)
        assert out.passed, out.notes
        assert len(out.results) == 200
        for res in out.results:
            stderr = math.sqrt(res.estimate * (1.0 - res.estimate) / res.samples)
            assert res.estimate - 3.0 * stderr > CHI2_ASYM_BOUND

    def test_exp_asymmetry_million_samples_200_profiles(self):
        out = run_lemma_check("L3_4", samples=10**6, cases=200)
        assert out.passed, out.notes
        assert len(out.results) == 200
        for res in out.results:
            stderr = math.sqrt(res.estimate * (1.0 - res.estimate) / res.samples)
            assert res.estimate - 3.0 * stderr > EXP_ASYM_BOUND

    def test_sharpened_coefficient_beats_generic_on_grid(self):
        grid = np.linspace(0.5, 1000.0, 4000)
        assert np.all(SHARPENED_COEFF / grid > 0.25 / grid)
        out = run_lemma_check("L2_2", samples=200_000, cases=24)
        assert out.passed, out.notes

    def test_tail_bounds_dominate_empirical_50_configs(self):
        out = run_lemma_check("L5_1", samples=10**6, cases=50)
        assert out.passed, out.notes

    def test_closed_form_matches_monte_carlo_100_profiles(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 100:
            n = int(rng.integers(2, 8))
            taus = rng.random(n) + 0.05
            taus /= taus.sum()
            if n > 1 and np.min(np.abs(np.subtract.outer(taus, taus))[np.triu_indices(n, 1)]) < 1e-3:
                continue
            exact = exp_closed_form(taus)
            assert EXP_ASYM_BOUND < exact < 1.0 - EXP_ASYM_BOUND
            mc = asym_prob(
                "Exp", taus, method="MonteCarlo", samples=200_000,
                seed=int(rng.integers(0, 2**31)),
            )
            stderr = math.sqrt(mc.estimate * (1.0 - mc.estimate) / mc.samples)
            assert abs(exact - mc.estimate) <= 4.0 * stderr
            checked += 1

    @pytest.mark.parametrize("n", [2, 3])
    def test_exp_favorable_probability_scan_stays_above_1_over_e(self, n):
        resolution = 1e-3 if n == 2 else 5e-3
        result = exp_asymmetry_scan(n, resolution, seed=3)
        assert result["min_found"] > 1.0 / math.e
        assert result["mixed_min"] > 1.0 / math.e - result["mixed_tolerance"]


class TestRatioSweeps:
    def test_min_sweep_every_ratio_finite_and_bounded(self):
        t0 = time.monotonic()
        config = ExperimentConfig(
            cases=(CASE_A,),
            m_list=(5, 10, 15, 20, 25, 30),
            instances_per_m=100,
            samples=100,
            n=10,
            root_seed=1,
        )
        result = run_experiment(config)
        assert len(result.records) == 600
        for rec in result.records:
            assert rec.solve_status == OPTIMAL
            assert math.isfinite(rec.empirical_ratio)
            assert rec.empirical_ratio <= 1.0e6 * rec.m * rec.m / math.pi
            # a feasible point can undercut v_sdp only by the solver tolerance
            assert rec.empirical_ratio >= 1.0 - 1e-7
        # one summary triple per m, means inspectable in the CSV ordering
        assert [s.m for s in result.summaries] == [5, 10, 15, 20, 25, 30]
        for s in result.summaries:
            assert 1.0 <= s.ratio_mean <= s.ratio_max
        assert time.monotonic() - t0 < 600.0

    def test_max_sweep_ratios_below_both_certificates(self):
        rng_seed = 0
        solved = 0
        for m in (5, 10, 15, 20, 25, 30):
            for i in range(100):
                spec = GeneratorSpec(
                    n=10, m=m, case=CASE_A, sense=MAXIMIZE,
                    objective_kind=OBJECTIVE_INDEFINITE, seed=rng_seed + 7919 * m + i,
                )
                inst = generate(spec)
                sol = solve_instance(inst)
                if sol.status != OPTIMAL:
                    continue
                solved += 1
                low = reduce_rank(sol, inst)
                sign_rep = sign_round_max(
                    inst, low, RoundingParams(scheme=SIGN_MAX, num_samples=100, seed=i)
                )
                gauss_rep = gaussian_round_max(
                    inst, sol, RoundingParams(scheme=GAUSSIAN_MAX, num_samples=100, seed=i)
                )
                cert = bound_certificate_max(inst, sol.X)
                assert not sign_rep.failed and not gauss_rep.failed
                assert sign_rep.empirical_ratio <= sign_rep.theoretical_bound
                assert gauss_rep.empirical_ratio <= cert["bound"]
                best = max(sign_rep.best_objective, gauss_rep.best_objective)
                ratio = sol.objective_value / best
                assert ratio <= sign_rep.theoretical_bound
                assert ratio <= cert["bound"]
        assert solved >= 550

    def test_complex_min_sweep_ratio_below_2400m(self):
        for m in range(4, 11):
            for i in range(50):
                spec = GeneratorSpec(
                    n=10, m=m, case=CASE_A, sense=MINIMIZE,
                    objective_kind=OBJECTIVE_IDENTITY, seed=104729 * m + i, field=COMPLEX,
                )
                inst = generate(spec)
                sol = solve_instance(inst)
                assert sol.status == OPTIMAL
                low = reduce_rank(sol, inst)
                report = gaussian_round_min(
                    inst, low, RoundingParams(scheme=GAUSSIAN_MIN, num_samples=100, seed=i)
                )
                assert not report.failed
                assert report.empirical_ratio <= 2400.0 * m
                assert report.empirical_ratio <= bound_certificate_min(m, COMPLEX)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_complex_min_few_constraints_no_gap(self, m):
        for i in range(20):
            spec = GeneratorSpec(
                n=10, m=m, case=CASE_A, sense=MINIMIZE,
                objective_kind=OBJECTIVE_IDENTITY, seed=1009 * m + i, field=COMPLEX,
            )
            inst = generate(spec)
            sol = solve_instance(inst)
            assert sol.status == OPTIMAL
            assert math.isfinite(sol.objective_value)
            report = complex_exact_extraction(inst, reduce_rank(sol, inst))
            assert not report.failed
            assert report.empirical_ratio == pytest.approx(1.0, abs=1e-4)


class TestJointEventFrequencies:
    SAMPLES = 100_000

    def test_min_joint_event_frequency_above_1_over_500(self):
        for i in range(50):
            spec = GeneratorSpec(
                n=10, m=10, case=CASE_A, sense=MINIMIZE,
                objective_kind=OBJECTIVE_IDENTITY, seed=300 + i,
            )
            inst = generate(spec)
            low = reduce_rank(solve_instance(inst), inst)
            report = gaussian_round_min(
                inst, low, RoundingParams(scheme=GAUSSIAN_MIN, num_samples=self.SAMPLES, seed=i)
            )
            freq = report.joint_event_count / self.SAMPLES
            assert freq > 1.0 / 500.0 - three_sigma_floor(freq, self.SAMPLES)

    def test_max_joint_event_frequency_above_1_over_100(self):
        for i in range(50):
            spec = GeneratorSpec(
                n=10, m=10, case=CASE_A, sense=MAXIMIZE,
                objective_kind=OBJECTIVE_INDEFINITE, seed=500 + i,
            )
            inst = generate(spec)
            sol = solve_instance(inst)
            assert sol.status == OPTIMAL
            report = gaussian_round_max(
                inst, sol, RoundingParams(scheme=GAUSSIAN_MAX, num_samples=self.SAMPLES, seed=i)
            )
            freq = report.joint_event_count / self.SAMPLES
            assert freq > 1.0 / 100.0 - three_sigma_floor(freq, self.SAMPLES)


class TestSolverHealth:
    def test_500_instances_optimal_rate_and_weak_duality(self):
        rng = np.random.default_rng(23)
        cases = (CASE_A, CASE_B, CASE_C, CASE_D)
        healthy = 0
        total = 0
        for i in range(500):
            case = cases[i % 4]
            # rank-one-rest maximization leaves improving rays orthogonal to
            # every constraint, so those relaxations are often unbounded by
            # construction; the health pool needs instances with finite optima
            if case in (CASE_C, CASE_D):
                sense = MINIMIZE
            else:
                sense = MINIMIZE if (i // 4) % 2 == 0 else MAXIMIZE
            objective_kind = OBJECTIVE_IDENTITY if sense == MINIMIZE else OBJECTIVE_INDEFINITE
            spec = GeneratorSpec(
                n=int(rng.integers(4, 9)),
                m=int(rng.integers(2, 11)),
                case=case,
                sense=sense,
                objective_kind=objective_kind,
                seed=int(rng.integers(0, 2**31)),
            )
            inst = generate_report(spec).instance
            sol = solve_instance(inst)
            total += 1
            if sol.status != OPTIMAL:
                continue
            if sol.gap <= 1e-7 and sol.primal_residual <= 1e-7 and sol.dual_residual <= 1e-7:
                healthy += 1

            # weak duality on every Optimal result, reverified from the
            # multipliers themselves rather than the solver's gap field
            y = np.asarray(sol.dual_multipliers)
            assert np.min(y) >= 0.0
            combo = sum(float(w) * a.a for w, a in zip(y, inst.constraints))
            dual_value = float(np.sum(y))
            scale = max(1.0, abs(sol.objective_value))
            if sense == MINIMIZE:
                slack = inst.objective.a - combo
                assert np.linalg.eigvalsh(slack)[0] >= -1e-6 * scale
                assert dual_value <= sol.objective_value + 1e-6 * scale
            else:
                slack = combo - inst.objective.a
                assert np.linalg.eigvalsh(slack)[0] >= -1e-6 * scale
                assert dual_value >= sol.objective_value - 1e-6 * scale
        assert healthy >= math.ceil(0.99 * total)
