import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupcontest.design import (
    DesignKernel,
    GammaWeights,
    _general_objective_direct,
    compare_schemes,
    concentrated_target_cutoff,
    general_design_loss_ratio,
    general_rank_objective,
    group_rank_objective,
    objective_for_gamma,
    optimal_general_design,
    optimal_group_design,
    scheme_outputs_uniform,
    total_output_per_agent,
)
from groupcontest.dist import Polynomial, PopulationModel, Power, Uniform
from groupcontest.errors import DegenerateDistribution, DomainError
from groupcontest.numerics import integrate
from groupcontest.populations import (
    concentrated_target,
    dispersed_target,
    stronger_target,
    weaker_target,
)

U = Uniform()


class TestGammaWeights:
    def test_vertex_prizes(self):
        assert GammaWeights.vertex(2, 4).prizes() == pytest.approx([0.5, 0.5, 0.0, 0.0])

    def test_round_trip(self):
        w = [0.5, 0.3, 0.2, 0.0]
        assert GammaWeights.from_prizes(w).prizes() == pytest.approx(w)

    def test_rejects_non_simplex(self):
        with pytest.raises(DomainError):
            GammaWeights((0.5, 0.6))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12))
    def test_prizes_are_nonincreasing_and_sum_to_one(self, raw):
        if sum(raw) < 1e-6:
            return
        g = GammaWeights(tuple(x / sum(raw) for x in raw))
        w = g.prizes()
        assert sum(w) == pytest.approx(1.0, abs=1e-12)
        assert all(a >= b - 1e-15 for a, b in zip(w, w[1:]))
        assert w[-1] == 0.0


class TestObjectives:
    @pytest.mark.parametrize("pop", [PopulationModel(0.4, Power(2), U), concentrated_target(),
                                     stronger_target(), dispersed_target()],
                             ids=["power", "polynomial", "stronger", "dispersed"])
    def test_two_integral_forms_agree(self, pop):
        for j in (1, 3, 7):
            assert general_rank_objective(pop, 10, j) == pytest.approx(
                _general_objective_direct(pop, 10, j), abs=1e-13)

    def test_uniform_same_for_everyone(self):
        # with F = G = H uniform, the target agent is a typical agent
        pop = PopulationModel(0.5, U, U)
        for j in range(1, 6):
            assert general_rank_objective(pop, 6, j) == pytest.approx(total_output_per_agent(pop, 6, j), abs=1e-14)
        assert general_rank_objective(pop, 6, 1) == pytest.approx(5 / 42, abs=1e-14)

    def test_winner_take_all_is_optimal_for_uniform(self):
        res = optimal_general_design(PopulationModel(0.5, U, U), 8)
        assert res.k_star == 1

    def test_group_objective_full_share_matches_general(self):
        pop = PopulationModel(1.0, U, U)
        for j in (1, 2, 5):
            assert group_rank_objective(pop, 7, j) == pytest.approx(general_rank_objective(pop, 7, j), abs=1e-14)

    def test_group_objective_needs_target_share(self):
        with pytest.raises(DomainError):
            group_rank_objective(PopulationModel(0.0, U, U), 5, 1)

    def test_kernel_vanishes_at_ends(self):
        k = DesignKernel(concentrated_target())
        assert k(0.0) == 0.0 and k(1.0) == 0.0

    def test_objective_is_linear_in_gamma(self):
        pop = concentrated_target()
        g = GammaWeights((0.2, 0.0, 0.5, 0.3))
        vals = [general_rank_objective(pop, 5, j) for j in range(1, 5)]
        assert objective_for_gamma(pop, 5, g) == pytest.approx(np.dot(g.gamma, vals), abs=1e-15)
        with pytest.raises(DomainError):
            objective_for_gamma(pop, 6, g)


class TestGeneralDesign:
    @pytest.mark.parametrize("n", [5, 10, 25, 50])
    def test_weaker_target(self, n):
        pop = weaker_target(n)
        res = optimal_general_design(pop, n)
        assert res.k_star == n - 2
        assert res.total_output == pytest.approx(2 / (n * (n + 1)), abs=1e-12)
        assert res.objective_value == pytest.approx(1 / ((2 * n - 1) * (2 * n - 3)), abs=1e-12)
        assert general_design_loss_ratio(pop, n) == pytest.approx((n - 1) / 2, abs=1e-10)

    def test_result_serialization(self):
        res = optimal_general_design(weaker_target(5), 5)
        d = res.to_dict()
        assert set(d) == {"k_star", "prizes", "objective", "per_j"}
        assert d["prizes"] == pytest.approx([1 / 3] * 3 + [0.0, 0.0])
        assert '"k_star": 3' in res.to_json()

    def test_ties_pick_smallest_cutoff(self, monkeypatch):
        import groupcontest.design as design
        monkeypatch.setattr(design, "general_rank_objective", lambda pop, n, j: 1.0 if j in (2, 3) else 0.5)
        assert design.optimal_general_design(PopulationModel(0.5, U, U), 5).k_star == 2

    def test_degenerate_population(self):
        class Point(Power):
            def sf(self, x):
                return np.where(np.asarray(x) < 0.5, 1.0, 0.0)
        with pytest.raises(DegenerateDistribution):
            optimal_general_design(PopulationModel(1.0, Point(1.0), Point(1.0)), 4)

    def test_small_n(self):
        with pytest.raises(DomainError):
            optimal_general_design(PopulationModel(0.5, U, U), 1)

    @pytest.mark.parametrize("n", [20, 50, 90])
    def test_concentrated_cutoff_formula(self, n):
        res = optimal_general_design(concentrated_target(), n)
        x = concentrated_target_cutoff(n)
        assert res.k_star in (math.floor(x), math.ceil(x))


class TestGroupDesign:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.02, 1.0), st.floats(0.3, 4.0), st.sampled_from([3, 8, 20]))
    def test_winner_take_all_is_certified(self, mu, s, n):
        res = optimal_group_design(PopulationModel(mu, Power(s), U), n)
        assert res.k_star == 1
        assert max(res.per_j_objective) - res.per_j_objective[0] <= 1e-9

    def test_matches_uniform_closed_form(self):
        res = optimal_group_design(PopulationModel(0.3, U, U), 20)
        assert res.objective_value == pytest.approx(scheme_outputs_uniform(20, 0.3)[1], abs=1e-14)


class TestCompareSchemes:
    def test_closed_form_and_quadrature_agree(self):
        mus = [0.05, 0.3, 0.6, 0.9, 1.0]
        a = compare_schemes(20, mus, U, U, method="closed")
        b = compare_schemes(20, mus, U, U, method="quadrature")
        assert np.allclose(a.general, b.general, atol=1e-12)
        assert np.allclose(a.group, b.group, atol=1e-12)
        assert np.allclose(a.scaled_group, b.scaled_group, atol=1e-12)

    def test_closed_form_limits(self):
        n = 20
        a, b, c = scheme_outputs_uniform(n, 1.0)
        assert a == b == c == pytest.approx(19 / 420)
        assert scheme_outputs_uniform(n, 0.999)[1] > 19 / 420

    def test_crossing(self):
        res = compare_schemes(20, np.arange(1, 100) / 100, U, U)
        a_val = 19 / 420
        assert 0 < res.crossing < 1
        assert scheme_outputs_uniform(20, res.crossing)[1] == pytest.approx(a_val, abs=1e-9)
        assert len(res.rows()) == 99

    def test_closed_form_needs_uniform(self):
        with pytest.raises(DomainError):
            compare_schemes(5, [0.5], Power(2), U, method="closed")
        with pytest.raises(DomainError):
            compare_schemes(5, [0.0], U, U)

    def test_group_scheme_matches_direct_integral(self):
        # n mu agents on average in the target group; prize goes to the best of them
        n, mu = 6, 0.4
        pop = PopulationModel(mu, Polynomial((0, 0, 3, -2)), U)
        val = group_rank_objective(pop, n, 1)
        # E[output of target agent] = int alpha dF with alpha from the group pdf; use the
        # expected-prize identity: total target output equals expected top target virtual value
        Ht = pop.shifted_mixture_cdf
        ref = integrate(lambda y: y * n * (n - 1) * (1 - Ht(y)) * Ht(y) ** (n - 2) * pop.shifted_mixture_pdf(y),
                        0, 1, pop.knots) / (mu * n)
        assert val == pytest.approx(ref, abs=1e-14)
