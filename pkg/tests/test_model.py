"""Model structure, stability, UGLT checks, and the data generator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcycles.model import (
    CausalParameters,
    Dataset,
    GroundTruthGraph,
    StabilityError,
    ValidationError,
    check_stability,
    check_uglt,
    generate_data,
    ground_truth_from_params,
    lu_solve,
    neumann_inverse,
    scenario_parameters,
    spectral_radius,
)


class TestStability:
    def test_zero_matrix_is_stable(self):
        assert check_stability(np.zeros((4, 4)))

    def test_two_cycle_radius(self):
        B = np.array([[0.0, 0.8], [0.5, 0.0]])
        assert np.isclose(spectral_radius(B), np.sqrt(0.4))
        assert check_stability(B)

    def test_three_cycle_radius_is_cube_root(self):
        B = np.zeros((3, 3))
        B[0, 1], B[1, 2], B[2, 0] = 0.9, 0.9, 0.9
        assert np.isclose(spectral_radius(B), 0.9)

    def test_unstable_cycle_detected(self):
        B = np.array([[0.0, 1.1], [1.1, 0.0]])
        assert not check_stability(B)

    def test_nilpotent_dag_always_stable(self):
        B = np.triu(np.full((5, 5), 3.0), k=1)
        assert check_stability(B)

    def test_margin_is_respected(self):
        B = np.array([[0.0, 1.0], [1.0 - 1e-12, 0.0]])
        assert not check_stability(B, margin=1e-3)

    @given(st.integers(0, 6).flatmap(
        lambda q: st.lists(st.floats(-0.9, 0.9), min_size=q * q, max_size=q * q)))
    @settings(max_examples=40, deadline=None)
    def test_radius_nonnegative(self, flat):
        q = int(np.sqrt(len(flat)))
        B = np.array(flat).reshape(q, q)
        assert spectral_radius(B) >= 0.0


class TestUGLT:
    def test_distinct_pivots_accepted(self):
        L = np.zeros((4, 2))
        L[1, 0], L[2, 0] = 1.0, 0.5
        L[2, 1], L[3, 1] = 1.0, -1.0
        ok, pivots = check_uglt(L)
        assert ok and pivots == [1, 2]

    def test_shared_pivot_rejected(self):
        L = np.zeros((3, 2))
        L[0, 0], L[0, 1] = 1.0, 1.0
        ok, _ = check_uglt(L)
        assert not ok

    def test_zero_columns_skipped(self):
        ok, pivots = check_uglt(np.zeros((3, 3)))
        assert ok and pivots == []

    def test_tolerance_hides_tiny_entries(self):
        L = np.zeros((3, 2))
        L[0, 0] = 1e-15
        L[1, 0] = 1.0
        L[1, 1] = 1.0
        ok, pivots = check_uglt(L)
        assert not ok and pivots == [1, 1]


class TestLuSolve:
    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        b = rng.standard_normal((6, 3))
        assert np.allclose(lu_solve(M, b), np.linalg.solve(M, b))

    def test_vector_rhs(self):
        M = np.array([[2.0, 1.0], [1.0, 3.0]])
        x = lu_solve(M, np.array([3.0, 4.0]))
        assert np.allclose(M @ x, [3.0, 4.0])

    def test_singular_raises(self):
        with pytest.raises(np.linalg.LinAlgError):
            lu_solve(np.ones((3, 3)), np.ones(3))

    def test_neumann_agreement(self):
        B = scenario_parameters("II").B
        inv = neumann_inverse(B)
        assert np.allclose(inv, np.linalg.inv(np.eye(7) - B), atol=1e-8)


class TestValidation:
    def test_self_loop_rejected(self):
        p = scenario_parameters("I")
        p.B[0, 0] = 0.1
        with pytest.raises(ValidationError):
            p.validate()

    def test_unstable_b_rejected(self):
        p = scenario_parameters("I")
        p.B[1, 0] = 3.0
        with pytest.raises(StabilityError):
            p.validate()

    def test_nondistinct_pivots_rejected(self):
        p = scenario_parameters("I")
        p.L[1, 1] = 0.2
        with pytest.raises(ValidationError):
            p.validate()

    def test_truth_requires_two_children(self):
        g = GroundTruthGraph(
            b_support=np.zeros((3, 3), dtype=bool),
            a_support=np.zeros((3, 1), dtype=bool),
            l_support=np.array([[1], [0], [0]], dtype=bool),
            p_star=1,
        )
        with pytest.raises(ValidationError):
            g.validate()

    def test_truth_requires_distinct_child_sets(self):
        ls = np.array([[1, 1], [1, 1], [0, 0]], dtype=bool)
        g = GroundTruthGraph(
            b_support=np.zeros((3, 3), dtype=bool),
            a_support=np.zeros((3, 1), dtype=bool),
            l_support=ls, p_star=2,
        )
        with pytest.raises(ValidationError):
            g.validate()

    def test_dataset_nonfinite_rejected(self):
        d = Dataset(Y=np.array([[1.0, np.nan]]), X=np.zeros((1, 0)))
        with pytest.raises(ValidationError):
            d.validate()


class TestScenarios:
    def test_scenario_shapes(self):
        p1 = scenario_parameters("I")
        assert p1.Q == 5 and p1.S == 2 and p1.L.shape == (5, 2)
        p2 = scenario_parameters("II")
        assert p2.Q == 7 and p2.S == 2

    def test_scenario_two_has_two_cycles(self):
        B = scenario_parameters("II").B
        # 1 -> 4 -> 2 -> 1 and 3 -> 7 -> 6 -> 3 in 1-based labels
        assert B[3, 0] != 0 and B[1, 3] != 0 and B[0, 1] != 0
        assert B[6, 2] == 0
        assert B[2, 6] != 0 and B[5, 6] != 0 and B[3, 5] != 0

    def test_scenario_two_radius(self):
        r = spectral_radius(scenario_parameters("II").B)
        assert np.isclose(r, abs(-0.7 * 0.9 * 0.6) ** (1.0 / 3.0))
        assert r < 1

    def test_unknown_scenario(self):
        with pytest.raises(ValidationError):
            scenario_parameters("III")


class TestGenerateData:
    def test_shapes_and_determinism(self):
        p = scenario_parameters("I")
        d1, t1 = generate_data(p, 50, rng=np.random.default_rng(3))
        d2, t2 = generate_data(p, 50, rng=np.random.default_rng(3))
        assert d1.Y.shape == (50, 5) and d1.X.shape == (50, 2)
        assert np.array_equal(d1.Y, d2.Y)
        assert t1.p_star == 2

    def test_structural_equation_holds_exactly(self):
        p = scenario_parameters("I")
        data, truth, C, E = generate_data(
            p, 30, rng=np.random.default_rng(4), return_latents=True
        )
        lhs = data.Y
        rhs = (p.mu[None, :] + data.Y @ p.B.T + data.X @ p.A.T
               + C @ p.L.T + E)
        assert np.allclose(lhs, rhs, atol=1e-9)

    def test_error_moments(self):
        # Laplace with scale 2 sigma: variance 8 sigma2 = 0.5 at sigma2 = 1/16
        p = scenario_parameters("I")
        _, _, _, E = generate_data(
            p, 200_000, rng=np.random.default_rng(5), return_latents=True
        )
        assert np.allclose(E.var(axis=0), 0.5, atol=0.02)
        assert np.allclose(E.mean(axis=0), 0.0, atol=0.02)

    def test_bernoulli_covariates(self):
        p = scenario_parameters("I")
        data, _ = generate_data(p, 40, covariate_spec="bernoulli",
                                rng=np.random.default_rng(6))
        assert set(np.unique(data.X)) <= {0.0, 1.0}

    def test_truth_from_params(self):
        p = scenario_parameters("II")
        t = ground_truth_from_params(p)
        t.validate()
        assert t.b_support.sum() == 8
        assert t.l_support.sum() == 5
