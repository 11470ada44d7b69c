"""Chain driver, summaries, column alignment, and diagnostics."""

import numpy as np
import pytest

from latentcycles import (
    ChainConfig,
    Hyperparameters,
    MoveConfig,
    generate_data,
    initialize_state,
    run_chain,
    scenario_parameters,
    summarize,
)
from latentcycles.model import Dataset, ValidationError
from latentcycles.sampler import (
    _align_columns,
    diagnostics,
    effective_sample_size,
    extract_graph,
    split_rhat,
)


@pytest.fixture(scope="module")
def short_run():
    params = scenario_parameters("I")
    data, truth = generate_data(params, 120, rng=np.random.default_rng(0))
    hyper = Hyperparameters.default(5)
    cfg = ChainConfig(iterations=400, burn_in=200, thin=4,
                      check_invariants=True)
    result = run_chain(data, hyper, cfg, MoveConfig(),
                       np.random.default_rng(1))
    return data, truth, hyper, cfg, result


class TestChainConfig:
    def test_defaults(self):
        cfg = ChainConfig()
        assert cfg.iterations == 50_000
        assert cfg.burn_in == 30_000
        assert cfg.thin == 10

    def test_invalid_burn_in(self):
        with pytest.raises(ValueError):
            ChainConfig(iterations=100, burn_in=100).validate()


class TestInitializeState:
    def test_empty_graph_start(self):
        params = scenario_parameters("I")
        data, _ = generate_data(params, 50, rng=np.random.default_rng(2))
        hyper = Hyperparameters.default(5)
        st = initialize_state(data, hyper, np.random.default_rng(3))
        assert st.p_star == 0
        assert np.all(st.B == 0) and np.all(st.A == 0)
        assert np.allclose(st.mu, data.Y.mean(axis=0))
        assert np.allclose(st.sigma2, data.Y.var(axis=0) / 8.0)
        st.check_invariants(hyper.nu0)

    def test_zero_variance_column_rejected(self):
        Y = np.ones((20, 3))
        Y[:, 1] = np.arange(20)
        Y[:, 2] = np.arange(20) ** 2
        data = Dataset(Y=Y, X=np.zeros((20, 0)))
        with pytest.raises(ValidationError):
            initialize_state(data, Hyperparameters.default(3),
                             np.random.default_rng(4))


class TestRunChain:
    def test_sample_count_and_traces(self, short_run):
        _, _, _, cfg, result = short_run
        expected = (cfg.iterations - cfg.burn_in + cfg.thin - 1) // cfg.thin
        assert len(result.samples) == expected
        assert result.log_joint_trace.shape == (cfg.iterations,)
        assert np.all(np.isfinite(result.log_joint_trace))

    def test_determinism(self):
        params = scenario_parameters("I")
        data, _ = generate_data(params, 80, rng=np.random.default_rng(5))
        hyper = Hyperparameters.default(5)
        cfg = ChainConfig(iterations=120, burn_in=40, thin=2)
        r1 = run_chain(data, hyper, cfg, MoveConfig(), np.random.default_rng(6))
        r2 = run_chain(data, hyper, cfg, MoveConfig(), np.random.default_rng(6))
        assert np.array_equal(r1.log_joint_trace, r2.log_joint_trace)
        for s1, s2 in zip(r1.samples, r2.samples):
            assert np.array_equal(s1["B"], s2["B"])
            assert np.array_equal(s1["delta"], s2["delta"])

    def test_all_samples_satisfy_invariants(self, short_run):
        from latentcycles.model import check_stability, check_uglt
        _, _, _, _, result = short_run
        for s in result.samples:
            assert check_stability(s["B"], margin=0.0)
            ok, _ = check_uglt(s["L"])
            assert ok


class TestAlignment:
    def test_permuted_columns_matched(self):
        rng = np.random.default_rng(7)
        ref = rng.standard_normal((6, 3))
        perm = [2, 0, 1]
        sample = ref[:, perm] * np.array([1.0, -1.0, 1.0])
        order, signs = _align_columns(ref, sample)
        for slot, j in enumerate(order):
            assert perm[j] == slot
        recovered = sample[:, order] * np.array(signs)
        assert np.allclose(recovered, ref)

    def test_summarize_handles_label_switching(self):
        # two samples with swapped and sign-flipped confounder columns
        Q, P = 4, 3
        base = {
            "mu": np.zeros(Q), "A": np.zeros((Q, 1)), "B": np.zeros((Q, Q)),
            "sigma2": np.ones(Q),
            "gamma_alpha": np.ones((Q, 1)), "gamma_beta": np.ones((Q, Q)),
            "kappa": 1.0, "log_joint": 0.0,
        }
        L1 = np.zeros((Q, P))
        L1[0, 0], L1[1, 0] = 1.0, 0.5
        L1[2, 1], L1[3, 1] = 1.0, -0.5
        d1 = (L1 != 0).astype(int)
        s1 = dict(base, L=L1, delta=d1, pivot=np.array([0, 2, -1]),
                  p_star=2)
        L2 = np.zeros((Q, P))
        L2[2, 0], L2[3, 0] = -1.0, 0.5        # flipped copy of column 1
        L2[0, 2], L2[1, 2] = 1.0, 0.5
        d2 = (L2 != 0).astype(int)
        s2 = dict(base, L=L2, delta=d2, pivot=np.array([2, -1, 0]),
                  p_star=2, log_joint=-1.0)
        summary = summarize([s1, s2])
        assert summary.p_star_mode == 2
        assert np.allclose(summary.l_prob, (L1[:, :2] != 0).astype(float))
        assert np.allclose(summary.l_mean, L1[:, :2])

    def test_zero_confounder_mode(self):
        Q = 3
        s = {
            "mu": np.zeros(Q), "A": np.zeros((Q, 1)), "B": np.zeros((Q, Q)),
            "sigma2": np.ones(Q), "gamma_alpha": np.ones((Q, 1)),
            "gamma_beta": np.ones((Q, Q)), "kappa": 1.0,
            "L": np.zeros((Q, 2)), "delta": np.zeros((Q, 2), dtype=int),
            "pivot": np.array([-1, -1]), "p_star": 0, "log_joint": 0.0,
        }
        summary = summarize([s])
        assert summary.p_star_mode == 0
        assert summary.l_prob.shape == (Q, 0)


class TestExtractGraph:
    def test_threshold_monotone(self, short_run):
        _, _, _, _, result = short_run
        summary = summarize(result.samples)
        g_lo = extract_graph(summary, 0.3)
        g_hi = extract_graph(summary, 0.9)
        assert g_hi["b_support"].sum() <= g_lo["b_support"].sum()
        assert g_hi["a_support"].sum() <= g_lo["a_support"].sum()

    def test_bad_threshold(self, short_run):
        _, _, _, _, result = short_run
        summary = summarize(result.samples)
        with pytest.raises(ValueError):
            extract_graph(summary, 1.0)


class TestDiagnostics:
    def test_rhat_near_one_for_iid(self):
        rng = np.random.default_rng(8)
        traces = [rng.standard_normal(4000) for _ in range(4)]
        assert abs(split_rhat(traces) - 1.0) < 0.02

    def test_rhat_large_for_disjoint_chains(self):
        rng = np.random.default_rng(9)
        traces = [rng.standard_normal(1000), rng.standard_normal(1000) + 10]
        assert split_rhat(traces) > 2.0

    def test_ess_iid_close_to_n(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal(8000)
        assert effective_sample_size(x) > 5000

    def test_ess_autocorrelated_much_smaller(self):
        rng = np.random.default_rng(11)
        x = np.zeros(8000)
        for t in range(1, 8000):
            x[t] = 0.98 * x[t - 1] + rng.standard_normal()
        assert effective_sample_size(x) < 1000

    def test_diagnostics_keys(self, short_run):
        _, _, _, _, result = short_run
        d = diagnostics([result])
        assert set(d) >= {"log_joint_rhat", "log_joint_ess", "sigma2_rhat",
                          "b_accept_rate", "pivot_accept_rate"}
