"""Chain driver: initialization, the sweep schedule, summaries, diagnostics.

One sweep visits every conditional once in a fixed order:
mu, A, B entries, L rows, support indicators, pivot moves, kappa, zeta,
(a1, a2), split/merge, C, tau, sigma2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gibbs
from .kernels import Hyperparameters
from .model import Dataset, ValidationError, check_stability, check_uglt
from .moves import MoveConfig, dimension_move, pivot_move
from .state import SamplerState


@dataclass
class ChainConfig:
    iterations: int = 50_000
    burn_in: int = 30_000
    thin: int = 10
    recompute_every: int = 200
    adapt_every: int = 100
    check_invariants: bool = False

    def validate(self) -> None:
        if self.iterations < 1 or self.thin < 1:
            raise ValueError("iterations and thin must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")


class ChainError(RuntimeError):
    """Numerical failure inside a chain; carries the sweep index."""

    def __init__(self, sweep_index: int, cause: BaseException):
        super().__init__(f"chain aborted at sweep {sweep_index}: {cause!r}")
        self.sweep_index = sweep_index
        self.cause = cause


def _prior_mean_or(scale: float, shape: float, fallback: float = 1.0) -> float:
    # inverse-gamma mean scale/(shape-1) exists only for shape > 1
    return scale / (shape - 1.0) if shape > 1.0 else fallback


def initialize_state(data: Dataset, hyper: Hyperparameters,
                     rng: np.random.Generator) -> SamplerState:
    """Deterministic-ish starting point: empty graph, no confounders."""
    data.validate()
    hyper.validate(data.Q)
    Q, S, n, P = data.Q, data.S, data.n, hyper.P_max
    var_y = np.var(data.Y, axis=0)
    if np.any(var_y <= 0):
        raise ValidationError("a response column has zero variance")
    state = SamplerState(
        mu=data.Y.mean(axis=0),
        A=np.zeros((Q, S)),
        B=np.zeros((Q, Q)),
        L=np.zeros((Q, P)),
        sigma2=var_y / 8.0,
        gamma_alpha=np.ones((Q, S)),
        nu_alpha=np.ones((Q, S)),
        rho_alpha=hyper.a_rho / (hyper.a_rho + hyper.b_rho),
        gamma_beta=np.ones((Q, Q)),
        nu_beta=np.ones((Q, Q)),
        rho_beta=hyper.a_rho / (hyper.a_rho + hyper.b_rho),
        delta=np.zeros((Q, P), dtype=int),
        pivot=np.full(P, -1, dtype=int),
        zeta=np.full(P, 0.5),
        kappa=_prior_mean_or(hyper.b_kappa, hyper.a_kappa),
        a1=_prior_mean_or(hyper.c1, hyper.b1),
        a2=_prior_mean_or(hyper.c2, hyper.b2),
        C=np.zeros((n, P)),
        tau=np.ones((n, Q)),
    )
    state.recompute_residual(data)
    return state


def sweep(state: SamplerState, data: Dataset, hyper: Hyperparameters,
          move_cfg: MoveConfig, rng: np.random.Generator) -> dict:
    """One full pass over all conditionals; returns acceptance bookkeeping."""
    gibbs.update_mu(state, data, hyper, rng)
    gibbs.update_A_block(state, data, hyper, rng)
    b_acc, b_prop = gibbs.update_B_entries(state, data, hyper, rng)
    gibbs.update_L_rows(state, data, hyper, rng)
    gibbs.update_delta(state, data, hyper, rng)
    pivot_acc = 0
    active = list(state.active_columns())
    for p in active:
        if state.pivot[p] >= 0 and pivot_move(state, data, hyper, move_cfg, p, rng):
            pivot_acc += 1
    gibbs.update_kappa(state, hyper, rng)
    gibbs.update_zeta(state, hyper, rng)
    a_acc = gibbs.update_a1_a2(state, hyper, rng)
    dim = dimension_move(state, data, hyper, move_cfg, rng)
    gibbs.update_C(state, data, hyper, rng)
    gibbs.update_tau(state, data, hyper, rng)
    gibbs.update_sigma2(state, data, hyper, rng)
    return {
        "b_accepted": b_acc,
        "b_proposed": b_prop,
        "pivot_accepted": pivot_acc,
        "pivot_attempted": len(active),
        "a_step_accepted": a_acc,
        "dimension": dim,
    }


@dataclass
class ChainResult:
    samples: list = field(default_factory=list)
    log_joint_trace: np.ndarray = None
    p_star_trace: np.ndarray = None
    sigma2_trace: np.ndarray = None
    b_accept_rate: float = 0.0
    pivot_accept_rate: float = 0.0
    dim_counts: dict = field(default_factory=dict)
    burn_in: int = 0
    thin: int = 1
    seed_info: str = ""


def run_chain(data: Dataset, hyper: Hyperparameters,
              chain_cfg: ChainConfig | None = None,
              move_cfg: MoveConfig | None = None,
              rng: np.random.Generator | None = None,
              initial_state: SamplerState | None = None) -> ChainResult:
    chain_cfg = chain_cfg or ChainConfig()
    move_cfg = move_cfg or MoveConfig()
    chain_cfg.validate()
    move_cfg.validate()
    if rng is None:
        rng = np.random.default_rng()
    state = initial_state or initialize_state(data, hyper, rng)

    T = chain_cfg.iterations
    result = ChainResult(burn_in=chain_cfg.burn_in, thin=chain_cfg.thin)
    lj = np.empty(T)
    ps = np.empty(T, dtype=int)
    s2 = np.empty((T, state.Q))
    b_acc = b_prop = piv_acc = piv_att = 0
    adapt_acc = adapt_prop = 0
    dim_counts: dict = {}

    for t in range(T):
        try:
            info = sweep(state, data, hyper, move_cfg, rng)
            if (t + 1) % chain_cfg.recompute_every == 0:
                state.recompute_residual(data)
            if chain_cfg.check_invariants:
                state.check_invariants(hyper.nu0)
            lj[t] = gibbs.log_joint(state, data, hyper)
        except (np.linalg.LinAlgError, FloatingPointError, AssertionError) as exc:
            raise ChainError(t, exc) from exc
        ps[t] = state.p_star
        s2[t] = state.sigma2
        b_acc += info["b_accepted"]
        b_prop += info["b_proposed"]
        piv_acc += info["pivot_accepted"]
        piv_att += info["pivot_attempted"]
        adapt_acc += info["b_accepted"]
        adapt_prop += info["b_proposed"]
        if info["dimension"]:
            dim_counts[info["dimension"]] = dim_counts.get(info["dimension"], 0) + 1
        # step-size adaptation, burn-in only, targeting 20-50% acceptance
        if t < chain_cfg.burn_in and (t + 1) % chain_cfg.adapt_every == 0:
            if adapt_prop:
                rate = adapt_acc / adapt_prop
                if rate < 0.2:
                    state.b_step *= 0.8
                elif rate > 0.5:
                    state.b_step *= 1.25
            adapt_acc = adapt_prop = 0
        if t >= chain_cfg.burn_in and (t - chain_cfg.burn_in) % chain_cfg.thin == 0:
            snap = state.snapshot()
            snap["log_joint"] = float(lj[t])
            result.samples.append(snap)

    result.log_joint_trace = lj
    result.p_star_trace = ps
    result.sigma2_trace = s2
    result.b_accept_rate = b_acc / b_prop if b_prop else 0.0
    result.pivot_accept_rate = piv_acc / piv_att if piv_att else 0.0
    result.dim_counts = dim_counts
    return result


@dataclass
class PosteriorSummary:
    Q: int
    S: int
    n_samples: int
    b_prob: np.ndarray
    b_mean_cond: np.ndarray
    b_estimate: np.ndarray
    a_prob: np.ndarray
    a_mean_cond: np.ndarray
    a_estimate: np.ndarray
    mu_mean: np.ndarray
    sigma2_mean: np.ndarray
    p_star_counts: dict
    p_star_mode: int
    n_modal: int
    l_prob: np.ndarray
    l_mean: np.ndarray


def _slab_summary(values: np.ndarray, slab: np.ndarray):
    """Inclusion probability, conditional-on-slab mean, model-averaged mean."""
    prob = slab.mean(axis=0)
    count = slab.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(count > 0, (values * slab).sum(axis=0) / np.maximum(count, 1), 0.0)
    return prob, cond, prob * cond


def _align_columns(ref_L: np.ndarray, L: np.ndarray) -> tuple[list[int], list[float]]:
    """Greedy |inner product| matching of sample columns to reference slots.

    Both matrices have the same number of columns. Returns, per reference
    slot, the matched sample column and the sign making the inner
    product non-negative.
    """
    k = ref_L.shape[1]
    scores = ref_L.T @ L                         # (k_ref, k_sample)
    order: list[int] = [-1] * k
    signs: list[float] = [1.0] * k
    used_r, used_s = set(), set()
    flat = sorted(
        ((abs(scores[i, j]), i, j) for i in range(k) for j in range(k)),
        reverse=True,
    )
    for _score, i, j in flat:
        if i in used_r or j in used_s:
            continue
        order[i] = j
        signs[i] = 1.0 if scores[i, j] >= 0 else -1.0
        used_r.add(i)
        used_s.add(j)
    return order, signs


def summarize(samples: list[dict]) -> PosteriorSummary:
    """Posterior summaries with latent columns aligned across samples.

    Confounder columns are exchangeable, so inclusion probabilities for L
    are computed over the samples at the modal column count, after
    matching each sample's active columns to a high-probability reference
    sample by greedy inner-product assignment.
    """
    if not samples:
        raise ValueError("no samples to summarize")
    Q = samples[0]["mu"].shape[0]
    S = samples[0]["A"].shape[1]
    B = np.stack([s["B"] for s in samples])
    A = np.stack([s["A"] for s in samples])
    slab_b = np.stack([s["gamma_beta"] == 1.0 for s in samples]).astype(float)
    off = ~np.eye(Q, dtype=bool)
    slab_b *= off[None, :, :]
    slab_a = np.stack([s["gamma_alpha"] == 1.0 for s in samples]).astype(float)
    b_prob, b_cond, b_est = _slab_summary(B, slab_b)
    a_prob, a_cond, a_est = _slab_summary(A, slab_a)

    p_stars = [s["p_star"] for s in samples]
    counts: dict[int, int] = {}
    for p in p_stars:
        counts[p] = counts.get(p, 0) + 1
    p_mode = max(sorted(counts), key=lambda k: counts[k])
    modal = [s for s in samples if s["p_star"] == p_mode]

    if p_mode == 0:
        l_prob = np.zeros((Q, 0))
        l_mean = np.zeros((Q, 0))
    else:
        ref = max(modal, key=lambda s: s.get("log_joint", -np.inf))
        ref_cols = np.nonzero(ref["pivot"] >= 0)[0]
        ref_L = ref["L"][:, ref_cols].copy()
        for k in range(ref_L.shape[1]):       # pivot entry of the slot positive
            piv = int(ref["pivot"][ref_cols[k]])
            if ref_L[piv, k] < 0:
                ref_L[:, k] *= -1.0
        inc = np.zeros((Q, p_mode))
        val = np.zeros((Q, p_mode))
        for s in modal:
            cols = np.nonzero(s["pivot"] >= 0)[0]
            Ls = s["L"][:, cols]
            order, signs = _align_columns(ref_L, Ls)
            for slot, (j, sign) in enumerate(zip(order, signs)):
                inc[:, slot] += s["delta"][:, cols[j]]
                val[:, slot] += sign * Ls[:, j]
        l_prob = inc / len(modal)
        l_mean = val / len(modal)

    return PosteriorSummary(
        Q=Q, S=S, n_samples=len(samples),
        b_prob=b_prob, b_mean_cond=b_cond, b_estimate=b_est,
        a_prob=a_prob, a_mean_cond=a_cond, a_estimate=a_est,
        mu_mean=np.mean([s["mu"] for s in samples], axis=0),
        sigma2_mean=np.mean([s["sigma2"] for s in samples], axis=0),
        p_star_counts=counts, p_star_mode=p_mode, n_modal=len(modal),
        l_prob=l_prob, l_mean=l_mean,
    )


def extract_graph(summary: PosteriorSummary, threshold: float = 0.5) -> dict:
    """Median-probability-model graph: keep edges with inclusion
    probability strictly above the threshold."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    return {
        "b_support": summary.b_prob > threshold,
        "a_support": summary.a_prob > threshold,
        "l_support": summary.l_prob > threshold,
        "p_star": summary.p_star_mode,
        "b_estimate": summary.b_estimate,
        "a_estimate": summary.a_estimate,
    }


def split_rhat(traces: list[np.ndarray]) -> float:
    """Potential scale reduction with each chain split in half."""
    halves = []
    for tr in traces:
        tr = np.asarray(tr, dtype=float)
        h = tr.shape[0] // 2
        if h < 2:
            return np.nan
        halves.append(tr[:h])
        halves.append(tr[h:2 * h])
    x = np.stack(halves)
    m, n = x.shape
    means = x.mean(axis=1)
    W = x.var(axis=1, ddof=1).mean()
    Bv = n * means.var(ddof=1)
    if W <= 0:
        return np.nan
    var_hat = (n - 1) / n * W + Bv / n
    return float(np.sqrt(var_hat / W))


def effective_sample_size(trace: np.ndarray) -> float:
    """ESS from the initial-positive-sequence autocorrelation estimator."""
    x = np.asarray(trace, dtype=float)
    n = x.shape[0]
    if n < 4 or np.var(x) == 0:
        return float(n)
    x = x - x.mean()
    acov = np.correlate(x, x, mode="full")[n - 1:] / n
    rho = acov / acov[0]
    total = 0.0
    for k in range(1, n - 1, 2):
        pair = rho[k] + rho[k + 1] if k + 1 < n else rho[k]
        if pair < 0:
            break
        total += pair
    return float(n / (1.0 + 2.0 * total))


def diagnostics(results: list[ChainResult]) -> dict:
    """Convergence report over one or more chains of the same run."""
    post_lj = [r.log_joint_trace[r.burn_in:] for r in results]
    post_s2 = [r.sigma2_trace[r.burn_in:] for r in results]
    Q = post_s2[0].shape[1]
    out = {
        "log_joint_rhat": split_rhat(post_lj),
        "log_joint_ess": float(np.mean([effective_sample_size(t) for t in post_lj])),
        "sigma2_rhat": [split_rhat([t[:, q] for t in post_s2]) for q in range(Q)],
        "b_accept_rate": float(np.mean([r.b_accept_rate for r in results])),
        "pivot_accept_rate": float(np.mean([r.pivot_accept_rate for r in results])),
        "dim_counts": {},
    }
    for r in results:
        for k, v in r.dim_counts.items():
            out["dim_counts"][k] = out["dim_counts"].get(k, 0) + v
    return out
