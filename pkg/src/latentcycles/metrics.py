"""Scoring of recovered graphs and replicate-level evaluation runs."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import Hyperparameters
from .model import (
    CausalParameters,
    Dataset,
    GroundTruthGraph,
    ValidationError,
    check_stability,
    generate_data,
)
from .moves import MoveConfig
from .sampler import (
    ChainConfig,
    ChainError,
    PosteriorSummary,
    extract_graph,
    run_chain,
    summarize,
)


@dataclass
class RecoveryReport:
    """Directed-edge confusion metrics over the Q(Q-1) ordered pairs of B."""

    tp: int
    fp: int
    fn: int
    tn: int
    tpr: float
    fdr: float
    mcc: float
    exact_b: bool
    p_star_correct: bool
    l_support_match: bool


def _match_l_support(est: np.ndarray, truth: np.ndarray) -> bool:
    """Column sets equal up to permutation."""
    if est.shape != truth.shape:
        return False
    return sorted(map(tuple, est.T.astype(bool))) == sorted(map(tuple, truth.T.astype(bool)))


def score_graph(estimate: dict, truth: GroundTruthGraph) -> RecoveryReport:
    est_b = np.asarray(estimate["b_support"], dtype=bool)
    true_b = truth.b_support
    Q = true_b.shape[0]
    off = ~np.eye(Q, dtype=bool)
    e, t = est_b[off], true_b[off]
    tp = int(np.sum(e & t))
    fp = int(np.sum(e & ~t))
    fn = int(np.sum(~e & t))
    tn = int(np.sum(~e & ~t))
    tpr = tp / (tp + fn) if tp + fn else 0.0
    fdr = fp / (tp + fp) if tp + fp else 0.0
    denom = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = (tp * tn - fp * fn) / denom if denom > 0 else 0.0
    return RecoveryReport(
        tp=tp, fp=fp, fn=fn, tn=tn, tpr=tpr, fdr=fdr, mcc=float(mcc),
        exact_b=bool(np.array_equal(est_b, true_b)),
        p_star_correct=int(estimate["p_star"]) == truth.p_star,
        l_support_match=_match_l_support(
            np.asarray(estimate["l_support"]), truth.l_support
        ),
    )


@dataclass
class ReplicateResult:
    reports: list = field(default_factory=list)
    summaries: list = field(default_factory=list)
    failures: int = 0

    @property
    def csr(self) -> int:
        """Number of replicates recovering the B support exactly."""
        return sum(r.exact_b for r in self.reports)

    @property
    def mean_mcc(self) -> float:
        return float(np.mean([r.mcc for r in self.reports])) if self.reports else 0.0

    def a_bias_mse(self, truth_A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Entrywise bias and MSE of the model-averaged A estimates."""
        est = np.stack([s.a_estimate for s in self.summaries])
        err = est - truth_A[None, :, :]
        return err.mean(axis=0), (err ** 2).mean(axis=0)


def run_replicates(
    params: CausalParameters,
    n: int,
    replicates: int,
    seed: int,
    hyper: Hyperparameters | None = None,
    chain_cfg: ChainConfig | None = None,
    move_cfg: MoveConfig | None = None,
    threshold: float = 0.5,
    covariate_spec="gaussian",
) -> ReplicateResult:
    """Independent simulate-fit-score replicates with spawned seeds."""
    hyper = hyper or Hyperparameters.default(params.Q)
    truth_graph = None
    out = ReplicateResult()
    children = np.random.SeedSequence(seed).spawn(replicates)
    for i, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        data, truth = generate_data(params, n, covariate_spec, rng)
        truth_graph = truth
        try:
            result = run_chain(data, hyper, chain_cfg, move_cfg, rng)
        except ChainError as exc:
            warnings.warn(f"replicate {i} failed: {exc}")
            out.failures += 1
            continue
        summary = summarize(result.samples)
        estimate = extract_graph(summary, threshold)
        out.reports.append(score_graph(estimate, truth_graph))
        out.summaries.append(summary)
    return out


def admissible_stable_permutations(W: np.ndarray, max_q: int = 8) -> list[np.ndarray]:
    """All row permutations of W = I - B that yield a stable model.

    A permuted W is admissible when its diagonal is non-zero; it is then
    normalized to a unit diagonal and kept if the implied B = I - W_norm
    has spectral radius below 1. Used to check identifiability of the
    equivalence class on small graphs by exhaustive enumeration.
    """
    W = np.asarray(W, dtype=float)
    Q = W.shape[0]
    if W.shape != (Q, Q):
        raise ValidationError("W must be square")
    if Q > max_q:
        raise ValidationError(f"enumeration limited to Q <= {max_q}")
    out = []
    for perm in itertools.permutations(range(Q)):
        Wp = W[list(perm), :]
        diag = np.diag(Wp)
        if np.any(np.abs(diag) < 1e-12):
            continue
        Wn = Wp / diag[:, None]
        B = np.eye(Q) - Wn
        if check_stability(B, margin=0.0):
            out.append(B)
    return out
