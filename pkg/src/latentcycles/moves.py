"""Support-structure and trans-dimensional moves for the loading matrix.

Pivot moves (shift / switch / add-delete) rearrange the UGLT support of
an active column; split / merge moves change the number of active
confounder columns. All loading values created by a move are drawn from
their conditional normal, which collapses the loading out of the
acceptance ratio (see ``gibbs.log_marginal_gain``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gibbs import loading_conditional, log_marginal_gain
from .kernels import Hyperparameters, log_inverse_gamma_pdf, log_normal_pdf
from .model import Dataset
from .state import SamplerState

ZETA_CLIP = 1e-12


@dataclass
class MoveConfig:
    """Move-mixture probabilities; p_shift + p_switch <= 1 and the
    remainder is the add/delete branch."""

    p_shift: float = 0.4
    p_switch: float = 0.4
    p_add: float = 0.5
    p_split_merge: float = 1.0

    def validate(self) -> None:
        for name in ("p_shift", "p_switch", "p_add", "p_split_merge"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.p_shift + self.p_switch > 1.0 + 1e-12:
            raise ValueError("p_shift + p_switch must not exceed 1")


def _unused_rows(state: SamplerState) -> set[int]:
    used = {int(state.pivot[p]) for p in state.active_columns()}
    return set(range(state.Q)) - used


def _first_nonzero_below(col: np.ndarray, row: int) -> int | None:
    nz = np.nonzero(col[row + 1:])[0]
    return int(nz[0]) + row + 1 if nz.size else None


def _col_log_prior(col: np.ndarray, pivot: int, zeta: float) -> float:
    """Log prior of a support column given its pivot and inclusion rate."""
    if np.any(col[:pivot]) or col[pivot] != 1:
        return -np.inf
    below = col[pivot + 1:]
    k = int(below.sum())
    m = below.size - k
    if (k and zeta <= 0.0) or (m and zeta >= 1.0):
        return -np.inf
    total = 0.0
    if k:
        total += k * np.log(zeta)
    if m:
        total += m * np.log1p(-zeta)
    return total


def _set_loading(state: SamplerState, q: int, p: int, rng) -> None:
    """Include (q, p) and draw its loading from the conditional normal."""
    mean, v_inv = loading_conditional(state, q, p)
    r = state.resid[:, q] + state.L[q, p] * state.C[:, p]
    new = mean + np.sqrt(state.sigma2[q] / v_inv) * rng.standard_normal()
    state.delta[q, p] = 1
    state.L[q, p] = new
    state.resid[:, q] = r - new * state.C[:, p]


def _clear_loading(state: SamplerState, q: int, p: int) -> None:
    state.resid[:, q] += state.L[q, p] * state.C[:, p]
    state.delta[q, p] = 0
    state.L[q, p] = 0.0


def shift_candidates(state: SamplerState, p: int) -> list[int]:
    ell = int(state.pivot[p])
    nxt = _first_nonzero_below(state.delta[:, p], ell)
    bound = nxt if nxt is not None else state.Q
    unused = _unused_rows(state)
    return [r for r in range(bound) if r in unused]


def pivot_shift(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                p: int, rng: np.random.Generator) -> bool:
    ell = int(state.pivot[p])
    cands = shift_candidates(state, p)
    if not cands:
        return False
    ell_new = int(rng.choice(cands))
    col_new = state.delta[:, p].copy()
    col_new[ell] = 0
    col_new[ell_new] = 1
    # reverse candidate count in the proposed state
    nxt_new = _first_nonzero_below(col_new, ell_new)
    bound_new = nxt_new if nxt_new is not None else state.Q
    unused_new = (_unused_rows(state) - {ell_new}) | {ell}
    cands_rev = [r for r in range(bound_new) if r in unused_new]
    log_ratio = (
        log_marginal_gain(state, ell_new, p)
        - log_marginal_gain(state, ell, p)
        + _col_log_prior(col_new, ell_new, state.zeta[p])
        - _col_log_prior(state.delta[:, p], ell, state.zeta[p])
        + np.log(len(cands)) - np.log(len(cands_rev))
    )
    if np.log(rng.random()) >= log_ratio:
        return False
    _clear_loading(state, ell, p)
    _set_loading(state, ell_new, p, rng)
    state.pivot[p] = ell_new
    return True


def pivot_switch(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                 p: int, rng: np.random.Generator) -> bool:
    act = [c for c in state.active_columns() if c != p]
    if not act:
        return False
    p2 = int(rng.choice(act))
    lo = min(state.pivot[p], state.pivot[p2])
    hi = max(state.pivot[p], state.pivot[p2])
    rows = [q for q in range(lo, hi + 1)
            if state.delta[q, p] != state.delta[q, p2]]
    if not rows:
        return True                      # proposal equals the current state
    col_a = state.delta[:, p].copy()
    col_b = state.delta[:, p2].copy()
    col_a[rows], col_b[rows] = col_b[rows], col_a[rows].copy()
    piv_a = int(np.nonzero(col_a)[0][0])
    piv_b = int(np.nonzero(col_b)[0][0])
    log_ratio = (
        _col_log_prior(col_a, piv_a, state.zeta[p])
        + _col_log_prior(col_b, piv_b, state.zeta[p2])
        - _col_log_prior(state.delta[:, p], state.pivot[p], state.zeta[p])
        - _col_log_prior(state.delta[:, p2], state.pivot[p2], state.zeta[p2])
    )
    for q in rows:
        v = state.L[q, p] + state.L[q, p2]      # exactly one is non-zero
        shift = (state.L[q, p] - state.L[q, p2]) * (state.C[:, p] - state.C[:, p2])
        r_new = state.resid[:, q] + shift
        w = state.tau[:, q] / state.sigma2[q]
        log_ratio += -0.5 * float(w @ (r_new ** 2 - state.resid[:, q] ** 2))
        del v
    if np.log(rng.random()) >= log_ratio:
        return False
    for q in rows:
        shift = (state.L[q, p] - state.L[q, p2]) * (state.C[:, p] - state.C[:, p2])
        state.resid[:, q] += shift
        state.L[q, p], state.L[q, p2] = state.L[q, p2], state.L[q, p]
        state.delta[q, p], state.delta[q, p2] = state.delta[q, p2], state.delta[q, p]
    state.pivot[p], state.pivot[p2] = piv_a, piv_b
    return True


def add_candidates(state: SamplerState, p: int) -> list[int]:
    ell = int(state.pivot[p])
    unused = _unused_rows(state)
    return [r for r in range(ell) if r in unused]


def pivot_add(state: SamplerState, data: Dataset, hyper: Hyperparameters,
              p: int, p_add: float, rng: np.random.Generator) -> bool:
    cands = add_candidates(state, p)
    if not cands:
        return False
    ell = int(state.pivot[p])
    ell_new = int(rng.choice(cands))
    col_new = state.delta[:, p].copy()
    col_new[ell_new] = 1
    log_ratio = (
        log_marginal_gain(state, ell_new, p)
        + _col_log_prior(col_new, ell_new, state.zeta[p])
        - _col_log_prior(state.delta[:, p], ell, state.zeta[p])
        + np.log1p(-p_add) - np.log(p_add / len(cands))
    )
    if np.log(rng.random()) >= log_ratio:
        return False
    _set_loading(state, ell_new, p, rng)
    state.pivot[p] = ell_new
    return True


def pivot_delete(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                 p: int, p_add: float, rng: np.random.Generator) -> bool:
    ell = int(state.pivot[p])
    if state.delta[:, p].sum() < 2:
        return False
    nxt = _first_nonzero_below(state.delta[:, p], ell)
    if nxt is None or nxt not in _unused_rows(state):
        return False
    col_new = state.delta[:, p].copy()
    col_new[ell] = 0
    # reverse add-candidates: rows above the new pivot unused after deletion
    unused_new = _unused_rows(state) | {ell}
    cands_rev = [r for r in range(nxt) if r in unused_new]
    log_ratio = (
        -log_marginal_gain(state, ell, p)
        + _col_log_prior(col_new, nxt, state.zeta[p])
        - _col_log_prior(state.delta[:, p], ell, state.zeta[p])
        + np.log(p_add / len(cands_rev)) - np.log1p(-p_add)
    )
    if np.log(rng.random()) >= log_ratio:
        return False
    _clear_loading(state, ell, p)
    state.pivot[p] = nxt
    return True


def pivot_move(state: SamplerState, data: Dataset, hyper: Hyperparameters,
               cfg: MoveConfig, p: int, rng: np.random.Generator) -> bool:
    u = rng.random()
    if u < cfg.p_shift:
        return pivot_shift(state, data, hyper, p, rng)
    if u < cfg.p_shift + cfg.p_switch:
        return pivot_switch(state, data, hyper, p, rng)
    if rng.random() < cfg.p_add:
        return pivot_add(state, data, hyper, p, cfg.p_add, rng)
    return pivot_delete(state, data, hyper, p, cfg.p_add, rng)


def split_transform(sigma2: float, u: float) -> tuple[float, float]:
    """Map (sigma2, U) to (sigma2_new, loading); preserves L^2 + 8 sigma2."""
    return (1.0 - u * u) * sigma2, np.sqrt(8.0 * sigma2) * u


def merge_transform(sigma2: float, loading: float) -> tuple[float, float]:
    """Exact inverse of ``split_transform``."""
    merged = sigma2 + loading * loading / 8.0
    return merged, loading / np.sqrt(loading * loading + 8.0 * sigma2)


def split_log_ratio(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                    ell: int, u: float, c_col: np.ndarray) -> tuple[float, float, float]:
    """Log acceptance ratio of a split at pivot row ``ell``.

    ``state`` holds the pre-split configuration (the new column absent);
    returns (log_ratio, sigma2_new, loading).
    """
    p_star, p_single, P = state.p_star, state.p_single, state.P_max
    sigma2_old = float(state.sigma2[ell])
    sigma2_new, loading = split_transform(sigma2_old, u)
    a_p = state.a1 * state.a2 / P
    tau_l = state.tau[:, ell]
    r_old = state.resid[:, ell]
    r_new = r_old - loading * c_col
    n = r_old.shape[0]
    lik = (
        0.5 * n * (np.log(sigma2_old) - np.log(sigma2_new))
        - float(tau_l @ (r_new ** 2)) / (2.0 * sigma2_new)
        + float(tau_l @ (r_old ** 2)) / (2.0 * sigma2_old)
    )
    log_ratio = (
        float(log_normal_pdf(loading, 0.0, state.kappa * sigma2_new))
        + float(log_inverse_gamma_pdf(sigma2_new, hyper.a_sigma, hyper.b_sigma))
        - float(log_inverse_gamma_pdf(sigma2_old, hyper.a_sigma, hyper.b_sigma))
        + np.log(a_p) + np.log(P - p_star) - np.log(state.a2 - 1.0 + P - p_star)
        + lik
        + np.log(P - p_star) - np.log(p_single + 1.0)
        + 0.5 * np.log(8.0 * sigma2_old)
    )
    return log_ratio, sigma2_new, loading


def merge_log_ratio(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                    p: int) -> tuple[float, float]:
    """Log acceptance ratio of merging single-entry column ``p``.

    Built term-by-term from the merge side; equals the negated split
    ratio of the matched reverse move. Returns (log_ratio, sigma2_merged).
    """
    ell = int(state.pivot[p])
    loading = float(state.L[ell, p])
    sigma2_cur = float(state.sigma2[ell])
    sigma2_merged, _u = merge_transform(sigma2_cur, loading)
    p_star_post = state.p_star - 1
    p_single_post = state.p_single - 1
    P = state.P_max
    a_p = state.a1 * state.a2 / P
    tau_l = state.tau[:, ell]
    r_with = state.resid[:, ell]
    r_without = r_with + loading * state.C[:, p]
    n = r_with.shape[0]
    lik = (
        0.5 * n * (np.log(sigma2_cur) - np.log(sigma2_merged))
        - float(tau_l @ (r_without ** 2)) / (2.0 * sigma2_merged)
        + float(tau_l @ (r_with ** 2)) / (2.0 * sigma2_cur)
    )
    log_ratio = (
        -float(log_normal_pdf(loading, 0.0, state.kappa * sigma2_cur))
        + float(log_inverse_gamma_pdf(sigma2_merged, hyper.a_sigma, hyper.b_sigma))
        - float(log_inverse_gamma_pdf(sigma2_cur, hyper.a_sigma, hyper.b_sigma))
        - np.log(a_p) - np.log(P - p_star_post)
        + np.log(state.a2 - 1.0 + P - p_star_post)
        + lik
        - np.log(P - p_star_post) + np.log(p_single_post + 1.0)
        - 0.5 * np.log(8.0 * sigma2_merged)
    )
    return log_ratio, sigma2_merged


def choose_dimension_move(p_star: int, p_single: int, P_max: int,
                          rng: np.random.Generator) -> str | None:
    """Lazy symmetric choice: each direction proposed with probability 1/2,
    suppressed when illegal, so q_split = 1/(2(P - P*)) and
    q_merge = 1/(2 P_single)."""
    split_ok = p_star < P_max
    merge_ok = p_single >= 1 and not (p_star == 1 and p_single == 1)
    if rng.random() < 0.5:
        return "split" if split_ok else None
    return "merge" if merge_ok else None


def split_move(state: SamplerState, data: Dataset, hyper: Hyperparameters,
               rng: np.random.Generator) -> bool:
    act = set(state.active_columns().tolist())
    zero_cols = [p for p in range(state.P_max) if p not in act]
    if not zero_cols:
        return False
    p = int(rng.choice(zero_cols))
    unused = sorted(_unused_rows(state))
    ell = int(rng.choice(unused))
    u = float(rng.random())
    c_col = rng.standard_normal(state.n)
    log_ratio, sigma2_new, loading = split_log_ratio(state, data, hyper, ell, u, c_col)
    if np.log(rng.random()) >= log_ratio:
        return False
    state.delta[ell, p] = 1
    state.pivot[p] = ell
    state.L[ell, p] = loading
    state.C[:, p] = c_col
    state.resid[:, ell] -= loading * c_col
    state.sigma2[ell] = sigma2_new
    a_p = state.a1 * state.a2 / state.P_max
    zeta = rng.beta(a_p, state.a2 + state.Q - (ell + 1))
    state.zeta[p] = float(np.clip(zeta, ZETA_CLIP, 1.0 - ZETA_CLIP))
    return True


def merge_move(state: SamplerState, data: Dataset, hyper: Hyperparameters,
               rng: np.random.Generator) -> bool:
    act = state.active_columns()
    singles = [p for p in act if state.delta[:, p].sum() == 1]
    if not singles or (state.p_star == 1 and state.p_single == 1):
        return False
    p = int(rng.choice(singles))
    log_ratio, sigma2_merged = merge_log_ratio(state, data, hyper, p)
    if np.log(rng.random()) >= log_ratio:
        return False
    ell = int(state.pivot[p])
    state.resid[:, ell] += state.L[ell, p] * state.C[:, p]
    state.delta[ell, p] = 0
    state.L[ell, p] = 0.0
    state.pivot[p] = -1
    state.sigma2[ell] = sigma2_merged
    state.zeta[p] = 0.5
    return True


def dimension_move(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                   cfg: MoveConfig, rng: np.random.Generator) -> str | None:
    if rng.random() >= cfg.p_split_merge:
        return None
    move = choose_dimension_move(state.p_star, state.p_single, state.P_max, rng)
    if move == "split":
        return "split" if split_move(state, data, hyper, rng) else "split-rejected"
    if move == "merge":
        return "merge" if merge_move(state, data, hyper, rng) else "merge-rejected"
    return None
