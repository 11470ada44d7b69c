"""Fixed-dimension full-conditional updates for one sampler sweep.

Every update edits the state in place and keeps ``state.resid``
consistent. Residuals follow the convention that the block being
updated is first added back before the new draw is subtracted.
"""

from __future__ import annotations

import numpy as np

from .kernels import (
    Hyperparameters,
    bernoulli_from_log_odds,
    draw_inverse_gamma,
    draw_inverse_gaussian,
    log_beta_pdf,
    log_inverse_gamma_pdf,
    log_normal_pdf,
    spike_slab_log_odds,
)
from .model import Dataset
from .state import SamplerState

RESIDUAL_FLOOR = 1e-8
ZETA_CLIP = 1e-12


def update_mu(state: SamplerState, data: Dataset, hyper: Hyperparameters,
              rng: np.random.Generator) -> None:
    for q in range(state.Q):
        w = state.tau[:, q] / state.sigma2[q]
        resid_q = state.resid[:, q] + state.mu[q]
        v_n = 1.0 / (1.0 / hyper.sigma2_mu + w.sum())
        m_n = v_n * (w @ resid_q)
        new = m_n + np.sqrt(v_n) * rng.standard_normal()
        state.resid[:, q] -= new - state.mu[q]
        state.mu[q] = new


def draw_coefficient_row(resid_q, tau_q, sigma2_q, X, prior_prec, rng):
    """Multivariate normal draw for one row of a coefficient matrix.

    Precision = sum_i (tau_iq / sigma2_q) x_i x_i^T + diag(prior_prec);
    mean solves the usual normal equations.
    """
    w = tau_q / sigma2_q
    prec = (X * w[:, None]).T @ X + np.diag(prior_prec)
    b = X.T @ (w * resid_q)
    chol = np.linalg.cholesky(prec)
    mean = np.linalg.solve(prec, b)
    z = rng.standard_normal(prior_prec.shape[0])
    return mean + np.linalg.solve(chol.T, z)


def update_A_block(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                   rng: np.random.Generator) -> None:
    if state.S == 0:
        return
    X = data.X
    for q in range(state.Q):
        resid_q = state.resid[:, q] + X @ state.A[q]
        prior_prec = 1.0 / (state.gamma_alpha[q] * state.nu_alpha[q])
        new_row = draw_coefficient_row(
            resid_q, state.tau[:, q], state.sigma2[q], X, prior_prec, rng
        )
        state.resid[:, q] = resid_q - X @ new_row
        state.A[q] = new_row
    lo = spike_slab_log_odds(state.A, state.nu_alpha, hyper.nu0, state.rho_alpha)
    state.gamma_alpha = np.where(
        bernoulli_from_log_odds(lo, rng), 1.0, hyper.nu0
    )
    state.nu_alpha = draw_inverse_gamma(
        np.full_like(state.A, hyper.a_nu + 0.5),
        hyper.b_nu + state.A ** 2 / (2.0 * state.gamma_alpha),
        rng,
    )
    n_slab = float(np.sum(state.gamma_alpha == 1.0))
    state.rho_alpha = float(
        rng.beta(hyper.a_rho + n_slab, hyper.b_rho + state.A.size - n_slab)
    )


def _log_abs_det_and_radius(B: np.ndarray) -> tuple[float, float]:
    lam = np.linalg.eigvals(B)
    radius = float(np.max(np.abs(lam))) if lam.size else 0.0
    one_minus = 1.0 - lam
    if np.any(np.abs(one_minus) < 1e-300):
        return -np.inf, radius
    return float(np.sum(np.log(np.abs(one_minus)))), radius


def update_B_entries(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                     rng: np.random.Generator) -> tuple[int, int]:
    """Random-scan Metropolis-Hastings over the off-diagonal entries of B.

    The target includes the change-of-variable factor |det(I - B)|^n and
    a hard rejection of proposals with spectral radius >= 1. Returns
    (accepted, proposed) for step-size adaptation.
    """
    Q, n = state.Q, data.n
    Y = data.Y
    W = state.tau / state.sigma2[None, :]          # (n, Q)
    wyy = W.T @ (Y ** 2)                           # wyy[q, q'] = sum_i W_iq Y_iq'^2
    wry = (W * state.resid).T @ Y                  # wry[q, q'] = sum_i W_iq r_iq Y_iq'
    logdet, _ = _log_abs_det_and_radius(state.B)

    pairs = [(q, qp) for q in range(Q) for qp in range(Q) if q != qp]
    order = rng.permutation(len(pairs))
    accepted = 0
    for idx in order:
        q, qp = pairs[idx]
        b_old = state.B[q, qp]
        b_new = b_old + state.b_step * rng.standard_normal()
        d = b_new - b_old
        state.B[q, qp] = b_new
        logdet_new, radius = _log_abs_det_and_radius(state.B)
        if radius >= 1.0:
            state.B[q, qp] = b_old
            continue
        gv = state.gamma_beta[q, qp] * state.nu_beta[q, qp]
        log_ratio = (
            -0.5 * d * d * wyy[q, qp] + d * wry[q, qp]
            - (b_new * b_new - b_old * b_old) / (2.0 * gv)
            + n * (logdet_new - logdet)
        )
        if np.log(rng.random()) < log_ratio:
            accepted += 1
            logdet = logdet_new
            state.resid[:, q] -= d * Y[:, qp]
            wry[q, :] = (W[:, q] * state.resid[:, q]) @ Y
        else:
            state.B[q, qp] = b_old

    off = ~np.eye(Q, dtype=bool)
    lo = spike_slab_log_odds(state.B, state.nu_beta, hyper.nu0, state.rho_beta)
    gamma_new = np.where(bernoulli_from_log_odds(lo, rng), 1.0, hyper.nu0)
    state.gamma_beta = np.where(off, gamma_new, state.gamma_beta)
    nu_new = draw_inverse_gamma(
        np.full_like(state.B, hyper.a_nu + 0.5),
        hyper.b_nu + state.B ** 2 / (2.0 * state.gamma_beta),
        rng,
    )
    state.nu_beta = np.where(off, nu_new, state.nu_beta)
    n_slab = float(np.sum(state.gamma_beta[off] == 1.0))
    state.rho_beta = float(
        rng.beta(hyper.a_rho + n_slab, hyper.b_rho + off.sum() - n_slab)
    )
    return accepted, len(pairs)


def update_L_rows(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                  rng: np.random.Generator) -> None:
    act = state.active_columns()
    if act.size == 0:
        return
    for q in range(state.Q):
        K = act[state.delta[q, act] == 1]
        if K.size == 0:
            continue
        Ck = state.C[:, K]
        tq = state.tau[:, q]
        resid_q = state.resid[:, q] + Ck @ state.L[q, K]
        prec = (Ck * tq[:, None]).T @ Ck + np.eye(K.size) / state.kappa
        b = Ck.T @ (tq * resid_q)
        mean = np.linalg.solve(prec, b)
        chol = np.linalg.cholesky(prec / state.sigma2[q])
        new = mean + np.linalg.solve(chol.T, rng.standard_normal(K.size))
        state.L[q, K] = new
        state.resid[:, q] = resid_q - Ck @ new


def loading_conditional(state: SamplerState, q: int, p: int) -> tuple[float, float]:
    """Posterior (mean, precision-scale Vinv) of L_qp given everything else.

    The conditional is N(mean, sigma2_q / Vinv); the residual excludes the
    (q, p) contribution.
    """
    r = state.resid[:, q] + state.L[q, p] * state.C[:, p]
    tq = state.tau[:, q]
    cp = state.C[:, p]
    v_inv = float(tq @ (cp * cp)) + 1.0 / state.kappa
    mean = float(tq @ (cp * r)) / v_inv
    return mean, v_inv


def log_marginal_gain(state: SamplerState, q: int, p: int) -> float:
    """Log marginal-likelihood gain of including L_qp, with L_qp integrated out."""
    mean, v_inv = loading_conditional(state, q, p)
    return (
        -0.5 * np.log(state.kappa * v_inv)
        + mean * mean * v_inv / (2.0 * state.sigma2[q])
    )


def update_delta(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                 rng: np.random.Generator) -> None:
    """Flip sub-pivot support indicators via the collapsed conditional odds.

    A 0 -> 1 flip draws the loading from its conditional normal; a
    1 -> 0 flip zeroes it.
    """
    for p in state.active_columns():
        zeta = state.zeta[p]
        for q in range(state.pivot[p] + 1, state.Q):
            mean, v_inv = loading_conditional(state, q, p)
            if zeta <= 0.0:
                include = False
            elif zeta >= 1.0:
                include = True
            else:
                lo = (
                    np.log(zeta) - np.log1p(-zeta)
                    - 0.5 * np.log(state.kappa * v_inv)
                    + mean * mean * v_inv / (2.0 * state.sigma2[q])
                )
                include = bernoulli_from_log_odds(lo, rng)
            r = state.resid[:, q] + state.L[q, p] * state.C[:, p]
            if include:
                new = mean + np.sqrt(state.sigma2[q] / v_inv) * rng.standard_normal()
                state.delta[q, p] = 1
                state.L[q, p] = new
            else:
                state.delta[q, p] = 0
                state.L[q, p] = 0.0
            state.resid[:, q] = r - state.L[q, p] * state.C[:, p]


def update_kappa(state: SamplerState, hyper: Hyperparameters,
                 rng: np.random.Generator) -> None:
    d_total = float(state.delta.sum())
    scale_term = 0.5 * float(
        np.sum(state.delta * state.L ** 2 / state.sigma2[:, None])
    )
    state.kappa = float(
        draw_inverse_gamma(hyper.a_kappa + 0.5 * d_total,
                           hyper.b_kappa + scale_term, rng)
    )


def update_zeta(state: SamplerState, hyper: Hyperparameters,
                rng: np.random.Generator) -> None:
    P = state.P_max
    for p in state.active_columns():
        d_p = int(state.delta[:, p].sum())
        ell = int(state.pivot[p]) + 1          # 1-based pivot row
        alpha = state.a1 * state.a2 / P + d_p - 1.0
        beta = state.a2 + state.Q - ell - d_p + 1.0
        draw = rng.beta(max(alpha, 1e-12), max(beta, 1e-12))
        state.zeta[p] = float(np.clip(draw, ZETA_CLIP, 1.0 - ZETA_CLIP))


def _log_target_a(state: SamplerState, hyper: Hyperparameters,
                  a1: float, a2: float) -> float:
    total = float(log_inverse_gamma_pdf(a1, hyper.b1, hyper.c1))
    total += float(log_inverse_gamma_pdf(a2, hyper.b2, hyper.c2))
    act = state.active_columns()
    if act.size:
        total += float(np.sum(
            log_beta_pdf(state.zeta[act], a1 * a2 / state.P_max, a2)
        ))
    return total


def update_a1_a2(state: SamplerState, hyper: Hyperparameters,
                 rng: np.random.Generator) -> int:
    """Coordinate-wise log-scale random-walk MH on the beta hyperparameters."""
    accepted = 0
    for which in (0, 1):
        a1, a2 = state.a1, state.a2
        cur = a1 if which == 0 else a2
        prop = cur * np.exp(state.a_step * rng.standard_normal())
        new1, new2 = (prop, a2) if which == 0 else (a1, prop)
        log_ratio = (
            _log_target_a(state, hyper, new1, new2)
            - _log_target_a(state, hyper, a1, a2)
            + np.log(prop) - np.log(cur)
        )
        if np.log(rng.random()) < log_ratio:
            state.a1, state.a2 = new1, new2
            accepted += 1
    return accepted


def update_C(state: SamplerState, data: Dataset, hyper: Hyperparameters,
             rng: np.random.Generator) -> None:
    act = state.active_columns()
    if act.size == 0:
        return
    k = act.size
    Lk = state.L[:, act]                              # (Q, k)
    w = state.tau / state.sigma2[None, :]             # (n, Q)
    resid_full = state.resid + state.C[:, act] @ Lk.T
    prec = np.eye(k)[None, :, :] + np.einsum(
        "iq,qk,ql->ikl", w, Lk, Lk, optimize=True
    )
    b = (w * resid_full) @ Lk                         # (n, k)
    cov = np.linalg.inv(prec)
    mean = np.einsum("ikl,il->ik", cov, b)
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((data.n, k))
    new = mean + np.einsum("ikl,il->ik", chol, z)
    state.C[:, act] = new
    state.resid = resid_full - new @ Lk.T


def update_tau(state: SamplerState, data: Dataset, hyper: Hyperparameters,
               rng: np.random.Generator) -> None:
    r = np.maximum(np.abs(state.resid), RESIDUAL_FLOOR)
    mean = np.sqrt(state.sigma2)[None, :] / (2.0 * r)
    state.tau = draw_inverse_gaussian(mean, 0.25, rng)


def update_sigma2(state: SamplerState, data: Dataset, hyper: Hyperparameters,
                  rng: np.random.Generator) -> None:
    n = data.n
    shape = np.full(state.Q, hyper.a_sigma + 0.5 * n)
    scale = hyper.b_sigma + 0.5 * np.sum(state.resid ** 2 * state.tau, axis=0)
    if hyper.exact_sigma2_conditional:
        # include the kappa*sigma2_q prior scale of the active loadings
        shape += 0.5 * state.delta.sum(axis=1)
        scale += np.sum(state.delta * state.L ** 2, axis=1) / (2.0 * state.kappa)
    state.sigma2 = draw_inverse_gamma(shape, scale, rng)


def log_joint(state: SamplerState, data: Dataset, hyper: Hyperparameters) -> float:
    """Log posterior density (up to a constant) at the current state."""
    n, Q = data.n, state.Q
    w = state.tau / state.sigma2[None, :]
    total = float(np.sum(0.5 * np.log(w / (2.0 * np.pi))
                         - 0.5 * w * state.resid ** 2))
    logdet, radius = _log_abs_det_and_radius(state.B)
    if radius >= 1.0:
        return -np.inf
    total += n * logdet
    total += float(np.sum(log_normal_pdf(state.mu, 0.0, hyper.sigma2_mu)))
    for coeff, gamma, nu, rho, count in (
        (state.A, state.gamma_alpha, state.nu_alpha, state.rho_alpha, state.A.size),
        (state.B[~np.eye(Q, dtype=bool)],
         state.gamma_beta[~np.eye(Q, dtype=bool)],
         state.nu_beta[~np.eye(Q, dtype=bool)],
         state.rho_beta, Q * (Q - 1)),
    ):
        if count == 0:
            continue
        total += float(np.sum(log_normal_pdf(coeff, 0.0, gamma * nu)))
        n_slab = float(np.sum(gamma == 1.0))
        total += n_slab * np.log(rho) + (count - n_slab) * np.log1p(-rho)
        total += float(np.sum(log_inverse_gamma_pdf(nu, hyper.a_nu, hyper.b_nu)))
    total += float(log_beta_pdf(state.rho_alpha, hyper.a_rho, hyper.b_rho))
    total += float(log_beta_pdf(state.rho_beta, hyper.a_rho, hyper.b_rho))
    act = state.active_columns()
    p_star = act.size
    for p in act:
        piv = state.pivot[p]
        inc = state.delta[:, p].astype(bool)
        inc_vals = state.L[inc, p]
        total += float(np.sum(
            log_normal_pdf(inc_vals, 0.0, state.kappa * state.sigma2[inc])
        ))
        below = np.arange(piv + 1, Q)
        d_below = state.delta[below, p]
        total += float(np.sum(np.where(d_below == 1,
                                       np.log(state.zeta[p]),
                                       np.log1p(-state.zeta[p]))))
        total -= np.log(Q - p_star + 1)          # uniform pivot prior
        total += float(log_beta_pdf(state.zeta[p],
                                    state.a1 * state.a2 / state.P_max, state.a2))
        total += float(np.sum(log_normal_pdf(state.C[:, p], 0.0, 1.0)))
    total += float(log_inverse_gamma_pdf(state.kappa, hyper.a_kappa, hyper.b_kappa))
    total += float(log_inverse_gamma_pdf(state.a1, hyper.b1, hyper.c1))
    total += float(log_inverse_gamma_pdf(state.a2, hyper.b2, hyper.c2))
    total += float(np.sum(log_inverse_gamma_pdf(state.tau, 1.0, 1.0 / 8.0)))
    total += float(np.sum(log_inverse_gamma_pdf(state.sigma2,
                                                hyper.a_sigma, hyper.b_sigma)))
    return total
