"""Mutable per-chain sampler state with a cached residual matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, check_stability, check_uglt


@dataclass
class SamplerState:
    """Everything one chain owns: parameters, indicators, latents, auxiliaries.

    ``resid`` caches Y - mu - X A^T - Y B^T - C L^T and is updated
    incrementally by every conditional update; ``recompute_residual``
    rebuilds it from scratch to stop floating-point drift.
    """

    mu: np.ndarray            # (Q,)
    A: np.ndarray             # (Q, S)
    B: np.ndarray             # (Q, Q)
    L: np.ndarray             # (Q, P_max)
    sigma2: np.ndarray        # (Q,)
    gamma_alpha: np.ndarray   # (Q, S), values in {nu0, 1}
    nu_alpha: np.ndarray      # (Q, S)
    rho_alpha: float
    gamma_beta: np.ndarray    # (Q, Q), off-diagonal meaningful
    nu_beta: np.ndarray       # (Q, Q)
    rho_beta: float
    delta: np.ndarray         # (Q, P_max) in {0, 1}
    pivot: np.ndarray         # (P_max,), row index or -1 for inactive columns
    zeta: np.ndarray          # (P_max,)
    kappa: float
    a1: float
    a2: float
    C: np.ndarray             # (n, P_max)
    tau: np.ndarray           # (n, Q)
    resid: np.ndarray = field(default=None, repr=False)
    b_step: float = 0.1
    a_step: float = 0.2

    @property
    def Q(self) -> int:
        return self.mu.shape[0]

    @property
    def S(self) -> int:
        return self.A.shape[1]

    @property
    def P_max(self) -> int:
        return self.L.shape[1]

    @property
    def n(self) -> int:
        return self.tau.shape[0]

    def active_columns(self) -> np.ndarray:
        return np.nonzero(self.pivot >= 0)[0]

    @property
    def p_star(self) -> int:
        return int(np.sum(self.pivot >= 0))

    @property
    def p_single(self) -> int:
        act = self.active_columns()
        if act.size == 0:
            return 0
        return int(np.sum(self.delta[:, act].sum(axis=0) == 1))

    def recompute_residual(self, data: Dataset) -> None:
        R = data.Y - self.mu[None, :] - data.Y @ self.B.T
        if self.S:
            R = R - data.X @ self.A.T
        act = self.active_columns()
        if act.size:
            R = R - self.C[:, act] @ self.L[:, act].T
        self.resid = R

    def check_invariants(self, nu0: float) -> None:
        assert np.all(np.diag(self.B) == 0.0), "B diagonal not zero"
        assert check_stability(self.B, margin=0.0), "B unstable"
        ok, pivots = check_uglt(self.L)
        assert ok, f"L pivots not distinct: {pivots}"
        act = self.active_columns()
        for p in act:
            piv = self.pivot[p]
            assert self.delta[piv, p] == 1, "pivot entry not included"
            assert not np.any(self.delta[:piv, p]), "entry above pivot"
        assert np.all((self.L == 0.0) | (self.delta == 1)), "L/delta mismatch"
        inact = np.setdiff1d(np.arange(self.P_max), act)
        assert not np.any(self.delta[:, inact]), "inactive column has support"
        vals = np.unique(self.gamma_alpha) if self.gamma_alpha.size else np.array([])
        assert all(v in (nu0, 1.0) for v in vals), "gamma_alpha values invalid"

    def snapshot(self) -> dict:
        """Copy of the quantities retained for posterior summaries."""
        return {
            "mu": self.mu.copy(),
            "A": self.A.copy(),
            "B": self.B.copy(),
            "L": self.L.copy(),
            "sigma2": self.sigma2.copy(),
            "gamma_alpha": self.gamma_alpha.copy(),
            "gamma_beta": self.gamma_beta.copy(),
            "delta": self.delta.copy(),
            "pivot": self.pivot.copy(),
            "kappa": float(self.kappa),
            "p_star": self.p_star,
        }
