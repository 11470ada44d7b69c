"""Random-variate kernels and spike-and-slab helpers used by the sampler.

All draws go through an explicit numpy Generator, so runs are
bit-reproducible given a seed, and odds are carried in log space because
the slab exponent routinely exceeds a few hundred.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

NU0_DEFAULT = 2.5e-4


@dataclass
class Hyperparameters:
    """Prior hyperparameters; defaults follow the simulation-study settings."""

    a_nu: float = 1.0
    b_nu: float = 1.0
    a_rho: float = 1.0
    b_rho: float = 1.0
    a_sigma: float = 1.0
    b_sigma: float = 1.0
    a_kappa: float = 1.0
    b_kappa: float = 1.0
    nu0: float = NU0_DEFAULT
    sigma2_mu: float = 100.0
    b1: float = 6.0
    c1: float | None = None       # default 6 (P_max - 1) / P_max
    b2: float = 6.0
    c2: float | None = None
    P_max: int = 0
    exact_sigma2_conditional: bool = False

    @classmethod
    def default(cls, Q: int, **overrides) -> "Hyperparameters":
        hyper = cls(P_max=max(Q - 1, 0), **overrides)
        hyper.resolve()
        return hyper

    def resolve(self) -> None:
        if self.c1 is None:
            self.c1 = 6.0 * (self.P_max - 1) / self.P_max if self.P_max else 6.0
        if self.c2 is None:
            self.c2 = self.c1

    def validate(self, Q: int | None = None) -> None:
        self.resolve()
        for f in fields(self):
            if f.name in ("P_max", "exact_sigma2_conditional"):
                continue
            if getattr(self, f.name) <= 0:
                raise ValueError(f"hyperparameter {f.name} must be positive")
        if not 0 < self.nu0 < 1:
            raise ValueError("nu0 must lie in (0, 1)")
        if self.P_max < 0:
            raise ValueError("P_max must be nonnegative")
        if Q is not None and not self.P_max < Q:
            raise ValueError("P_max must be smaller than Q")


def draw_inverse_gamma(shape, scale, rng: np.random.Generator):
    """Inverse-gamma draw(s): density proportional to x^{-shape-1} exp(-scale/x)."""
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if np.any(shape <= 0) or np.any(scale <= 0):
        raise ValueError("inverse-gamma parameters must be positive")
    return scale / rng.gamma(shape, 1.0, size=np.broadcast_shapes(shape.shape, scale.shape))


def draw_inverse_gaussian(mean, shape, rng: np.random.Generator):
    """Inverse-Gaussian (Wald) draws with E[X] = mean and shape parameter lambda.

    Michael-Schucany-Haas transformation: square a standard normal, solve
    the quadratic for the smaller root, and accept it with probability
    mean / (mean + root).
    """
    mean = np.asarray(mean, dtype=float)
    lam = np.asarray(shape, dtype=float)
    if np.any(mean <= 0) or np.any(lam <= 0):
        raise ValueError("inverse-Gaussian parameters must be positive")
    out_shape = np.broadcast_shapes(mean.shape, lam.shape)
    mean = np.broadcast_to(mean, out_shape)
    lam = np.broadcast_to(lam, out_shape)
    v = rng.standard_normal(out_shape) ** 2
    w = mean * v
    # smaller root written as 4*lam*w / (w + s)^2 to avoid the
    # catastrophic cancellation of w - sqrt(w^2 + 4*lam*w) at large w
    w = np.maximum(w, np.finfo(float).tiny)
    s = np.sqrt(w * (4.0 * lam + w))
    x1 = mean * 4.0 * lam * w / (w + s) ** 2
    take_other = rng.random(out_shape) > mean / (mean + x1)
    x = np.where(take_other, mean * mean / x1, x1)
    if x.ndim == 0:
        return float(x)
    return x


def draw_laplace_via_mixture(sigma2: float, rng: np.random.Generator, size=None):
    """Draw (e, tau) with tau ~ InverseGamma(1, 1/8), e | tau ~ N(0, sigma2/tau).

    Marginally e is Laplace with scale 2*sqrt(sigma2), i.e. Var(e) = 8*sigma2.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    tau = draw_inverse_gamma(np.ones(size if size is not None else ()), 1.0 / 8.0, rng)
    e = rng.standard_normal(np.shape(tau)) * np.sqrt(sigma2 / tau)
    return e, tau


def spike_slab_log_odds(value, nu, nu0: float, rho: float):
    """Log posterior odds of slab (gamma = 1) versus spike (gamma = nu0).

    log odds = log(sqrt(nu0) rho / (1 - rho)) + (1 - nu0) value^2 / (2 nu0 nu).
    Degenerate rho returns -inf / +inf.
    """
    value = np.asarray(value, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("slab variance nu must be positive")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if rho == 0.0:
        return np.full(value.shape, -np.inf) if value.ndim else -np.inf
    if rho == 1.0:
        return np.full(value.shape, np.inf) if value.ndim else np.inf
    lo = 0.5 * np.log(nu0) + np.log(rho) - np.log1p(-rho) \
        + (1.0 - nu0) * value ** 2 / (2.0 * nu0 * nu)
    return float(lo) if np.ndim(lo) == 0 else lo


def bernoulli_from_log_odds(log_odds, rng: np.random.Generator):
    """Draw indicator(s) with P(1) = odds / (1 + odds), stable in log space."""
    from scipy.special import expit

    lo = np.asarray(log_odds, dtype=float)
    draws = rng.random(lo.shape) < expit(lo)
    if lo.ndim == 0:
        return bool(draws)
    return draws


def log_normal_pdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def log_inverse_gamma_pdf(x, shape, scale):
    from scipy.special import gammaln

    x = np.asarray(x, dtype=float)
    return shape * np.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x


def log_beta_pdf(x, a, b):
    from scipy.special import betaln

    x = np.asarray(x, dtype=float)
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)
