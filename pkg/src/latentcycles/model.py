"""Linear structural causal model with cycles and latent confounders.

The data-generating process is

    Y = mu + B Y + A X + L C + E,

with a stable effect matrix B (spectral radius < 1), Gaussian latent
confounders C ~ N(0, I), Laplace errors E, and a factor-loading matrix L
restricted to the unordered generalized lower triangular (UGLT) form:
every non-zero column has a pivot row (first non-zero entry) and pivot
rows are pairwise distinct.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STABILITY_MARGIN = 1e-9
PIVOT_TOL = 1e-12


class StabilityError(ValueError):
    """Raised when an effect matrix violates the spectral-radius bound."""


class ValidationError(ValueError):
    """Raised when inputs violate a structural constraint of the model."""


def spectral_radius(B: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {B.shape}")
    if B.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(B))))


def check_stability(B: np.ndarray, margin: float = STABILITY_MARGIN) -> bool:
    """True iff the spectral radius of B is below 1 - margin."""
    return spectral_radius(B) < 1.0 - margin


def check_uglt(L: np.ndarray, tol: float = PIVOT_TOL) -> tuple[bool, list[int]]:
    """Pivot rows of the non-zero columns of L and whether they are distinct.

    All-zero columns are skipped. Returns (is_uglt, pivots) where pivots[k]
    is the row index of the first entry with |L| > tol in the k-th non-zero
    column.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2:
        raise ValidationError("L must be a matrix")
    pivots: list[int] = []
    for p in range(L.shape[1]):
        nz = np.nonzero(np.abs(L[:, p]) > tol)[0]
        if nz.size == 0:
            continue
        pivots.append(int(nz[0]))
    return len(set(pivots)) == len(pivots), pivots


def lu_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M @ x = rhs by LU factorization with partial pivoting."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValidationError("matrix must be square")
    b = np.array(rhs, dtype=float)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    perm = np.arange(n)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(M[k:, k])))
        if np.abs(M[piv, k]) < 1e-300:
            raise np.linalg.LinAlgError("singular matrix in LU solve")
        if piv != k:
            M[[k, piv]] = M[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
        M[k + 1:, k] /= M[k, k]
        M[k + 1:, k + 1:] -= np.outer(M[k + 1:, k], M[k, k + 1:])
    x = b[perm]
    for k in range(1, n):  # forward substitution, unit lower triangle
        x[k] -= M[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # back substitution
        x[k] = (x[k] - M[k, k + 1:] @ x[k + 1:]) / M[k, k]
    return x[:, 0] if squeeze else x


@dataclass
class CausalParameters:
    """Ground-truth or current model parameters."""

    mu: np.ndarray          # (Q,)
    A: np.ndarray           # (Q, S)
    B: np.ndarray           # (Q, Q), zero diagonal
    L: np.ndarray           # (Q, P)
    sigma2: np.ndarray      # (Q,), marginal error variance is 8 * sigma2

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.asarray(self.B, dtype=float)
        self.L = np.atleast_2d(np.asarray(self.L, dtype=float))
        self.sigma2 = np.asarray(self.sigma2, dtype=float)

    @property
    def Q(self) -> int:
        return self.mu.shape[0]

    @property
    def S(self) -> int:
        return self.A.shape[1] if self.A.size else 0

    def validate(self, margin: float = STABILITY_MARGIN) -> None:
        Q = self.Q
        if self.B.shape != (Q, Q):
            raise ValidationError("B must be Q x Q")
        if np.any(np.diag(self.B) != 0.0):
            raise ValidationError("B must have a zero diagonal (no self-loops)")
        if not check_stability(self.B, margin):
            raise StabilityError(
                f"B is unstable: spectral radius {spectral_radius(self.B):.6f}"
            )
        if np.any(self.sigma2 <= 0):
            raise ValidationError("sigma2 entries must be positive")
        if self.L.shape[0] != Q:
            raise ValidationError("L must have Q rows")
        ok, pivots = check_uglt(self.L)
        if not ok:
            raise ValidationError(f"L violates UGLT: pivots {pivots} not distinct")
        active = [p for p in range(self.L.shape[1]) if np.any(self.L[:, p] != 0)]
        if active and np.linalg.matrix_rank(self.L[:, active]) < len(active):
            raise ValidationError("active columns of L are rank deficient")


@dataclass
class Dataset:
    """Observations of the primary variables and covariates."""

    Y: np.ndarray   # (n, Q)
    X: np.ndarray   # (n, S); S may be 0

    def __post_init__(self):
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(self.Y.shape[0], -1)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def Q(self) -> int:
        return self.Y.shape[1]

    @property
    def S(self) -> int:
        return self.X.shape[1] if self.X.size else 0

    def validate(self) -> None:
        if self.n < 1:
            raise ValidationError("dataset must contain at least one observation")
        if not np.all(np.isfinite(self.Y)) or not np.all(np.isfinite(self.X)):
            raise ValidationError("dataset contains non-finite entries")
        if self.X.shape[0] not in (0, self.n) and self.X.size:
            raise ValidationError("Y and X row counts differ")


@dataclass
class GroundTruthGraph:
    """Boolean supports of the true edges."""

    b_support: np.ndarray   # (Q, Q)
    a_support: np.ndarray   # (Q, S)
    l_support: np.ndarray   # (Q, P*)
    p_star: int

    def __post_init__(self):
        self.b_support = np.asarray(self.b_support, dtype=bool)
        self.a_support = np.atleast_2d(np.asarray(self.a_support, dtype=bool))
        self.l_support = np.atleast_2d(np.asarray(self.l_support, dtype=bool))
        self.p_star = int(self.p_star)

    def validate(self) -> None:
        if np.any(np.diag(self.b_support)):
            raise ValidationError("b_support has a self-loop")
        cols = [tuple(self.l_support[:, p]) for p in range(self.l_support.shape[1])]
        for p, col in enumerate(cols):
            if sum(col) < 2:
                raise ValidationError(
                    f"confounder column {p} has fewer than two children"
                )
        if len(set(cols)) != len(cols):
            raise ValidationError("two confounders share the same child set")
        if self.p_star != self.l_support.shape[1]:
            raise ValidationError("p_star does not match l_support width")


def _draw_covariates(spec, n: int, S: int, rng: np.random.Generator) -> np.ndarray:
    if S == 0:
        return np.zeros((n, 0))
    if callable(spec):
        X = np.asarray(spec(n, S, rng), dtype=float)
        if X.shape != (n, S):
            raise ValidationError(f"covariate_spec returned shape {X.shape}")
        return X
    if spec == "gaussian":
        return rng.standard_normal((n, S))
    if spec == "bernoulli":
        return rng.integers(0, 2, size=(n, S)).astype(float)
    raise ValidationError(f"unknown covariate spec {spec!r}")


def generate_data(
    params: CausalParameters,
    n: int,
    covariate_spec="gaussian",
    rng: np.random.Generator | None = None,
    return_latents: bool = False,
):
    """Sample a dataset from the structural model.

    X is drawn per covariate_spec, C ~ N(0, I), E_q is Laplace with scale
    2*sigma_q, and Y solves (I - B) Y = mu + A X + L C + E exactly.
    """
    if rng is None:
        rng = np.random.default_rng()
    params.validate()
    Q, S, P = params.Q, params.S, params.L.shape[1]
    X = _draw_covariates(covariate_spec, n, S, rng)
    C = rng.standard_normal((n, P))
    scale = 2.0 * np.sqrt(params.sigma2)
    E = rng.laplace(0.0, scale, size=(n, Q))
    rhs = params.mu[None, :] + C @ params.L.T + E
    if S:
        rhs = rhs + X @ params.A.T
    Y = lu_solve(np.eye(Q) - params.B, rhs.T).T
    data = Dataset(Y=Y, X=X)
    truth = ground_truth_from_params(params)
    if return_latents:
        return data, truth, C, E
    return data, truth


def ground_truth_from_params(params: CausalParameters) -> GroundTruthGraph:
    active = [p for p in range(params.L.shape[1]) if np.any(params.L[:, p] != 0)]
    return GroundTruthGraph(
        b_support=params.B != 0,
        a_support=params.A != 0,
        l_support=params.L[:, active] != 0,
        p_star=len(active),
    )


def neumann_inverse(B: np.ndarray, tol: float = 1e-10, max_terms: int = 10_000) -> np.ndarray:
    """(I - B)^{-1} via the geometric series sum_k B^k; cross-check oracle."""
    if not check_stability(B, margin=0.0):
        raise StabilityError("Neumann series diverges for unstable B")
    Q = B.shape[0]
    total = np.eye(Q)
    term = np.eye(Q)
    for _ in range(max_terms):
        term = term @ B
        total += term
        if np.max(np.abs(term)) < tol:
            break
    return total


def scenario_parameters(name: str) -> CausalParameters:
    """Fixed simulation truths: a 5-node DAG ("I") and a 7-node graph with
    two disjoint 3-cycles ("II"), each with two latent confounders and
    sigma2 = 1/16 (error variance 0.5)."""
    name = name.upper()
    if name == "I":
        Q, S = 5, 2
        B = np.zeros((Q, Q))
        B[0, 1], B[2, 3], B[2, 4], B[3, 0] = 0.5, 0.4, -0.7, 0.3
        L = np.zeros((Q, 2))
        L[1, 0], L[2, 0] = 0.5, 0.3
        L[3, 1], L[4, 1] = -0.5, 0.4
        mu = np.array([0.79, -0.47, -0.26, 0.15, 0.82])
        A = np.column_stack([
            [-0.60, 0.80, 0.89, 0.32, 0.26],
            [-0.88, -0.59, -0.65, 0.37, -0.23],
        ])
    elif name == "II":
        Q, S = 7, 2
        B = np.zeros((Q, Q))
        B[0, 1], B[1, 3], B[4, 2], B[3, 0] = 0.5, -0.4, -0.7, 0.3
        B[3, 5], B[6, 4], B[5, 6], B[2, 6] = 0.5, 0.9, 0.4, 0.6
        L = np.zeros((Q, 2))
        L[1, 0], L[2, 0] = 0.4, 0.5
        L[3, 1], L[4, 1], L[5, 1] = -0.5, 0.4, 0.3
        mu = np.array([0.79, -0.47, -0.26, 0.15, 0.82, -0.60, 0.80])
        A = np.column_stack([
            [0.89, 0.32, 0.26, -0.88, -0.59, -0.65, 0.37],
            [-0.23, 0.54, 0.0, 0.44, 0.98, -0.24, 0.55],
        ])
    else:
        raise ValidationError(f"unknown scenario {name!r}; expected 'I' or 'II'")
    sigma2 = np.full(Q, 1.0 / 16.0)
    params = CausalParameters(mu=mu, A=A, B=B, L=L, sigma2=sigma2)
    params.validate()
    return params
