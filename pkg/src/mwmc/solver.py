"""Weighted nuclear-norm completion by ADMM with singular value thresholding.

The problem

    minimise ||QU Z QV||_*  subject to  ||P_p(Z) - Y||_F <= e

is rewritten in the variable ``W = QU Z QV``.  The objective becomes the
plain nuclear norm of ``W`` and the data constraint becomes the affine-ball
set ``C = {W : ||M(W) - y|| <= e}`` with ``M(W) = (QU^-1 W QV^-1)[observed]``.
ADMM alternates SVT on ``W`` with the Euclidean projection onto ``C``; the
projection uses one eigendecomposition of the Gram matrix ``M M^T`` that is
computed once per solve.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SUCCESS_NRE = 1e-4


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    penalty_rho: float = 1.0
    # rho is doubled or halved when one residual exceeds the other by this ratio
    rho_balance: float = 10.0
    rho_factor: float = 2.0
    # over-relaxation parameter in (0, 2); 1 is plain ADMM
    relaxation: float = 1.6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.primal_tol <= 0 or self.dual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.penalty_rho <= 0:
            raise ValueError("penalty_rho must be positive")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")


@dataclass(frozen=True)
class Solution:
    X_hat: np.ndarray
    iters: int
    converged: bool
    final_residuals: tuple
    objective: float


def svt(M, tau):
    """Singular value thresholding ``U max(S - tau, 0) V^T``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    U, s, Vt = np.linalg.svd(np.asarray(M, dtype=float), full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k]


def nre(X_hat, X):
    """Normalised recovery error ``||X_hat - X||_F / ||X||_F``."""
    X_hat = np.asarray(X_hat, dtype=float)
    X = np.asarray(X, dtype=float)
    if X_hat.shape != X.shape:
        raise ValueError(f"shape mismatch: {X_hat.shape} vs {X.shape}")
    denom = np.linalg.norm(X)
    if denom == 0:
        raise ValueError("reference matrix is zero")
    return float(np.linalg.norm(X_hat - X) / denom)


class _BallProjector:
    """Euclidean projection onto ``{W : ||M(W) - y|| <= e}``."""

    def __init__(self, QU_inv, QV_inv, rows, cols, y, e):
        self.QU_inv, self.QV_inv = QU_inv, QV_inv
        self.rows, self.cols = rows, cols
        self.y, self.e = y, e
        QU2 = QU_inv @ QU_inv
        QV2 = QV_inv @ QV_inv
        G = QU2[np.ix_(rows, rows)] * QV2[np.ix_(cols, cols)]
        self.g, self.vecs = np.linalg.eigh(G)
        self.n = QU_inv.shape[0]

    def forward(self, W):
        return (self.QU_inv @ W @ self.QV_inv)[self.rows, self.cols]

    def adjoint(self, v):
        F = np.zeros((self.n, self.n))
        F[self.rows, self.cols] = v
        return self.QU_inv @ F @ self.QV_inv

    def __call__(self, W0):
        r0 = self.forward(W0) - self.y
        c = self.vecs.T @ r0
        if self.e == 0:
            return W0 - self.adjoint(self.vecs @ (c / self.g))
        norm0 = np.linalg.norm(r0)
        if norm0 <= self.e:
            return W0
        g = self.g

        def excess(mu):
            return np.linalg.norm(c / (1.0 + mu * g)) - self.e

        hi = (norm0 / self.e - 1.0) / g[0]
        mu = brentq(excess, 0.0, hi, xtol=1e-15 * max(hi, 1.0), rtol=4 * np.finfo(float).eps)
        resid = self.vecs @ (c / (1.0 + mu * g))
        return W0 - mu * self.adjoint(resid)


def solve_weighted(sample, pattern, QU, QV, e=None, cfg=None):
    """Solve the weighted completion problem.

    Parameters
    ----------
    sample : NoisySample
    pattern : SamplingPattern
    QU, QV : WeightedProjector
    e : float, optional
        Radius of the data-fit ball; defaults to ``sample.noise_bound_e``.
    cfg : SolverConfig, optional

    Returns
    -------
    Solution
        ``X_hat`` always satisfies the data constraint exactly (it is the
        image of the projection step).  When the iteration does not converge
        the iterate with the smallest relative primal residual is returned.
    """
    cfg = cfg or SolverConfig()
    e = sample.noise_bound_e if e is None else float(e)
    if e < 0:
        raise ValueError("e must be non-negative")
    mask = np.asarray(pattern.mask)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("empty sampling mask: nothing observed")

    Y = np.asarray(sample.Y, dtype=float)
    scale = float(np.max(np.abs(Y[rows, cols])))
    if scale == 0:
        scale = 1.0
    y = Y[rows, cols] / scale
    proj = _BallProjector(QU.Q_inv, QV.Q_inv, rows, cols, y, e / scale)

    Y0 = np.zeros_like(Y)
    Y0[rows, cols] = y
    V = proj(QU.Q @ Y0 @ QV.Q)
    Udual = np.zeros_like(V)
    rho = cfg.penalty_rho
    alpha = cfg.relaxation

    best = (np.inf, V, (np.inf, np.inf))
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        W = svt(V - Udual, 1.0 / rho)
        V_old = V
        W_relaxed = alpha * W + (1.0 - alpha) * V_old
        V = proj(W_relaxed + Udual)
        Udual = Udual + W_relaxed - V

        r_primal = np.linalg.norm(W - V)
        r_dual = rho * np.linalg.norm(V - V_old)
        scale_p = max(np.linalg.norm(W), np.linalg.norm(V), np.finfo(float).tiny)
        scale_d = max(rho * np.linalg.norm(Udual), np.finfo(float).tiny)
        rel = (r_primal / scale_p, r_dual / scale_d)
        if rel[0] < best[0]:
            best = (rel[0], V, rel)
        if rel[0] <= cfg.primal_tol and rel[1] <= cfg.dual_tol:
            converged = True
            best = (rel[0], V, rel)
            break
        if r_primal > cfg.rho_balance * r_dual:
            rho *= cfg.rho_factor
            Udual /= cfg.rho_factor
        elif r_dual > cfg.rho_balance * r_primal:
            rho /= cfg.rho_factor
            Udual *= cfg.rho_factor

    _, V_best, residuals = best
    X_hat = scale * (QU.Q_inv @ V_best @ QV.Q_inv)
    objective = scale * float(np.linalg.svd(V_best, compute_uv=False).sum())
    return Solution(X_hat=X_hat, iters=it, converged=converged,
                    final_residuals=(float(residuals[0]), float(residuals[1])),
                    objective=objective)
