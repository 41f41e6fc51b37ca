"""Problem data: the low-rank truth, prior subspaces, weights, weighted
projectors and the projections onto the support of the truth."""

from dataclasses import dataclass

import numpy as np

from .linalg import build_transform, check_orthonormal, principal_angles, svd


@dataclass(frozen=True)
class LowRankModel:
    """Ground truth ``X`` split into its rank-``r`` part and a residual."""

    X: np.ndarray
    U_r: np.ndarray
    sigma: np.ndarray
    V_r: np.ndarray
    X_residual: np.ndarray

    @classmethod
    def from_matrix(cls, X, r):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError(f"X must be square, got shape {X.shape}")
        if not 1 <= r <= X.shape[0]:
            raise ValueError(f"rank must be in [1, {X.shape[0]}], got {r}")
        U, s, Vt = svd(X)
        U_r, V_r, sig = U[:, :r], Vt[:r].T, s[:r]
        if sig[-1] <= X.shape[0] * np.finfo(float).eps * sig[0]:
            raise ValueError(f"X has rank below {r}")
        X_r = (U_r * sig) @ V_r.T
        return cls(X=X, U_r=U_r, sigma=sig, V_r=V_r, X_residual=X - X_r)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def r(self):
        return self.sigma.size

    @property
    def X_r(self):
        return (self.U_r * self.sigma) @ self.V_r.T


@dataclass(frozen=True)
class PriorSubspaces:
    U_tilde: np.ndarray
    V_tilde: np.ndarray
    theta_u: np.ndarray
    theta_v: np.ndarray

    @classmethod
    def from_bases(cls, model, U_tilde, V_tilde):
        return cls(U_tilde=U_tilde, V_tilde=V_tilde,
                   theta_u=principal_angles(model.U_r, U_tilde),
                   theta_v=principal_angles(model.V_r, V_tilde))

    @property
    def r_prime(self):
        return self.U_tilde.shape[1]


def _as_weights(w, size, name):
    w = np.atleast_1d(np.asarray(w, dtype=float)).reshape(-1)
    if w.size != size:
        raise ValueError(f"{name} must have length {size}, got {w.size}")
    if np.any(~np.isfinite(w)) or np.any(w <= 0) or np.any(w > 1):
        raise ValueError(f"{name} entries must lie in (0, 1]")
    return w


@dataclass(frozen=True)
class WeightSpec:
    """Per-direction weights for the column side (``lambda``) and the row
    side (``gamma``).  The first ``r`` entries act on the prior directions
    paired with the truth, the remaining ``r' - r`` on the extra ones."""

    lambda1: np.ndarray
    lambda2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.lambda1).size
        extra = np.asarray(self.lambda2).size
        object.__setattr__(self, "lambda1", _as_weights(self.lambda1, r, "lambda1"))
        object.__setattr__(self, "gamma1", _as_weights(self.gamma1, r, "gamma1"))
        object.__setattr__(self, "lambda2", _as_weights(self.lambda2, extra, "lambda2"))
        object.__setattr__(self, "gamma2", _as_weights(self.gamma2, extra, "gamma2"))

    @classmethod
    def ones(cls, r, r_prime):
        return cls.constant(1.0, r, r_prime)

    @classmethod
    def constant(cls, value, r, r_prime, gamma=None):
        g = value if gamma is None else gamma
        return cls(np.full(r, value), np.full(r_prime - r, value),
                   np.full(r, g), np.full(r_prime - r, g))

    @property
    def r(self):
        return self.lambda1.size

    @property
    def r_prime(self):
        return self.lambda1.size + self.lambda2.size

    @property
    def lam(self):
        return np.concatenate([self.lambda1, self.lambda2])

    @property
    def gam(self):
        return np.concatenate([self.gamma1, self.gamma2])

    def as_dict(self):
        return {k: getattr(self, k).tolist() for k in ("lambda1", "lambda2", "gamma1", "gamma2")}


@dataclass(frozen=True)
class WeightedProjector:
    """``Q = U_tilde diag(w) U_tilde.T + (I - U_tilde U_tilde.T)`` and its inverse."""

    Q: np.ndarray
    Q_inv: np.ndarray
    weights: np.ndarray
    bundle: object = None

    @property
    def n(self):
        return self.Q.shape[0]


def make_weighted_projector(prior_basis, lambda1, lambda2=(), truth=None):
    """Weighted projector built from a prior basis.

    Parameters
    ----------
    prior_basis : (n, r') orthonormal array
    lambda1, lambda2 : weights for the first ``len(lambda1)`` columns and the
        remaining columns; entries in (0, 1].
    truth : optional (n, r) orthonormal basis.  When given, the block
        transform of :func:`mwmc.linalg.build_transform` is attached.  It is
        only meaningful if ``prior_basis`` is already aligned with ``truth``.
    """
    Ut = check_orthonormal(prior_basis, "prior_basis")
    n, rp = Ut.shape
    l1 = np.atleast_1d(np.asarray(lambda1, dtype=float))
    l2 = np.atleast_1d(np.asarray(lambda2, dtype=float))
    w = _as_weights(np.concatenate([l1, l2]), rp, "weights")
    P = Ut @ Ut.T
    Q = (Ut * w) @ Ut.T + (np.eye(n) - P)
    Q_inv = (Ut / w) @ Ut.T + (np.eye(n) - P)
    Q = 0.5 * (Q + Q.T)
    Q_inv = 0.5 * (Q_inv + Q_inv.T)
    bundle = None
    if truth is not None:
        bundle = build_transform(truth, Ut, w[:l1.size], w[l1.size:])
    return WeightedProjector(Q=Q, Q_inv=Q_inv, weights=w, bundle=bundle)


@dataclass(frozen=True)
class SupportProjector:
    """Projections onto the support of a rank-``r`` matrix with column space
    ``U_r`` and row space ``V_r``, and onto its orthogonal complement."""

    U_r: np.ndarray
    V_r: np.ndarray

    def _check(self, Z):
        Z = np.asarray(Z, dtype=float)
        n = self.U_r.shape[0]
        if Z.shape != (n, self.V_r.shape[0]):
            raise ValueError(f"expected shape {(n, self.V_r.shape[0])}, got {Z.shape}")
        return Z

    def project_T(self, Z):
        Z = self._check(Z)
        U, V = self.U_r, self.V_r
        UZ = U @ (U.T @ Z)
        return UZ + (Z @ V) @ V.T - (UZ @ V) @ V.T

    def project_T_perp(self, Z):
        Z = self._check(Z)
        U, V = self.U_r, self.V_r
        Y = Z - U @ (U.T @ Z)
        return Y - (Y @ V) @ V.T


def project_T(Z, S):
    return S.project_T(Z)


def project_T_perp(Z, S):
    return S.project_T_perp(Z)
