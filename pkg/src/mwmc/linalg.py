"""Dense linear-algebra kernels: principal angles, aligned prior bases and
the block transforms that put a weighted projector in upper-triangular form.

All matrices are real and square-ambient (``n`` rows).  Angles are radians.
"""

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-10
NORM_TOL = 1e-9
# Input validation is looser than the output guarantees above.
GRAM_TOL = 1e-8


def svd(A):
    """Full SVD with a deterministic sign convention.

    Each left singular vector is flipped so that its largest-magnitude
    entry is non-negative; the matching right singular vector is flipped
    with it, so ``A == U @ diag(s) @ Vt`` still holds.
    """
    U, s, Vt = np.linalg.svd(np.asarray(A, dtype=float), full_matrices=True)
    k = s.size
    idx = np.argmax(np.abs(U[:, :k]), axis=0)
    signs = np.sign(U[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    U[:, :k] *= signs
    Vt[:k] *= signs[:, None]
    return U, s, Vt


def check_orthonormal(A, name="basis", tol=GRAM_TOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {A.shape}")
    n, k = A.shape
    if k > n:
        raise ValueError(f"{name} has more columns ({k}) than rows ({n})")
    dev = np.max(np.abs(A.T @ A - np.eye(k))) if k else 0.0
    if dev > tol:
        raise ValueError(f"{name} is not orthonormal (Gram deviation {dev:.2e})")
    return A


def orthonormal_complement(A):
    """Orthonormal basis of span(A)^perp (n x (n - rank A))."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape[1] == 0:
        return np.eye(n)
    U, s, _ = svd(A)
    rank = int(np.sum(s > max(A.shape) * np.finfo(float).eps * max(s[0], 1.0)))
    return U[:, rank:]


def _principal_pairs(A, B):
    """Cosines/sines of the principal angles plus the rotations that align
    A and B.  Returned in SVD order (cosines non-increasing)."""
    M = A.T @ B
    P, cos, Wt = np.linalg.svd(M, full_matrices=True)
    cos = np.clip(cos, 0.0, 1.0)
    W = Wt.T
    r = A.shape[1]
    # Sines from the residual of each principal vector: accurate near zero,
    # where arccos loses half the digits.
    Bw = B @ W[:, :r]
    resid = Bw - A @ (A.T @ Bw)
    sin = np.clip(np.linalg.norm(resid, axis=0), 0.0, 1.0)
    return P, W, cos, sin


def principal_angles(A, B):
    """Principal angles between span(A) (dim r) and span(B) (dim r' >= r).

    Returns the ``r`` angles in radians, sorted non-increasing so that the
    first entry is the largest angle.
    """
    A = check_orthonormal(A, "A")
    B = check_orthonormal(B, "B")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"ambient dimensions differ: {A.shape[0]} != {B.shape[0]}")
    if A.shape[1] > B.shape[1]:
        raise ValueError("A must not have more columns than B")
    _, _, cos, sin = _principal_pairs(A, B)
    theta = np.arctan2(sin, cos)
    return np.sort(theta)[::-1]


def align_bases(U, U_tilde):
    """Rotate both bases so that ``U_al.T @ Ut_al == [diag(cos theta) | 0]``.

    Columns are ordered by non-increasing angle.  Spans are unchanged.

    Returns
    -------
    U_al, Ut_al, theta
    """
    U = check_orthonormal(U, "U")
    U_tilde = check_orthonormal(U_tilde, "U_tilde")
    r = U.shape[1]
    if U_tilde.shape[1] < r:
        raise ValueError("prior basis must have at least as many columns as U")
    P, W, cos, sin = _principal_pairs(U, U_tilde)
    order = np.arange(r)[::-1]
    U_al = U @ P[:, order]
    Ut_al = U_tilde @ np.hstack([W[:, order], W[:, r:]])
    theta = np.arctan2(sin[order], cos[order])
    return U_al, Ut_al, theta


def build_prior_basis(U, theta, r_prime, seed):
    """Prior basis at prescribed principal angles from span(U).

    Column ``i < r`` of the result is ``cos(theta_i) u_i - sin(theta_i) u'_i``
    and the remaining ``r' - r`` columns are ``-u'_k``, where the ``u'`` are a
    seeded random orthonormal family inside span(U)^perp.  Hence
    ``U.T @ U_tilde == [diag(cos theta) | 0]``.
    """
    U = check_orthonormal(U, "U")
    n, r = U.shape
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != r:
        raise ValueError(f"need {r} angles, got {theta.size}")
    if np.any(theta < 0) or np.any(theta > np.pi / 2 + 1e-15):
        raise ValueError("angles must lie in [0, pi/2]")
    if r_prime < r:
        raise ValueError(f"r_prime ({r_prime}) must be >= r ({r})")
    if r + r_prime > n:
        raise ValueError(f"insufficient ambient dimension: r + r' = {r + r_prime} > n = {n}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, r_prime))
    # two passes of projection keep the family orthogonal to U to ~eps
    G -= U @ (U.T @ G)
    G -= U @ (U.T @ G)
    C, _ = np.linalg.qr(G)
    C -= U @ (U.T @ C)
    U1p, U2p = C[:, :r], C[:, r:]
    return np.hstack([U * np.cos(theta) - U1p * np.sin(theta), -U2p])


@dataclass(frozen=True)
class TransformBundle:
    """Factorisation ``Q = B @ O @ L @ B.T`` of a weighted projector.

    ``B = [U, U'_1, U'_2, U'']`` is an orthonormal basis adapted to the
    truth/prior pair, ``O`` is orthogonal (2x2 rotations coupling ``u_i``
    and ``u'_i``) and ``L`` is block upper-triangular.
    """

    B: np.ndarray
    O: np.ndarray
    L: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    U: np.ndarray
    U_tilde: np.ndarray

    @property
    def r(self):
        return self.lambda1.size

    @property
    def r_prime(self):
        return self.lambda1.size + self.lambda2.size

    @property
    def L11(self):
        r = self.r
        return self.L[:r, :r]

    @property
    def L12(self):
        r = self.r
        return self.L[:r, r:2 * r]

    @property
    def L22(self):
        r = self.r
        return self.L[r:2 * r, r:2 * r]

    @property
    def Q(self):
        return self.B @ self.O @ self.L @ self.B.T


def _check_weights(w, name):
    w = np.asarray(w, dtype=float).reshape(-1)
    if np.any(~np.isfinite(w)) or np.any(w <= 0) or np.any(w > 1):
        raise ValueError(f"{name} entries must lie in (0, 1]")
    return w


def _is_aligned(U, U_tilde):
    r = U.shape[1]
    M = U.T @ U_tilde
    D = np.diag(np.diag(M[:, :r]))
    off = np.max(np.abs(M[:, :r] - D)) if r else 0.0
    tail = np.max(np.abs(M[:, r:])) if M.shape[1] > r else 0.0
    return max(off, tail) <= ORTHO_TOL and np.all(np.diag(M[:, :r]) >= -ORTHO_TOL)


def build_transform(U, U_tilde, lambda1, lambda2):
    """Block transform of ``Q = U_tilde diag(lambda) U_tilde.T + P_perp``.

    If ``U.T @ U_tilde`` is not already ``[diag(cos theta) | 0]``, both bases
    are rotated onto their principal vectors first and the weights are taken
    to refer to the aligned prior directions (ordered by non-increasing
    angle).  The returned bundle carries the aligned bases it used.
    """
    U = check_orthonormal(U, "U")
    U_tilde = check_orthonormal(U_tilde, "U_tilde")
    n, r = U.shape
    rp = U_tilde.shape[1]
    lambda1 = _check_weights(lambda1, "lambda1")
    lambda2 = _check_weights(lambda2, "lambda2")
    if lambda1.size != r or lambda2.size != rp - r:
        raise ValueError(f"expected weight lengths ({r}, {rp - r}), got ({lambda1.size}, {lambda2.size})")
    if r + rp > n:
        raise ValueError(f"insufficient ambient dimension: r + r' = {r + rp} > n = {n}")
    if not _is_aligned(U, U_tilde):
        U, U_tilde, _ = align_bases(U, U_tilde)

    Ut1, Ut2 = U_tilde[:, :r], U_tilde[:, r:]
    cos = np.clip(np.einsum("ij,ij->j", U, Ut1), 0.0, 1.0)
    resid = Ut1 - U * cos
    sin = np.clip(np.linalg.norm(resid, axis=0), 0.0, 1.0)
    theta = np.arctan2(sin, cos)
    # exact-angle parametrisation from here on, so the 2x2 blocks are exact
    cos, sin = np.cos(theta), np.sin(theta)

    zero = sin <= ORTHO_TOL
    U1p = np.zeros((n, r))
    U1p[:, ~zero] = -resid[:, ~zero] / sin[~zero]
    U2p = -(Ut2 - U @ (U.T @ Ut2))
    known = np.hstack([U, U1p[:, ~zero], U2p])
    C = orthonormal_complement(known)
    nz = int(zero.sum())
    U1p[:, zero] = C[:, :nz]
    B = np.hstack([U, U1p, U2p, C[:, nz:]])

    lam = lambda1
    delta = np.sqrt(1.0 - (1.0 - lam**2) * cos**2)
    a = 1.0 - (1.0 - lam) * cos**2          # lam cos^2 + sin^2
    b = (1.0 - lam) * sin * cos
    i = np.arange(r)
    O = np.eye(n)
    O[i, i] = a / delta
    O[i, r + i] = -b / delta
    O[r + i, i] = b / delta
    O[r + i, r + i] = a / delta

    L = np.eye(n)
    L[i, i] = delta
    L[i, r + i] = (1.0 - lam**2) * sin * cos / delta
    L[r + i, r + i] = lam / delta
    k = np.arange(rp - r)
    L[2 * r + k, 2 * r + k] = lambda2

    return TransformBundle(B=B, O=O, L=L, delta=delta, theta=theta,
                           lambda1=lambda1, lambda2=lambda2,
                           U=U, U_tilde=U_tilde)
