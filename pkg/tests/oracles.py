"""Independent reference implementations used as test oracles.

These are written directly from the defining formulas with scalar loops or
a different algorithm, and share no code with the package beyond numpy.
"""

import math

import numpy as np


def alpha_single_loop(lam, gam, tu, tv):
    cu, su = math.cos(tu), math.sin(tu)
    cv, sv = math.cos(tv), math.sin(tv)
    du = lam**2 * cu**2 + su**2
    dv = gam**2 * cv**2 + sv**2
    a1 = math.sqrt((lam**4 * cu**2 + su**2) / du) * math.sqrt((gam**4 * cv**2 + sv**2) / dv)
    a2 = (math.sqrt(du / dv) + math.sqrt(dv / du)) * (
        math.sqrt(lam**4 * cu**2 + su**2) + math.sqrt(gam**4 * cv**2 + sv**2))
    a3 = (3 * math.sqrt(1 - lam**2) * su / (2 * math.sqrt(du))
          + 3 * math.sqrt(1 - gam**2) * sv / (2 * math.sqrt(dv)))
    return a1, a2, a3


def alpha_multi_loop(l1, l2, g1, g2, theta_u, theta_v):
    def side(w1, w2, th):
        e = r = k = -math.inf
        m = -math.inf
        for w, t in zip(w1, th):
            c2, s2 = math.cos(t) ** 2, math.sin(t) ** 2
            d = w * w * c2 + s2
            e = max(e, d)
            r = max(r, (w**4 * c2 + s2) / d)
            k = max(k, ((1 - w * w) ** 2 * c2 + s2) / d)
            m = max(m, w / math.sqrt(d) - 1)
        for w in w2:
            m = max(m, w - 1)
        return e, r, k, m

    eu, ru, ku, mu = side(l1, l2, theta_u)
    ev, rv, kv, mv = side(g1, g2, theta_v)
    a4 = math.sqrt(ru) * math.sqrt(rv)
    a5 = math.sqrt(eu) * math.sqrt(rv) + math.sqrt(ev) * math.sqrt(ru)
    a6 = math.sqrt(ku) * math.sqrt(kv) - mu - mv
    return a4, a5, a6


def coherence_loop(U):
    n, r = U.shape
    P = U @ U.T
    out = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out[i] = (n / r) * float(np.dot(P @ e, P @ e))
    return out


def principal_angles_arccos(A, B):
    """Angles by arccos of the singular values (the textbook definition)."""
    s = np.linalg.svd(A.T @ B, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, -1.0, 1.0)))[::-1]


def weighted_completion_pd(Y, mask, QU, QV, iters=100_000, tol=1e-13):
    """Noiseless weighted completion by the Chambolle-Pock primal-dual method.

    Solves ``min ||QU Z QV||_*`` subject to ``Z[mask] = Y[mask]`` directly in
    ``Z``.  The dual variable lives in the spectral-norm unit ball.
    """
    mask = np.asarray(mask, dtype=bool)
    scale = float(np.max(np.abs(Y[mask])))
    Yn = np.where(mask, Y / scale, 0.0)
    tau = sigma = 0.99
    Z = Yn.copy()
    Zbar = Z.copy()
    D = np.zeros_like(Z)
    for k in range(iters):
        G = D + sigma * (QU @ Zbar @ QV)
        U, s, Vt = np.linalg.svd(G)
        D = (U * np.minimum(s, 1.0)) @ Vt
        Z_new = Z - tau * (QU @ D @ QV)
        Z_new[mask] = Yn[mask]
        step = np.linalg.norm(Z_new - Z)
        Zbar = 2 * Z_new - Z
        Z = Z_new
        if step <= tol * max(np.linalg.norm(Z), 1.0) and k > 100:
            break
    return scale * Z, k + 1


def exhaustive_bound_grid(theta_u, theta_v, n, r, coherence_ratio, scale, points=1000, w_min=1e-3):
    """Uniform bound over a ``points x points`` grid of (lambda1, gamma1)
    for a rank-one problem with unit extra weights.  Returns (values, grid)."""
    grid = np.linspace(w_min, 1.0, points)
    L, G = np.meshgrid(grid, grid, indexing="ij")
    cu2, su2 = math.cos(theta_u) ** 2, math.sin(theta_u) ** 2
    cv2, sv2 = math.cos(theta_v) ** 2, math.sin(theta_v) ** 2
    du = L**2 * cu2 + su2
    dv = G**2 * cv2 + sv2
    ru = (L**4 * cu2 + su2) / du
    rv = (G**4 * cv2 + sv2) / dv
    ku = ((1 - L**2) ** 2 * cu2 + su2) / du
    kv = ((1 - G**2) ** 2 * cv2 + sv2) / dv
    mu = np.maximum(0.0, L / np.sqrt(du) - 1)
    mv = np.maximum(0.0, G / np.sqrt(dv) - 1)
    a4 = np.sqrt(ru * rv)
    a5 = np.sqrt(du * rv) + np.sqrt(dv * ru)
    a6 = np.sqrt(ku * kv) - mu - mv
    val = scale * np.maximum(np.log(a4 * n), 1) * np.maximum(a5**2 * coherence_ratio, 1)
    return np.where(a6 <= 0.25, val, np.inf), grid
