"""Closed-form recovery guarantees and the weight optimiser.

Conventions
-----------
Angles are radians, ordered non-increasing (index 0 is the largest angle).
For a weight ``w`` and angle ``t`` with ``c = cos t`` and ``s = sin t``
the recurring per-direction quantities are

* ``energy = w^2 c^2 + s^2``          (squared diagonal of the triangular factor)
* ``ratio  = (w^4 c^2 + s^2) / energy``
* ``leak   = ((1 - w^2)^2 c^2 + s^2) / energy``
* ``gain   = w / sqrt(energy) - 1``   (never positive)

``energy`` and the numerator of ``ratio`` are evaluated as
``1 - (1 - w^2) c^2`` and ``1 - (1 - w^4) c^2`` so that unit weights give
exactly one.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .linalg import check_orthonormal, svd
from .model import WeightSpec

FEASIBLE_ALPHA6 = 0.25
FEASIBLE_ALPHA3 = 0.125
W_MIN = 1.0 / 256


# --------------------------------------------------------------------------
# coherence

def coherence(U):
    """Row coherences ``(n / r) ||U[i]||^2`` and their maximum."""
    U = check_orthonormal(U, "U")
    n, r = U.shape
    mu = (n / r) * np.sum(U * U, axis=1)
    return mu, float(mu.max())


def joint_basis(U, U_tilde):
    """Orthonormal basis of span([U, U_tilde])."""
    A = np.hstack([U, U_tilde])
    Ub, s, _ = svd(A)
    rank = int(np.sum(s > max(A.shape) * np.finfo(float).eps * s[0] * 10))
    return Ub[:, :rank]


@dataclass(frozen=True)
class CoherenceProfile:
    mu: np.ndarray
    nu: np.ndarray
    mu_breve: np.ndarray
    nu_breve: np.ndarray

    @property
    def n(self):
        return self.mu.size

    @property
    def eta(self):
        return float(max(self.mu.max(), self.nu.max()))

    @property
    def eta_breve(self):
        return float(max(self.mu_breve.max(), self.nu_breve.max()))

    @classmethod
    def uniform(cls, n):
        one = np.ones(n)
        return cls(mu=one, nu=one, mu_breve=one, nu_breve=one)


def coherence_profile(U_r, V_r, U_tilde, V_tilde):
    mu, _ = coherence(U_r)
    nu, _ = coherence(V_r)
    mu_b, _ = coherence(joint_basis(U_r, U_tilde))
    nu_b, _ = coherence(joint_basis(V_r, V_tilde))
    return CoherenceProfile(mu=mu, nu=nu, mu_breve=mu_b, nu_breve=nu_b)


# --------------------------------------------------------------------------
# per-direction terms

def _terms(theta, w):
    c2 = np.cos(theta) ** 2
    s2 = np.sin(theta) ** 2
    w = np.asarray(w, dtype=float)
    w2 = w * w
    energy = 1.0 - (1.0 - w2) * c2
    ratio = (1.0 - (1.0 - w2 * w2) * c2) / energy
    leak = ((1.0 - w2) ** 2 * c2 + s2) / energy
    gain = w / np.sqrt(energy) - 1.0
    return energy, ratio, leak, gain


# --------------------------------------------------------------------------
# alpha quantities

@dataclass(frozen=True)
class AlphaSet:
    alpha1: float = float("nan")
    alpha2: float = float("nan")
    alpha3: float = float("nan")
    alpha4: float = float("nan")
    alpha5: float = float("nan")
    alpha6: float = float("nan")

    def as_dict(self):
        return {f"alpha{k}": getattr(self, f"alpha{k}") for k in range(1, 7)}


def alpha_single(lam, gam, theta_u1, theta_v1):
    """Single-weight quantities ``(alpha1, alpha2, alpha3)`` at the largest
    angles ``theta_u1`` and ``theta_v1``."""
    eu, ru, _, _ = _terms(theta_u1, lam)
    ev, rv, _, _ = _terms(theta_v1, gam)
    a1 = np.sqrt(ru) * np.sqrt(rv)
    # sqrt(w^4 c^2 + s^2) = sqrt(ratio * energy)
    a2 = (np.sqrt(eu / ev) + np.sqrt(ev / eu)) * (np.sqrt(ru * eu) + np.sqrt(rv * ev))
    a3 = (3 * np.sqrt(1 - lam**2) * np.sin(theta_u1) / (2 * np.sqrt(eu))
          + 3 * np.sqrt(1 - gam**2) * np.sin(theta_v1) / (2 * np.sqrt(ev)))
    return float(a1), float(a2), float(a3)


def _side_maxima(theta, w1, w2):
    """Block maxima for one side; ``w1`` has shape (..., r), ``w2`` (..., r'-r)."""
    energy, ratio, leak, gain = _terms(theta, w1)
    e_max = energy.max(axis=-1)
    r_max = ratio.max(axis=-1)
    l_max = leak.max(axis=-1)
    g_max = gain.max(axis=-1)
    w2 = np.asarray(w2, dtype=float)
    if w2.shape[-1] > 0:
        g_max = np.maximum(g_max, (w2 - 1.0).max(axis=-1))
    return e_max, r_max, l_max, g_max


def _alpha_multi_arrays(theta_u, theta_v, l1, l2, g1, g2):
    eu, ru, lu, mu = _side_maxima(theta_u, l1, l2)
    ev, rv, lv, mv = _side_maxima(theta_v, g1, g2)
    a4 = np.sqrt(ru) * np.sqrt(rv)
    a5 = np.sqrt(eu) * np.sqrt(rv) + np.sqrt(ev) * np.sqrt(ru)
    a6 = np.sqrt(lu) * np.sqrt(lv) - mu - mv
    return a4, a5, a6


def alpha_multi(w, theta_u, theta_v):
    """Multi-weight quantities ``(alpha4, alpha5, alpha6)``."""
    theta_u = np.asarray(theta_u, dtype=float)
    theta_v = np.asarray(theta_v, dtype=float)
    if theta_u.size != w.r or theta_v.size != w.r:
        raise ValueError(f"angle vectors must have length {w.r}")
    a4, a5, a6 = _alpha_multi_arrays(theta_u, theta_v, w.lambda1, w.lambda2, w.gamma1, w.gamma2)
    return float(a4), float(a5), float(a6)


def alpha_set(w, theta_u, theta_v):
    a1, a2, a3 = alpha_single(float(w.lambda1.max()), float(w.gamma1.max()),
                              float(np.max(theta_u)), float(np.max(theta_v)))
    a4, a5, a6 = alpha_multi(w, theta_u, theta_v)
    return AlphaSet(a1, a2, a3, a4, a5, a6)


# --------------------------------------------------------------------------
# block norms of the triangular factor

@dataclass(frozen=True)
class BlockNorms:
    L11: float
    L12: float
    I_minus_L22: float
    L11_L12: float
    L_prime: float
    blockdiag_I_minus: float
    # alternative closed forms that do not match the block they describe
    L12_sum_form: float = float("nan")
    I_minus_L22_flipped: float = float("nan")

    def as_dict(self):
        return dict(self.__dict__)


def lemma4_norms(lambda1, lambda2, theta):
    """Closed-form spectral norms of the blocks of the triangular factor.

    ``L12`` is the product form ``max (1 - w^2) s c / Delta`` which is the
    exact norm of the diagonal block.  ``L12_sum_form`` is the alternative
    ``sqrt(max leak)`` expression and ``I_minus_L22_flipped`` the
    sign-flipped ``max (w / Delta - 1)``; both are reported for comparison
    only.
    """
    lambda1 = np.asarray(lambda1, dtype=float)
    lambda2 = np.asarray(lambda2, dtype=float)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    energy, ratio, leak, _ = _terms(theta, lambda1)
    delta = np.sqrt(energy)
    off = (1 - lambda1**2) * s * c / delta
    diag_gap = 1 - lambda1 / delta
    tail = (1 - lambda2) if lambda2.size else np.zeros(0)
    lp = np.sqrt(np.max(np.concatenate([diag_gap**2 + off**2, tail**2])))
    bd = np.max(np.concatenate([np.abs(diag_gap), np.abs(tail)]))
    return BlockNorms(
        L11=float(delta.max()),
        L12=float(np.abs(off).max()),
        I_minus_L22=float(np.abs(diag_gap).max()),
        L11_L12=float(np.sqrt(ratio.max())),
        L_prime=float(lp),
        blockdiag_I_minus=float(bd),
        L12_sum_form=float(np.sqrt(leak.max())),
        I_minus_L22_flipped=float(np.max(lambda1 / delta - 1)),
    )


def block_norms_numeric(bundle):
    """Spectral norms of the same blocks, taken from the constructed matrix."""
    r = bundle.r
    rp = bundle.r_prime
    L = bundle.L
    n = L.shape[0]

    def norm(A):
        return float(np.linalg.norm(A, 2)) if A.size else 0.0

    L_prime = L - np.eye(n)
    L_prime[:r, :r] = 0.0
    lower = np.eye(rp) - L[r:r + rp, r:r + rp]
    return BlockNorms(
        L11=norm(bundle.L11),
        L12=norm(bundle.L12),
        I_minus_L22=norm(np.eye(r) - bundle.L22),
        L11_L12=norm(L[:r, :2 * r]),
        L_prime=norm(L_prime),
        blockdiag_I_minus=norm(lower),
    )


# --------------------------------------------------------------------------
# sampling-probability bounds

@dataclass(frozen=True)
class SamplingBound:
    p_required: np.ndarray
    p_uniform_raw: float
    p_required_alt: np.ndarray
    p_uniform_alt_raw: float
    feasible: bool

    @property
    def p_uniform(self):
        return min(self.p_uniform_raw, 1.0)

    @property
    def exceeds_one(self):
        return self.p_uniform_raw > 1.0


def _log_factor(alpha, n):
    return np.maximum(np.log(alpha * n), 1.0)


def sampling_bound(profile, alphas, n, r, C=1.0):
    """Per-entry lower bounds on the observation probabilities.

    ``p_required[i, j] = C max[log(alpha4 n), 1] (mu_i + nu_j) r log(n) / n
    * max[alpha5^2 (1 + eta_breve / eta), 1]`` with natural logarithms.
    ``p_required_alt`` uses the per-row form
    ``max[alpha5 (1 + max mu_breve/mu + max nu_breve/nu), 1]`` instead of
    the last factor.  ``feasible`` is ``alpha6 <= 1/4``.
    """
    mu, nu = profile.mu, profile.nu
    base = C * _log_factor(alphas.alpha4, n) * (mu[:, None] + nu[None, :]) * r * np.log(n) / n
    factor = max(alphas.alpha5**2 * (1 + profile.eta_breve / profile.eta), 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_ratio = np.max(np.where(mu > 0, profile.mu_breve / mu, np.inf))
        nu_ratio = np.max(np.where(nu > 0, profile.nu_breve / nu, np.inf))
    factor_alt = max(alphas.alpha5 * (1 + mu_ratio + nu_ratio), 1.0)
    P = base * factor
    P_alt = base * factor_alt
    return SamplingBound(p_required=P, p_uniform_raw=float(P.max()),
                         p_required_alt=P_alt, p_uniform_alt_raw=float(P_alt.max()),
                         feasible=bool(alphas.alpha6 <= FEASIBLE_ALPHA6))


def single_weight_bound(profile, alpha1, n, r, C=1.0):
    """Uniform sampling bound of the single-weight guarantee."""
    return float(C * _log_factor(alpha1, n) * profile.eta * r * np.log(n) / n
                 * max(1 + profile.eta_breve / profile.eta, 1.0))


# --------------------------------------------------------------------------
# weight inversion and heuristics

def min_weight_for_level(theta, level, w_min=W_MIN):
    """Smallest weight whose ``leak`` value does not exceed ``level``.

    ``leak`` decreases from ``1 / sin^2`` (weight -> 0) to ``sin^2``
    (weight 1), so the answer is the root of a quadratic in ``w^2``.
    Levels below ``sin^2`` cannot be met; those entries return 1.
    """
    theta = np.asarray(theta, dtype=float)
    level = np.asarray(level, dtype=float)
    c2 = np.cos(theta) ** 2
    s2 = np.sin(theta) ** 2
    safe_c2 = np.where(c2 > 1e-300, c2, 1.0)
    b = 2.0 + level
    disc = np.maximum(b * b - 4.0 * (1.0 - level * s2) / safe_c2, 0.0)
    x = 0.5 * (b - np.sqrt(disc))
    w = np.sqrt(np.clip(x, 0.0, 1.0))
    w = np.where(level < s2, 1.0, w)
    w = np.where(c2 <= 1e-300, 1.0, w)
    return np.clip(w, w_min, 1.0)


def _objective_scale(profile, n, r, C):
    return C * (profile.mu.max() + profile.nu.max()) * r * np.log(n) / n


@dataclass
class _Problem:
    theta_u: np.ndarray
    theta_v: np.ndarray
    r: int
    extra: int
    n: int
    scale: float
    coherence_ratio: float
    w_min: float
    full: bool

    def split(self, x):
        """x has shape (B, d): [lambda1, gamma1(, lambda2, gamma2)]."""
        r, k = self.r, self.extra
        l1, g1 = x[:, :r], x[:, r:2 * r]
        if self.full:
            l2, g2 = x[:, 2 * r:2 * r + k], x[:, 2 * r + k:]
        else:
            l2 = g2 = np.ones((x.shape[0], k))
        return l1, l2, g1, g2

    def evaluate(self, x):
        l1, l2, g1, g2 = self.split(x)
        a4, a5, a6 = _alpha_multi_arrays(self.theta_u, self.theta_v, l1, l2, g1, g2)
        val = self.scale * _log_factor(a4, self.n) * np.maximum(a5**2 * self.coherence_ratio, 1.0)
        feasible = a6 <= FEASIBLE_ALPHA6
        return np.where(feasible, val, np.inf), a6

    def keys(self, x):
        val, _ = self.evaluate(x)
        r = self.r
        # ties go to the smaller paired weights (they are what lowers the
        # block maxima), then to the larger extra weights
        paired = x[:, :2 * r].sum(axis=1)
        extra = -x[:, 2 * r:].sum(axis=1)
        return val, paired, extra

    def repair(self, x, side):
        """Raise the paired weights on ``side`` just enough to restore
        ``alpha6 <= 1/4``; rows that cannot be repaired are set to one."""
        _, a6 = self.evaluate(x)
        bad = a6 > FEASIBLE_ALPHA6
        if not np.any(bad):
            return x
        x = x.copy()
        r = self.r
        cols = np.arange(side * r, (side + 1) * r)
        theta = self.theta_u if side == 0 else self.theta_v
        l1, l2, g1, g2 = self.split(x[bad])
        if side == 0:
            other = _side_maxima(self.theta_v, g1, g2)
            own_tail = l2
        else:
            other = _side_maxima(self.theta_u, l1, l2)
            own_tail = g2
        fixed_leak, fixed_gain = other[2], other[3]
        tail_gain = (own_tail - 1.0).max(axis=-1) if own_tail.shape[-1] else np.full(fixed_leak.shape, -np.inf)
        cur = x[bad][:, cols]

        c2 = np.cos(theta) ** 2
        s2 = np.sin(theta) ** 2
        s2_max = s2.max()
        inv_c2 = 1.0 / np.where(c2 > 1e-300, c2, 1.0)
        degenerate = c2 <= 1e-300

        def alpha6_at(level_log):
            # inline form of min_weight_for_level and _terms with the
            # trigonometric factors hoisted out of the bisection
            level = np.exp(level_log)[:, None]
            b = 2.0 + level
            x2 = 0.5 * (b - np.sqrt(np.maximum(b * b - 4.0 * (1.0 - level * s2) * inv_c2, 0.0)))
            floor = np.sqrt(np.minimum(np.maximum(x2, 0.0), 1.0))
            floor = np.where((level < s2) | degenerate, 1.0, floor)
            w = np.maximum(cur, np.minimum(np.maximum(floor, self.w_min), 1.0))
            w2 = w * w
            energy = 1.0 - (1.0 - w2) * c2
            leak = ((1.0 - w2) ** 2 * c2 + s2) / energy
            gain = w / np.sqrt(energy) - 1.0
            g = np.maximum(gain.max(axis=1), tail_gain)
            return np.sqrt(leak.max(axis=1)) * np.sqrt(fixed_leak) - g - fixed_gain, w

        _, _, leak, _ = _terms(theta, cur)
        hi = np.log(leak.max(axis=1))
        lo = np.full_like(hi, np.log(max(s2_max, 1e-300)))
        ok_lo = alpha6_at(lo)[0] <= FEASIBLE_ALPHA6
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            feas = alpha6_at(mid)[0] <= FEASIBLE_ALPHA6
            lo = np.where(feas, mid, lo)
            hi = np.where(feas, hi, mid)
        w = alpha6_at(lo)[1]
        w[~ok_lo] = 1.0
        sub = x[bad]
        sub[:, cols] = w
        x[bad] = sub
        return x


def _better(key_a, key_b, tol=1e-13):
    """Lexicographic comparison with a relative tolerance on the bound."""
    va, vb = key_a[0], key_b[0]
    if np.isfinite(va) and np.isfinite(vb):
        if va < vb * (1 - tol):
            return True
        if va > vb * (1 + tol):
            return False
    elif va != vb:
        return va < vb
    for a, b in zip(key_a[1:], key_b[1:]):
        if a < b - 1e-12:
            return True
        if a > b + 1e-12:
            return False
    return False


def heuristic_weights(theta_u, theta_v, r_prime, w_min=W_MIN):
    """Balanced-cap weights.

    The paired weights on each side are the smallest ones whose ``leak``
    stays under a cap, with the two caps splitting the ``alpha6`` budget
    evenly (``sqrt(cap_u) = sqrt(cap_v) = 1/2``).  A side whose largest
    angle alone exceeds its share takes what it needs and the other side
    gets the remainder.  Caps are shrunk jointly until ``alpha6 <= 1/4``.
    """
    theta_u = np.asarray(theta_u, dtype=float)
    theta_v = np.asarray(theta_v, dtype=float)
    r = theta_u.size
    su, sv = np.sin(theta_u).max(), np.sin(theta_v).max()
    cu = cv = 0.5
    if su > cu:
        cu, cv = su, 0.25 / su
    elif sv > cv:
        cu, cv = 0.25 / sv, sv

    def weights(t):
        l1 = min_weight_for_level(theta_u, (t * cu) ** 2, w_min)
        g1 = min_weight_for_level(theta_v, (t * cv) ** 2, w_min)
        return WeightSpec(l1, np.ones(r_prime - r), g1, np.ones(r_prime - r))

    w = weights(1.0)
    if alpha_multi(w, theta_u, theta_v)[2] <= FEASIBLE_ALPHA6:
        return w
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if alpha_multi(weights(mid), theta_u, theta_v)[2] <= FEASIBLE_ALPHA6:
            lo = mid
        else:
            hi = mid
    return weights(lo)


def cap_line_weights(theta_u, theta_v, r_prime, profile, n, C=1.0, points=256, w_min=W_MIN):
    """Best weights along the one-parameter family of caps that exhaust the
    ``alpha6`` budget with unit extra weights (``cap_u * cap_v = 1/16``)."""
    theta_u = np.asarray(theta_u, dtype=float)
    theta_v = np.asarray(theta_v, dtype=float)
    r = theta_u.size
    su2 = max(np.sin(theta_u).max() ** 2, 1e-300)
    sv2 = max(np.sin(theta_v).max() ** 2, 1e-300)
    lo, hi = np.log(su2), np.log(1.0 / (16.0 * sv2))
    if lo > hi:
        return None
    # keep the family finite when an angle is exactly zero
    lo, hi = max(lo, -60.0), min(hi, 60.0)
    caps = np.exp(np.linspace(lo, hi, points))
    l1 = min_weight_for_level(theta_u[None, :], caps[:, None], w_min)
    g1 = min_weight_for_level(theta_v[None, :], 1.0 / (16.0 * caps[:, None]), w_min)
    prob = _make_problem(theta_u, theta_v, r, r_prime, profile, n, C, w_min, False)
    x = np.hstack([l1, g1])
    keys = prob.keys(x)
    best = _argbest(keys)
    if not np.isfinite(keys[0][best]):
        return None
    ones = np.ones(r_prime - r)
    return WeightSpec(l1[best], ones, g1[best], ones)


def _make_problem(theta_u, theta_v, r, r_prime, profile, n, C, w_min, full):
    return _Problem(theta_u=theta_u, theta_v=theta_v, r=r, extra=r_prime - r, n=n,
                    scale=_objective_scale(profile, n, r, C),
                    coherence_ratio=1 + profile.eta_breve / profile.eta,
                    w_min=w_min, full=full)


# --------------------------------------------------------------------------
# optimisers

@dataclass(frozen=True)
class WeightResult:
    weights: WeightSpec
    bound: float
    alphas: AlphaSet
    feasible: bool
    starts: int = 0
    history: list = field(default_factory=list, repr=False)


def optimize_weights(theta_u, theta_v, profile, n, r, r_prime, C=1.0, starts=64,
                     grid=256, w_min=W_MIN, full=False, seed=0, max_sweeps=25):
    """Weights minimising the uniform sampling bound subject to
    ``alpha6 <= 1/4``.

    Multi-start projected coordinate descent.  Starts are the all-ones
    point, the balanced-cap heuristic, the best point on the cap line and
    scrambled Sobol points in ``[w_min, 1]``; infeasible starts are pulled
    toward all-ones until feasible.  Each coordinate is line-searched on a
    ``grid``-point grid, and every trial point whose ``alpha6`` exceeds the
    budget is repaired by raising the other side's paired weights.
    Candidates are ranked by (bound, sum of paired weights, minus sum of
    extra weights).

    By default the extra weights ``lambda2``, ``gamma2`` stay at one; set
    ``full=True`` to search them as well.
    """
    theta_u = np.asarray(theta_u, dtype=float)
    theta_v = np.asarray(theta_v, dtype=float)
    if theta_u.size != r or theta_v.size != r:
        raise ValueError(f"angle vectors must have length {r}")
    if r_prime < r:
        raise ValueError("r_prime must be >= r")
    prob = _make_problem(theta_u, theta_v, r, r_prime, profile, n, C, w_min, full)
    d = 2 * r + (2 * (r_prime - r) if full else 0)
    ones = np.ones((1, d))

    def key_of(x):
        return tuple(float(k[0]) for k in prob.keys(x[None, :]))

    def to_spec(x):
        l1, l2, g1, g2 = prob.split(x[None, :])
        return WeightSpec(l1[0], l2[0], g1[0], g2[0])

    if not np.isfinite(prob.evaluate(ones)[0][0]):
        w = WeightSpec.ones(r, r_prime)
        a = alpha_set(w, theta_u, theta_v)
        return WeightResult(w, float(sampling_bound(profile, a, n, r, C).p_uniform_raw), a, False, 0)

    def flatten(w):
        parts = [w.lambda1, w.gamma1]
        if full:
            parts += [w.lambda2, w.gamma2]
        return np.concatenate(parts)

    seeds = [ones[0], flatten(heuristic_weights(theta_u, theta_v, r_prime, w_min))]
    cl = cap_line_weights(theta_u, theta_v, r_prime, profile, n, C, grid, w_min)
    if cl is not None:
        seeds.append(flatten(cl))
    n_sobol = max(starts - len(seeds), 0)
    if n_sobol:
        m = int(np.ceil(np.log2(max(n_sobol, 2))))
        u = qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)[:n_sobol]
        seeds.extend(w_min + (1 - w_min) * u)

    line = np.linspace(w_min, 1.0, grid)
    best_x, best_key = ones[0].copy(), key_of(ones[0])
    history = []
    for x0 in seeds:
        x = _pull_feasible(prob, np.asarray(x0, dtype=float))
        key = key_of(x)
        for _ in range(max_sweeps):
            improved = False
            for k in range(d):
                cand = np.repeat(x[None, :], grid + 1, axis=0)
                cand[:grid, k] = line
                if k < 2 * r:
                    cand = prob.repair(cand, 1 - k // r)
                keys = prob.keys(cand)
                j = _argbest(keys)
                kj = tuple(float(kk[j]) for kk in keys)
                if _better(kj, key):
                    x, key, improved = cand[j], kj, True
            if not improved:
                break
        history.append(key[0])
        if _better(key, best_key):
            best_x, best_key = x, key

    w = to_spec(best_x)
    a = alpha_set(w, theta_u, theta_v)
    sb = sampling_bound(profile, a, n, r, C)
    return WeightResult(w, sb.p_uniform_raw, a, bool(a.alpha6 <= FEASIBLE_ALPHA6), len(seeds), history)


def _argbest(keys):
    """Index of the best candidate: lowest bound (relative tolerance
    1e-13), then lowest secondary keys (absolute tolerance 1e-12)."""
    val = keys[0]
    vmin = val.min()
    cand = val <= vmin * (1 + 1e-13) if np.isfinite(vmin) else np.ones(val.size, dtype=bool)
    for k in keys[1:]:
        cand &= k <= k[cand].min() + 1e-12
    return int(np.flatnonzero(cand)[0])


def _pull_feasible(prob, x):
    """Move ``x`` along the segment toward all-ones to the first feasible
    point (all-ones itself is assumed feasible)."""
    if np.isfinite(prob.evaluate(x[None, :])[0][0]):
        return x
    lo, hi = 0.0, 1.0   # fraction of the way from all-ones back to x
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        y = 1.0 - mid * (1.0 - x)
        if np.isfinite(prob.evaluate(y[None, :])[0][0]):
            lo = mid
        else:
            hi = mid
    return 1.0 - lo * (1.0 - x)


def optimize_single_weight(theta_u, theta_v, profile, n, r, C=1.0, grid=256, w_min=W_MIN):
    """Scalar weights ``(lam, gam)`` minimising the single-weight bound
    subject to ``alpha3 <= 1/8``, by exhaustive search of a ``grid x grid``
    product grid.  Ties go to the larger weights.

    Returns ``(lam, gam, bound, feasible)``.
    """
    tu = float(np.max(theta_u))
    tv = float(np.max(theta_v))
    line = np.linspace(w_min, 1.0, grid)
    L, G = np.meshgrid(line, line, indexing="ij")
    eu, ru, _, _ = _terms(tu, L)
    ev, rv, _, _ = _terms(tv, G)
    a1 = np.sqrt(ru) * np.sqrt(rv)
    a3 = (3 * np.sqrt(1 - L**2) * np.sin(tu) / (2 * np.sqrt(eu))
          + 3 * np.sqrt(1 - G**2) * np.sin(tv) / (2 * np.sqrt(ev)))
    val = (C * _log_factor(a1, n) * profile.eta * r * np.log(n) / n
           * max(1 + profile.eta_breve / profile.eta, 1.0))
    val = np.where(a3 <= FEASIBLE_ALPHA3, val, np.inf)
    vmin = val.min()
    if not np.isfinite(vmin):
        return 1.0, 1.0, single_weight_bound(profile, 1.0, n, r, C), False
    ties = np.nonzero(val <= vmin * (1 + 1e-13))
    total = L[ties] + G[ties]
    best = int(np.argmax(total))
    i, j = ties[0][best], ties[1][best]
    return float(line[i]), float(line[j]), float(val[i, j]), True


# --------------------------------------------------------------------------
# reporting

def bound_report(weights, theta_u, theta_v, profile, n, r, C=1.0):
    """JSON-ready summary ``{alphas, p_required_uniform, feasible, weights}``."""
    a = alpha_set(weights, theta_u, theta_v)
    sb = sampling_bound(profile, a, n, r, C)
    return {
        "alphas": a.as_dict(),
        "p_required_uniform": sb.p_uniform,
        "p_required_uniform_raw": sb.p_uniform_raw,
        "p_required_uniform_alt": min(sb.p_uniform_alt_raw, 1.0),
        "exceeds_one": sb.exceeds_one,
        "feasible": sb.feasible,
        "weights": weights.as_dict(),
    }
