"""Bernoulli observation model.

Masks come from a counter-based generator: every entry ``(i, j)`` gets its
own uniform variate from a SplitMix64 hash of ``(seed, i, j)``, so a mask
does not depend on evaluation order and any sub-block can be regenerated
independently.
"""

from dataclasses import dataclass
import json

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z):
    """SplitMix64 finaliser on a uint64 array (wrap-around arithmetic)."""
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def keyed_uniforms(seed, rows, cols):
    """Uniform variates in [0, 1) for every ``(i, j)`` in ``rows x cols``.

    The value at ``(i, j)`` depends only on ``(seed, i, j)``.
    """
    rows = np.asarray(rows, dtype=np.uint64)
    cols = np.asarray(cols, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix64(np.array([int(seed) & _MASK64], dtype=np.uint64) + _GOLDEN)
        counter = (rows[:, None] << np.uint64(32)) | cols[None, :]
        z = _mix64(key + (counter + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _check_probs(probs):
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
        raise ValueError(f"probs must be a square matrix, got shape {probs.shape}")
    if np.any(~np.isfinite(probs)) or np.any(probs <= 0) or np.any(probs > 1):
        raise ValueError("probabilities must lie in (0, 1]")
    return probs


@dataclass(frozen=True)
class SamplingPattern:
    probs: np.ndarray
    mask: np.ndarray
    seed: int

    @property
    def n(self):
        return self.probs.shape[0]

    @property
    def count(self):
        return int(self.mask.sum())

    def to_json(self):
        p = self.probs
        if np.all(p == p.flat[0]):
            probs = f"uniform:{float(p.flat[0])!r}"
        else:
            probs = p.tolist()
        return json.dumps({"n": self.n, "seed": int(self.seed), "probs": probs})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        n = int(d["n"])
        probs = d["probs"]
        if isinstance(probs, str):
            kind, _, value = probs.partition(":")
            if kind != "uniform":
                raise ValueError(f"unknown probability spec {probs!r}")
            probs = np.full((n, n), float(value))
        else:
            probs = np.asarray(probs, dtype=float)
            if probs.shape != (n, n):
                raise ValueError(f"dense probs must be {n}x{n}")
        return draw_pattern(probs, int(d["seed"]))


def draw_pattern(probs, seed):
    """Independent Bernoulli(``probs[i, j]``) mask, deterministic in ``seed``."""
    probs = _check_probs(probs)
    n = probs.shape[0]
    u = keyed_uniforms(seed, np.arange(n), np.arange(n))
    mask = (u < probs).astype(np.int8)
    return SamplingPattern(probs=probs, mask=mask, seed=int(seed))


def uniform_pattern(n, p, seed):
    return draw_pattern(np.full((n, n), float(p)), seed)


def _check_shape(Z, pattern):
    Z = np.asarray(Z, dtype=float)
    if Z.shape != pattern.mask.shape:
        raise ValueError(f"shape mismatch: {Z.shape} vs {pattern.mask.shape}")
    return Z


def apply_R_omega(Z, pattern):
    """Inverse-probability weighted sampling: ``(mask / probs) * Z``."""
    Z = _check_shape(Z, pattern)
    return np.where(pattern.mask == 1, Z / pattern.probs, 0.0)


def apply_P_p(Z, pattern):
    """Plain restriction to the observed entries: ``mask * Z``."""
    Z = _check_shape(Z, pattern)
    return np.where(pattern.mask == 1, Z, 0.0)


@dataclass(frozen=True)
class NoisySample:
    Y: np.ndarray
    noise_bound_e: float


def observe(X, pattern, noise_sigma=0.0, seed=0):
    """Observed entries of ``X + E`` with ``E`` i.i.d. N(0, noise_sigma^2).

    ``noise_bound_e`` is the realised ``||mask * E||_F``.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    X = _check_shape(X, pattern)
    if noise_sigma == 0:
        return NoisySample(Y=apply_P_p(X, pattern), noise_bound_e=0.0)
    E = noise_sigma * np.random.default_rng(seed).standard_normal(X.shape)
    ME = apply_P_p(E, pattern)
    return NoisySample(Y=apply_P_p(X + E, pattern), noise_bound_e=float(np.linalg.norm(ME)))


def support_sampling_probs(mu, nu, r):
    """Per-entry probabilities ``min(1, (mu_i + nu_j) r log n / n)``."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = mu.size
    return np.minimum(1.0, (mu[:, None] + nu[None, :]) * r * np.log(n) / n)


def contraction_norm(U_r, V_r, pattern):
    """Spectral norm of ``P_T - P_T R_Omega P_T`` acting on n x n matrices.

    The operator is self-adjoint, so its norm is the largest absolute
    eigenvalue of the n^2 x n^2 matrix representation (row-major
    vectorisation).
    """
    n = U_r.shape[0]
    PU = U_r @ U_r.T
    PV = V_r @ V_r.T
    eye = np.eye(n)
    PT = np.kron(PU, eye) + np.kron(eye, PV) - np.kron(PU, PV)
    d = (pattern.mask / pattern.probs).reshape(-1)
    M = PT - (PT * d) @ PT
    M = 0.5 * (M + M.T)
    return float(np.max(np.abs(np.linalg.eigvalsh(M))))
