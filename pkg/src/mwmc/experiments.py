"""Scenario generation, Monte Carlo sweeps and result tables."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import hashlib
import io
import math
import time

import numpy as np

from .bounds import (coherence_profile, heuristic_weights, optimize_single_weight,
                     optimize_weights)
from .linalg import align_bases, build_prior_basis, svd
from .model import LowRankModel, PriorSubspaces, WeightSpec, make_weighted_projector
from .sampling import observe, uniform_pattern
from .solver import SUCCESS_NRE, SolverConfig, nre, solve_weighted

# principal angles in degrees, (theta_u, theta_v)
ANGLE_PRESETS = {
    "accurate": ([1.32, 1.72, 2.11, 3.07], [1.08, 1.70, 2.37, 2.73]),
    "mixed": ([2.01, 8.28, 15.55, 20.26], [2.09, 10.5, 19.45, 22.00]),
    "weak": ([40.87, 49.63, 50.55, 69.39], [28.76, 37.83, 40.52, 63.65]),
}

METHODS = ("unweighted", "single_weight", "multi_weight", "multi_weight_optimal")
METHOD_ALIASES = {
    "unweighted": "unweighted",
    "single": "single_weight",
    "single_weight": "single_weight",
    "multi": "multi_weight",
    "multi_weight": "multi_weight",
    "optimal": "multi_weight_optimal",
    "multi_weight_optimal": "multi_weight_optimal",
}

CSV_HEADER = ["method", "p", "trial", "seed", "nre", "success", "iters", "runtime_ms"]


def derive_seed(*parts):
    """Stable 63-bit seed from a tuple of ints, floats and strings."""
    text = "|".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Problem size and prior accuracy.

    Give ``theta_u_deg`` and ``theta_v_deg`` for priors at prescribed
    principal angles.  Otherwise the priors are the top ``r_prime``
    singular subspaces of ``X + N`` with ``N`` i.i.d. Gaussian of standard
    deviation ``perturbation_sigma``.
    """

    n: int = 20
    r: int = 4
    r_prime: int = 8
    theta_u_deg: tuple = None
    theta_v_deg: tuple = None
    perturbation_sigma: float = 1e-2
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.r < 1 or self.r > self.r_prime:
            raise ValueError(f"need 1 <= r <= r_prime, got r={self.r}, r_prime={self.r_prime}")
        if self.r + self.r_prime > self.n:
            raise ValueError(f"need r + r_prime <= n, got {self.r} + {self.r_prime} > {self.n}")
        if (self.theta_u_deg is None) != (self.theta_v_deg is None):
            raise ValueError("give both angle vectors or neither")
        if self.explicit:
            for name in ("theta_u_deg", "theta_v_deg"):
                t = np.asarray(getattr(self, name), dtype=float)
                if t.size != self.r:
                    raise ValueError(f"{name} must have {self.r} entries")
                if np.any(t < 0) or np.any(t > 90):
                    raise ValueError(f"{name} entries must lie in [0, 90] degrees")
        if self.perturbation_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("standard deviations must be non-negative")

    @property
    def explicit(self):
        return self.theta_u_deg is not None

    @classmethod
    def from_preset(cls, name, **kw):
        if name not in ANGLE_PRESETS:
            raise ValueError(f"unknown angle preset {name!r}")
        u, v = ANGLE_PRESETS[name]
        return cls(theta_u_deg=tuple(u), theta_v_deg=tuple(v), **kw)


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    model: LowRankModel
    priors: PriorSubspaces
    profile: object


def gen_scenario(cfg):
    """Ground truth ``X = A B^T`` (Gaussian factors) and prior subspaces."""
    n, r, rp = cfg.n, cfg.r, cfg.r_prime
    rng = np.random.default_rng(derive_seed(cfg.seed, "truth"))
    A = rng.standard_normal((n, r))
    B = rng.standard_normal((n, r))
    model = LowRankModel.from_matrix(A @ B.T, r)
    if cfg.explicit:
        tu = np.sort(np.radians(np.asarray(cfg.theta_u_deg, dtype=float)))[::-1]
        tv = np.sort(np.radians(np.asarray(cfg.theta_v_deg, dtype=float)))[::-1]
        Ut = build_prior_basis(model.U_r, tu, rp, derive_seed(cfg.seed, "prior_u"))
        Vt = build_prior_basis(model.V_r, tv, rp, derive_seed(cfg.seed, "prior_v"))
    else:
        noise = np.random.default_rng(derive_seed(cfg.seed, "perturbation"))
        Xp = model.X + cfg.perturbation_sigma * noise.standard_normal((n, n))
        U, _, Vt_ = svd(Xp)
        _, Ut, _ = align_bases(model.U_r, U[:, :rp])
        _, Vt, _ = align_bases(model.V_r, Vt_[:rp].T)
    priors = PriorSubspaces.from_bases(model, Ut, Vt)
    profile = coherence_profile(model.U_r, model.V_r, Ut, Vt)
    return Scenario(config=cfg, model=model, priors=priors, profile=profile)


def method_weights(scenario, method, C=1.0):
    """Weights used by ``method`` on this scenario."""
    cfg = scenario.config
    r, rp, n = cfg.r, cfg.r_prime, cfg.n
    tu, tv = scenario.priors.theta_u, scenario.priors.theta_v
    if method == "unweighted":
        return WeightSpec.ones(r, rp)
    if method == "single_weight":
        lam, gam, _, _ = optimize_single_weight(tu, tv, scenario.profile, n, r, C)
        return WeightSpec.constant(lam, r, rp, gamma=gam)
    if method == "multi_weight":
        return heuristic_weights(tu, tv, rp)
    if method == "multi_weight_optimal":
        return optimize_weights(tu, tv, scenario.profile, n, r, rp, C).weights
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SweepConfig:
    p_grid: tuple
    methods: tuple = METHODS
    trials: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if len(self.p_grid) == 0:
            raise ValueError("p_grid must not be empty")
        if any(not 0 < p <= 1 for p in self.p_grid):
            raise ValueError("sampling probabilities must lie in (0, 1]")
        if len(self.methods) == 0:
            raise ValueError("methods must not be empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    p: float
    trial: int
    seed: int
    nre: float
    success: bool
    iters: int
    runtime_ms: float = float("nan")
    converged: bool = True


@dataclass
class _Task:
    scenario: Scenario
    projectors: dict
    p: float
    trial: int
    seed: int
    solver: SolverConfig
    timing: bool = False
    methods: tuple = field(default_factory=tuple)


def _run_task(task):
    sc = task.scenario
    X = sc.model.X
    pattern = uniform_pattern(sc.config.n, task.p, task.seed)
    sample = observe(X, pattern, sc.config.noise_sigma, derive_seed(task.seed, "noise"))
    out = []
    for method in task.methods:
        QU, QV = task.projectors[method]
        t0 = time.perf_counter()
        if pattern.count == 0:
            err, iters, converged = 1.0, 0, False
        else:
            sol = solve_weighted(sample, pattern, QU, QV, sample.noise_bound_e, task.solver)
            err, iters, converged = nre(sol.X_hat, X), sol.iters, sol.converged
        ms = (time.perf_counter() - t0) * 1e3 if task.timing else float("nan")
        out.append(ExperimentRecord(method=method, p=task.p, trial=task.trial, seed=task.seed,
                                    nre=err, success=err < SUCCESS_NRE, iters=iters,
                                    runtime_ms=ms, converged=converged))
    return out


def build_projectors(scenario, methods=None, C=1.0, weights=None):
    """``{method: (QU, QV)}``; ``weights`` maps methods to precomputed weights."""
    pri = scenario.priors
    weights = weights or {m: method_weights(scenario, m, C) for m in methods}
    return {m: (make_weighted_projector(pri.U_tilde, w.lambda1, w.lambda2),
                make_weighted_projector(pri.V_tilde, w.gamma1, w.gamma2))
            for m, w in weights.items()}


def run_sweep(scenario, sweep, solver=None, workers=1, timing=False, projectors=None):
    """Run every (method, p, trial) combination.

    All methods share the mask and noise of a given ``(p, trial)``; its
    seed is ``derive_seed(base_seed, p, trial)``.  Records come back sorted
    by (method, p, trial) whatever the execution order.
    """
    solver = solver or SolverConfig()
    if projectors is None:
        projectors = build_projectors(scenario, sweep.methods)
    tasks = [_Task(scenario, projectors, float(p), t,
                   derive_seed(sweep.base_seed, float(p), t), solver, timing, tuple(sweep.methods))
             for p in sweep.p_grid for t in range(sweep.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_task, tasks, chunksize=4))
    else:
        chunks = [_run_task(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    order = {m: i for i, m in enumerate(METHODS)}
    records.sort(key=lambda rec: (order[rec.method], rec.p, rec.trial))
    return records


def aggregate(records):
    """Per (method, p): success rate, mean NRE and median iteration count."""
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    groups = {}
    for rec in records:
        groups.setdefault((rec.method, rec.p), []).append(rec)
    order = {m: i for i, m in enumerate(METHODS)}
    rows = []
    for (method, p) in sorted(groups, key=lambda k: (order.get(k[0], len(order)), k[0], k[1])):
        g = groups[(method, p)]
        rows.append({
            "method": method,
            "p": p,
            "success_rate": sum(rec.success for rec in g) / len(g),
            "mean_nre": math.fsum(rec.nre for rec in g) / len(g),
            "median_iters": float(np.median([rec.iters for rec in g])),
        })
    return rows


def phase_transition_point(rows, method, threshold=0.9):
    """Smallest grid ``p`` whose success rate reaches ``threshold``."""
    ps = [row["p"] for row in rows if row["method"] == method and row["success_rate"] >= threshold]
    return min(ps) if ps else None


def nonconvergence_rate(records):
    records = list(records)
    return sum(not rec.converged for rec in records) / len(records) if records else 0.0


def _fmt_float(x):
    return repr(float(x))


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        ms = "" if np.isnan(rec.runtime_ms) else f"{rec.runtime_ms:.3f}"
        w.writerow([rec.method, f"{rec.p:.10g}", rec.trial, rec.seed, _fmt_float(rec.nre),
                    int(rec.success), rec.iters, ms])
    return buf.getvalue()


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))
