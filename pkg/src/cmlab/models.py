"""Score and consistency models with controlled, measurable errors.

Perturbations are fixed smooth sinusoidal fields rather than anything
learned: g_j(x, t) = sin(omega_j . x + a_j + b_j t) with frequencies and
phases drawn once from a seed.  Each coordinate is bounded by 1, so the
injected L2 error is at most eps_target * sqrt(d) by construction and the
injection is exactly linear in eps_target.

Consistency models come in four flavours:
  exact        -- reference-integrated flow of the exact PF ODE
  empirical    -- reference-integrated flow of the empirical PF ODE
  discretized  -- exponential-integrator solver marched down a TimeGrid
                  (the object whose one-step sampling error scales with h)
  perturbed    -- any of the above plus eps * (t - delta) * g(x, t)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import MixtureParams, marginal_at, sample, score
from .flows import (DEFAULT_TOL, consistency_empirical, consistency_exact,
                    exp_integrator_step)
from .rng import derive_rng
from .schedule import TimeGrid


@dataclass
class ScoreModel:
    """Deterministic score field s(x, t) with provenance metadata."""

    fn: Callable[[np.ndarray, float], np.ndarray]
    dim: int
    kind: str
    provenance: dict = field(default_factory=dict)
    measured_eps_sc: Optional[float] = None

    def __call__(self, x, t: float) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float), t)


@dataclass
class ConsistencyModel:
    """Deterministic map f(x, t) -> point at time delta; f(x, delta) = x."""

    fn: Callable[[np.ndarray, float], np.ndarray]
    dim: int
    delta: float
    kind: str
    provenance: dict = field(default_factory=dict)
    measured_eps_cm: Optional[float] = None
    measured_Lf: Optional[float] = None

    def __call__(self, x, t: float) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float), t)


class _SineField:
    """g(x, t) with g_j = sin(omega_j . x + a_j + b_j t); ||g||_inf <= sqrt(d)."""

    def __init__(self, dim: int, seed: int):
        rng = derive_rng(seed, "sine-perturbation")
        self.omega = rng.uniform(0.5, 1.5, size=(dim, dim))
        self.omega *= rng.choice([-1.0, 1.0], size=(dim, dim))
        self.phase = rng.uniform(0.0, 2.0 * np.pi, size=dim)
        self.tcoef = rng.uniform(0.2, 1.0, size=dim)

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.sin(x @ self.omega.T + self.phase + self.tcoef * t)


def exact_score_model(dist: MixtureParams) -> ScoreModel:
    return ScoreModel(
        fn=lambda x, t: score(dist, t, x),
        dim=dist.dim,
        kind="exact",
        provenance={"kind": "exact"},
        measured_eps_sc=0.0,
    )


def perturb_score(dist: MixtureParams, eps_target: float,
                  seed: int) -> ScoreModel:
    """s(x, t) = grad log p_t(x) + eps_target * g(x, t)."""
    if eps_target < 0:
        raise ValueError("eps_target must be >= 0")
    g = _SineField(dist.dim, seed)
    return ScoreModel(
        fn=lambda x, t: score(dist, t, x) + eps_target * g(x, t),
        dim=dist.dim,
        kind="perturbed",
        provenance={"kind": "perturbed", "eps_target": eps_target,
                    "seed": int(seed)},
    )


def exact_cm(dist: MixtureParams, delta: float,
             tol: float = DEFAULT_TOL) -> ConsistencyModel:
    return ConsistencyModel(
        fn=lambda x, t: consistency_exact(dist, x, t, delta, tol),
        dim=dist.dim,
        delta=delta,
        kind="exact",
        provenance={"kind": "exact", "tol": tol},
    )


def empirical_cm(score_model: ScoreModel, delta: float,
                 tol: float = DEFAULT_TOL) -> ConsistencyModel:
    return ConsistencyModel(
        fn=lambda x, t: consistency_empirical(score_model, x, t, delta, tol),
        dim=score_model.dim,
        delta=delta,
        kind="empirical",
        provenance={"kind": "empirical", "tol": tol,
                    "score": dict(score_model.provenance)},
    )


def discretized_cm(score_model: ScoreModel, grid: TimeGrid) -> ConsistencyModel:
    """Consistency map realised by marching the exponential integrator down
    the grid from t to delta.

    For t between grid points the first step goes to the largest grid point
    below t.  Satisfies the boundary condition and, at grid times, zero
    per-interval consistency error by construction.
    """
    pts = grid.points
    delta = grid.delta
    tol = 1e-12 * max(1.0, grid.T)

    def run(x: np.ndarray, t: float) -> np.ndarray:
        if t < delta - tol:
            raise ValueError(f"need t >= delta, got t={t}")
        if t <= delta + tol:
            return np.asarray(x, dtype=float).copy()
        below = pts[pts < t - tol]
        times = [t] + below[::-1].tolist()
        if abs(times[-1] - delta) > tol:
            times.append(delta)
        out = np.asarray(x, dtype=float)
        for hi, lo in zip(times[:-1], times[1:]):
            out = exp_integrator_step(score_model, out, hi, lo)
        return out

    return ConsistencyModel(
        fn=run,
        dim=score_model.dim,
        delta=delta,
        kind="discretized",
        provenance={"kind": "discretized", "h": grid.h, "T": grid.T,
                    "delta": delta, "score": dict(score_model.provenance)},
    )


def perturb_cm(base: ConsistencyModel, eps_target: float,
               seed: int) -> ConsistencyModel:
    """f(x, t) = base(x, t) + eps_target * (t - delta) * g(x, t).

    The (t - delta) factor keeps the boundary condition exact and matches
    the per-interval scaling of the consistency-error assumption.
    """
    if eps_target < 0:
        raise ValueError("eps_target must be >= 0")
    g = _SineField(base.dim, seed)
    delta = base.delta
    return ConsistencyModel(
        fn=lambda x, t: base(x, t) + eps_target * (t - delta) * g(x, t),
        dim=base.dim,
        delta=delta,
        kind="perturbed",
        provenance={"kind": "perturbed", "eps_target": eps_target,
                    "seed": int(seed), "base": dict(base.provenance)},
    )


def measure_score_error(model: ScoreModel, dist: MixtureParams,
                        grid: TimeGrid, n_mc: int, seed: int) -> float:
    """eps_sc estimate: max over grid times of the RMS L2(p_t) score error."""
    if n_mc < 100:
        raise ValueError("n_mc must be >= 100")
    worst = 0.0
    for j, t in enumerate(grid.points):
        x = sample(marginal_at(dist, t), n_mc,
                   derive_rng(seed, "eps-sc", j).integers(2**63),
                   time_tag=t).points
        err = model(x, t) - score(dist, t, x)
        worst = max(worst, float(np.sqrt(np.mean(np.sum(err**2, axis=1)))))
    model.measured_eps_sc = worst
    return worst


def measure_cm_error(cm: ConsistencyModel, score_model: ScoreModel,
                     dist: MixtureParams, grid: TimeGrid, n_mc: int,
                     seed: int) -> float:
    """eps_cm estimate: max over adjacent grid pairs of
    RMS || f(x_{t_{n+1}}, t_{n+1}) - f(xhat, t_n) || / (t_{n+1} - t_n),
    with xhat one exponential-integrator step of x_{t_{n+1}}."""
    if n_mc < 100:
        raise ValueError("n_mc must be >= 100")
    pts = grid.points
    worst = 0.0
    for n in range(pts.shape[0] - 1):
        t_lo, t_hi = pts[n], pts[n + 1]
        x = sample(marginal_at(dist, t_hi), n_mc,
                   derive_rng(seed, "eps-cm", n).integers(2**63),
                   time_tag=t_hi).points
        xhat = exp_integrator_step(score_model, x, t_hi, t_lo)
        gap = cm(x, t_hi) - cm(xhat, t_lo)
        rms = float(np.sqrt(np.mean(np.sum(gap**2, axis=1))))
        worst = max(worst, rms / (t_hi - t_lo))
    cm.measured_eps_cm = worst
    return worst


def estimate_lipschitz(cm: ConsistencyModel, dist: MixtureParams, t: float,
                       n_pairs: int, seed: int,
                       radii=(1e-3, 1e-2)) -> float:
    """L_f estimate: max difference quotient over p_t-sampled base points and
    random unit directions at the given probe radii, floored at 1."""
    if n_pairs < 100:
        raise ValueError("n_pairs must be >= 100")
    x = sample(marginal_at(dist, t), n_pairs, seed, time_tag=t).points
    u = derive_rng(seed, "lipschitz-dirs").standard_normal(x.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    fx = cm(x, t)
    best = 1.0
    for r in radii:
        fy = cm(x + r * u, t)
        ratios = np.linalg.norm(fy - fx, axis=1) / r
        best = max(best, float(np.max(ratios)))
    cm.measured_Lf = best
    return best


def recover_score(cm: ConsistencyModel, grid: TimeGrid) -> ScoreModel:
    """Score model at the second grid time recovered from a consistency
    model: s(x) = (f(x, t_2) - e^{h_1} x) / (e^{h_1} - 1)."""
    if grid.n_points < 2:
        raise ValueError("grid needs at least 2 points")
    t2 = float(grid.points[1])
    h1 = t2 - float(grid.points[0])
    denom = np.expm1(h1)
    if denom < 1e-12:
        raise ValueError(f"e^h1 - 1 = {denom} too small to divide by")
    growth = np.exp(h1)

    def fn(x: np.ndarray, t: float) -> np.ndarray:
        return (cm(x, t2) - growth * x) / denom

    return ScoreModel(
        fn=fn,
        dim=cm.dim,
        kind="recovered",
        provenance={"kind": "recovered", "t2": t2, "h1": h1,
                    "base": dict(cm.provenance)},
    )
