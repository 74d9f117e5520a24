"""Experiment runner tying distributions, models, samplers and metrics
into the scaling-law measurements, plus config parsing, log-log slope
fitting, and deterministic report emission.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import MixtureParams, marginal_at, sample
from .metrics import (fit_gaussian, tv_gaussian_1d, w2_fit_pair,
                      w2_gaussian_fit, w2_sliced)
from .models import (ConsistencyModel, discretized_cm, estimate_lipschitz,
                     exact_cm, exact_score_model, measure_cm_error,
                     measure_score_error, perturb_cm, perturb_score)
from .objectives import GradGapPoint, ParametricCM, grad_gap
from .rng import derive_rng
from .samplers import (MultistepSchedule, fixed_time_schedule, multistep,
                       one_step, ou_smooth, ulmc_run)
from .schedule import GridRangeError, TimeGrid, build_grid, uniform_grid
from .distributions import SampleBatch, score, score_hessian_norm, \
    hessian_bound_bounded_support


class ConfigError(ValueError):
    """Config validation failure; message carries the offending field path."""


@dataclass(frozen=True)
class FitResult:
    """Least-squares line on (log x, log y)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "n_points": self.n_points}


def fit_loglog(xs, ys) -> FitResult:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape[0] < 3:
        raise ValueError("need >= 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("all values must be positive for a log-log fit")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(slope=float(slope), intercept=float(intercept),
                     r_squared=float(np.clip(r2, 0.0, 1.0)),
                     n_points=int(xs.shape[0]))


def _grid_for(delta: float, h: float, T: float) -> TimeGrid:
    """Two-stage grid when the preconditions admit one, uniform otherwise."""
    if delta < h / 2.0:
        return build_grid(delta, h, T)
    return uniform_grid(delta, h, T)


# ---------------------------------------------------------------------------
# experiment cores (also driven directly by the acceptance suite)
# ---------------------------------------------------------------------------

def h_sweep_one_step(dist: MixtureParams, delta: float, T: float, h_list,
                     floor_h: float, n: int, seed: int) -> dict:
    """One-step sampling error W2(q_1, p_delta) on fitted Gaussians as a
    function of the uniform-stage step size h, with common random numbers
    across h so the Monte-Carlo component is shared.

    The h-independent floor is measured at floor_h using the uniform-grid
    family: F = 2*err(floor_h) - err(2*floor_h), which cancels the linear
    discretization term of those two runs and leaves the pure limit error.
    """
    score_model = exact_score_model(dist)
    p_delta = marginal_at(dist, delta)

    def err_at(grid: TimeGrid) -> float:
        cm = discretized_cm(score_model, grid)
        batch = one_step(cm, T, n, seed)
        return w2_gaussian_fit(batch, p_delta).value

    rows = []
    for h in h_list:
        e = err_at(_grid_for(delta, float(h), T))
        rows.append({"h": float(h), "w2": e})
    e_floor = err_at(uniform_grid(delta, floor_h, T))
    e_floor2 = err_at(uniform_grid(delta, 2.0 * floor_h, T))
    floor = 2.0 * e_floor - e_floor2
    for r in rows:
        r["w2_excess"] = r["w2"] - floor
    return {"rows": rows, "floor": floor, "floor_h": floor_h,
            "w2_at_floor_h": e_floor, "w2_at_2floor_h": e_floor2}


def eps_sweep_one_step(dist: MixtureParams, delta: float, h: float, T: float,
                       eps_list, inject: str, n: int, seed: int,
                       n_mc_measure: int = 400) -> dict:
    """One-step error as a function of injected score error ("sc") or
    consistency error ("cm").

    The eps = 0 run shares the same input noise (common random numbers),
    and the injection's contribution is isolated as the W2 between the
    perturbed and unperturbed output laws (fitted Gaussians) -- the exact
    term the error decomposition adds on top of the shared floor.  The
    x-axis is the independently measured eps-hat, not the target.
    """
    if inject not in ("sc", "cm"):
        raise ValueError("inject must be 'sc' or 'cm'")
    grid = _grid_for(delta, h, T)
    exact = exact_score_model(dist)
    p_delta = marginal_at(dist, delta)
    base_cm = discretized_cm(exact, grid)
    base_batch = one_step(base_cm, T, n, seed)
    base_err = w2_gaussian_fit(base_batch, p_delta).value

    pert_seed = int(derive_rng(seed, "inject-seed").integers(2**63))
    rows = []
    for eps in eps_list:
        eps = float(eps)
        if inject == "sc":
            sm = perturb_score(dist, eps, pert_seed)
            cm = discretized_cm(sm, grid)
            eps_hat = measure_score_error(sm, dist, grid, n_mc_measure, seed)
        else:
            cm = perturb_cm(base_cm, eps, pert_seed)
            eps_hat = measure_cm_error(cm, exact, dist, grid,
                                       n_mc_measure, seed)
        batch = one_step(cm, T, n, seed)
        err = w2_gaussian_fit(batch, p_delta).value
        excess = w2_fit_pair(batch, base_batch).value
        rows.append({"eps_target": eps, "eps_hat": float(eps_hat),
                     "w2": err, "w2_excess": excess})
    return {"rows": rows, "baseline_w2": base_err, "inject": inject}


def multistep_contraction(dist: MixtureParams, delta: float, h: float,
                          T: float, eps_cm: float, n_rounds: int, n: int,
                          seed: int, ratio_cut: float = 0.75) -> dict:
    """Multistep sampling on the fixed-time schedule: per-round error,
    per-round ratios, and the detected plateau.

    plateau_k is the first round whose improvement ratio exceeds ratio_cut;
    plateau_w2 is the worst error from that round on.
    """
    grid = _grid_for(delta, h, T)
    exact = exact_score_model(dist)
    base_cm = discretized_cm(exact, grid)
    pert_seed = int(derive_rng(seed, "inject-seed").integers(2**63))
    cm = perturb_cm(base_cm, eps_cm, pert_seed) if eps_cm > 0 else base_cm
    lf = estimate_lipschitz(cm, dist, T, 500,
                            int(derive_rng(seed, "lf-seed").integers(2**63)))
    sched = fixed_time_schedule(grid, lf, n_rounds)
    p_delta = marginal_at(dist, delta)
    batches = multistep(cm, sched, n, seed)
    w2s = [w2_gaussian_fit(b, p_delta).value for b in batches]
    ratios = [w2s[k] / w2s[k - 1] for k in range(1, len(w2s))]
    plateau_k = None
    for k, r in enumerate(ratios, start=2):
        if r > ratio_cut:
            plateau_k = k
            break
    plateau_w2 = max(w2s[plateau_k - 1:]) if plateau_k is not None else None
    return {
        "rows": [{"k": k + 1, "w2": w2s[k],
                  "ratio": ratios[k - 1] if k >= 1 else None}
                 for k in range(len(w2s))],
        "t_hat": float(sched.times[-1]) if sched.n_steps > 1 else None,
        "lipschitz_hat": lf,
        "one_step_w2": w2s[0],
        "plateau_k": plateau_k,
        "plateau_w2": plateau_w2,
        "ratio_cut": ratio_cut,
    }


def stationary_suite(n: int, seed: int, tau_ou: float = 0.05,
                     gamma: float = 1.0, tau_ulmc: float = 0.005,
                     n_ulmc: int = 200, n_proj: int = 64) -> dict:
    """Every sampler applied to stationary data N(0, I_2), compared by
    sliced W2 to a fresh stationary batch; the noise floor is the sliced
    W2 between two independent fresh batches of the same size."""
    dist = MixtureParams.standard_normal(2)
    delta, T = 0.01, 2.0
    cm = exact_cm(dist, delta)
    score_at_delta = exact_score_model(dist)

    ref = derive_rng(seed, "fresh-ref").standard_normal((n, 2))
    fresh_a = derive_rng(seed, "fresh-a").standard_normal((n, 2))
    floor = w2_sliced(fresh_a, ref, n_proj=n_proj, seed=seed).value

    q1 = one_step(cm, T, n, seed)
    sched = MultistepSchedule(times=np.array([T, 0.7, 0.7, 0.7]), delta=delta)
    qk = multistep(cm, sched, n, seed)[-1]
    q_ou = ou_smooth(q1, tau_ou, seed)
    q_ulmc = ulmc_run(score_at_delta, q1, gamma, tau_ulmc, n_ulmc, seed)

    rows = []
    for name, batch in [("one_step", q1), ("multistep_k4", qk),
                        ("one_step_ou", q_ou), ("one_step_ulmc", q_ulmc)]:
        val = w2_sliced(batch, ref, n_proj=n_proj, seed=seed).value
        rows.append({"sampler": name, "sliced_w2": val,
                     "ratio_to_floor": val / floor})
    return {"rows": rows, "noise_floor": floor, "n": n}


def ou_tv_bound_check(m_list=(0.1, 0.3, 0.5), tau_list=(0.01, 0.05)) -> dict:
    """Analytic check of the smoothing inequality
    TV(N(0,1) P^tau, N(m,1) P^tau) <= W1 / (2 sqrt(e^{2 tau} - 1)):
    both smoothed laws stay unit-variance with means scaled by e^{-tau},
    so the left side is computable by quadrature."""
    rows = []
    violations = 0
    for m in m_list:
        for tau in tau_list:
            shrink = float(np.exp(-tau))
            tv = tv_gaussian_1d(0.0, 1.0, m * shrink, 1.0).value
            bound = m / (2.0 * np.sqrt(np.expm1(2.0 * tau) ))
            ok = tv <= bound + 1e-6
            violations += 0 if ok else 1
            rows.append({"m": float(m), "tau": float(tau), "tv": tv,
                         "bound": float(bound), "ok": ok})
    return {"rows": rows, "violations": violations}


def hessian_bound_check(radius: float = 2.0, n_masses: int = 8,
                        t_list=(0.1, 0.5, 1.0), n_points: int = 100,
                        seed: int = 0) -> dict:
    """Score-Hessian operator norm at p_t-distributed points versus the
    bounded-support closed-form bound, for point masses on a circle."""
    dist = MixtureParams.circle_point_masses(radius, n_masses)
    rows = []
    violations = 0
    for j, t in enumerate(t_list):
        pt = marginal_at(dist, float(t))
        x = sample(pt, n_points,
                   int(derive_rng(seed, "hess", j).integers(2**63))).points
        norms = np.array([score_hessian_norm(dist, float(t), xi)
                          for xi in x])
        bound = hessian_bound_bounded_support(radius, float(t))
        bad = int(np.sum(norms > bound + 1e-9))
        violations += bad
        rows.append({"t": float(t), "max_norm": float(norms.max()),
                     "bound": float(bound), "violations": bad})
    return {"rows": rows, "violations": violations}


def ulmc_correction_experiment(shift: float = 0.3, gamma: float = 1.0,
                               tau: float = 0.01, n_steps: int = 100,
                               n: int = 100_000, seed: int = 0) -> dict:
    """Corrector run on a shifted unit Gaussian toward N(0,1): total
    variation (analytic, between fitted Gaussians) before and after."""
    target = MixtureParams.standard_normal(1)
    score_model = exact_score_model(target)
    x0 = shift + derive_rng(seed, "ulmc-init").standard_normal((n, 1))
    batch = SampleBatch(points=x0, seed=int(seed), time_tag=0.0)

    def fitted_tv(b) -> float:
        mu, cov = fit_gaussian(b.points if isinstance(b, SampleBatch) else b)
        return tv_gaussian_1d(float(mu[0]), float(np.sqrt(cov[0, 0])),
                              0.0, 1.0).value

    tv_before = fitted_tv(batch)
    out = ulmc_run(score_model, batch, gamma, tau, n_steps, seed)
    tv_after = fitted_tv(out)
    return {"tv_before": tv_before, "tv_after": tv_after,
            "ratio": tv_after / tv_before, "gamma": gamma, "tau": tau,
            "n_steps": n_steps, "n_tau": n_steps * tau}


def score_recovery_experiment(eps_sc: float = 0.1, delta: float = 0.01,
                              h: float = 0.1, T: float = 1.0,
                              n_mc: int = 300, seed: int = 0) -> dict:
    """Recover a score model at the second grid time from a consistency
    map built on a perturbed score, and compare its L2(p_{t_2}) error to
    the combined consistency/score error budget."""
    from .models import empirical_cm, recover_score

    dist = MixtureParams.gaussian([0.0], [4.0])
    grid = build_grid(delta, h, T)
    pert_seed = int(derive_rng(seed, "inject-seed").integers(2**63))
    sm = perturb_score(dist, eps_sc, pert_seed)
    cm = empirical_cm(sm, delta)
    eps_sc_hat = measure_score_error(sm, dist, grid, 400, seed)
    eps_cm_hat = measure_cm_error(cm, sm, dist, grid, 200, seed)

    recovered = recover_score(cm, grid)
    t2 = float(grid.points[1])
    x = sample(marginal_at(dist, t2), n_mc,
               int(derive_rng(seed, "recovery-eval").integers(2**63))).points
    err = recovered(x, t2) - score(dist, t2, x)
    l2_err = float(np.sqrt(np.mean(np.sum(err**2, axis=1))))
    budget = float(np.sqrt(eps_cm_hat**2 + eps_sc_hat**2))
    return {"l2_error": l2_err, "eps_sc_hat": eps_sc_hat,
            "eps_cm_hat": eps_cm_hat, "budget": budget, "t2": t2,
            "ratio": l2_err / budget if budget > 0 else float("inf")}


def gradcheck_experiment(dt_list=(0.2, 0.1, 0.05), n_mc: int = 100_000,
                         seed: int = 0, dim: int = 1, m: int = 32,
                         delta: float = 0.01, t_base: float = 0.5) -> dict:
    """CT-vs-CD gradient gap across grid spacings plus the fitted log-log
    slope (second-order agreement predicts slope 2)."""
    dist = MixtureParams.gaussian(np.zeros(dim), 4.0 * np.ones(dim))
    theta0 = 0.1 * derive_rng(seed, "theta0").standard_normal((dim, m))
    pcm = ParametricCM.create(dim, m, seed, delta, theta=theta0)
    pts = grad_gap(pcm, dist, exact_score_model(dist), dt_list, n_mc, seed,
                   t_base=t_base)
    fit = fit_loglog([p.dt for p in pts], [p.gap for p in pts])
    return {"rows": [p.to_dict() for p in pts], "fit": fit.to_dict()}


# ---------------------------------------------------------------------------
# config-driven runner
# ---------------------------------------------------------------------------

_KINDS = ("h-sweep", "eps-sc-sweep", "eps-cm-sweep", "multistep",
          "stationary", "ou-tv", "hessian", "ulmc-correction", "gradcheck")

_ALLOWED_KEYS = {
    "kind", "distribution", "delta", "h", "T", "h_list", "floor_h",
    "eps_list", "eps_cm", "n_rounds", "n", "seed", "tau", "gamma",
    "n_steps", "dt_list", "n_mc", "shift", "m_list", "tau_list",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description parsed from strict JSON."""

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        unknown = set(raw) - _ALLOWED_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kind = raw.get("kind")
        if kind not in _KINDS:
            raise ConfigError(f"kind: expected one of {_KINDS}, got {kind!r}")
        params = {k: v for k, v in raw.items() if k != "kind"}
        for key in ("h_list", "eps_list", "dt_list", "m_list", "tau_list"):
            if key in params and not params[key]:
                raise ConfigError(f"{key}: sweep list must be nonempty")
        return cls(kind=kind, params=params)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _dist_from(params: dict) -> MixtureParams:
    raw = params.get("distribution")
    if raw is None:
        return MixtureParams.gaussian(np.zeros(2), 4.0 * np.ones(2))
    return MixtureParams.from_json(json.dumps(raw))


def run_experiment(cfg: ExperimentConfig, seed: Optional[int] = None) -> dict:
    """Dispatch a config to the matching experiment core; the returned
    report embeds the config so every row is re-derivable."""
    p = dict(cfg.params)
    root = int(seed if seed is not None else p.get("seed", 0))
    kind = cfg.kind
    try:
        if kind == "h-sweep":
            body = h_sweep_one_step(
                _dist_from(p), p.get("delta", 0.01), p.get("T", 2.0),
                p.get("h_list", [0.2, 0.1, 0.05, 0.025]),
                p.get("floor_h", 0.0125), p.get("n", 50_000), root)
        elif kind in ("eps-sc-sweep", "eps-cm-sweep"):
            body = eps_sweep_one_step(
                _dist_from(p), p.get("delta", 0.01), p.get("h", 0.025),
                p.get("T", 2.0), p.get("eps_list", [0.2, 0.1, 0.05]),
                "sc" if kind == "eps-sc-sweep" else "cm",
                p.get("n", 50_000), root)
        elif kind == "multistep":
            body = multistep_contraction(
                _dist_from(p), p.get("delta", 0.01), p.get("h", 0.05),
                p.get("T", 2.0), p.get("eps_cm", 0.05),
                p.get("n_rounds", 10), p.get("n", 50_000), root)
        elif kind == "stationary":
            body = stationary_suite(p.get("n", 100_000), root)
        elif kind == "ou-tv":
            body = ou_tv_bound_check(p.get("m_list", (0.1, 0.3, 0.5)),
                                     p.get("tau_list", (0.01, 0.05)))
        elif kind == "hessian":
            body = hessian_bound_check(seed=root)
        elif kind == "ulmc-correction":
            body = ulmc_correction_experiment(
                shift=p.get("shift", 0.3), gamma=p.get("gamma", 1.0),
                tau=p.get("tau", 0.01), n_steps=p.get("n_steps", 100),
                n=p.get("n", 100_000), seed=root)
        else:  # gradcheck
            body = gradcheck_experiment(
                dt_list=p.get("dt_list", (0.2, 0.1, 0.05)),
                n_mc=p.get("n_mc", 100_000), seed=root)
    except (GridRangeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config rejected by {kind}: {exc}") from exc
    return {"kind": kind, "seed": root, "config": p, "result": body}


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays to plain Python types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def render_json(report: dict) -> str:
    """Canonical JSON: sorted keys, fixed separators, LF newline at end."""
    return json.dumps(_jsonable(report), sort_keys=True,
                      separators=(",", ":"), allow_nan=False) + "\n"


def _rows_of(report: dict) -> list[dict]:
    body = report.get("result", report)
    rows = body.get("rows")
    if rows is None:
        rows = [ {k: v for k, v in body.items() if not isinstance(v, (dict, list))} ]
    return rows


def render_csv(report: dict) -> str:
    """Row table as CSV with a fixed, sorted column order (UTF-8, LF)."""
    rows = _rows_of(report)
    cols = sorted({k for r in rows for k in r})
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join("" if r.get(c) is None else str(r.get(c))
                              for c in cols))
    return "\n".join(lines) + "\n"


def emit(report: dict, out_dir: str, fmt: str = "json",
         stem: str = "report") -> str:
    """Write the report to out_dir in the requested format; returns the
    path written."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{stem}.{fmt}")
    text = render_json(report) if fmt == "json" else render_csv(report)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
