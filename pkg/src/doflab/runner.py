"""Experiment runner: sweeps, theory curves, decompositions, figure recipes.

Every command resolves to a list of grid points, maps them (serially or over
a process pool), reduces in grid order, and writes one or more CSVs plus a
manifest sidecar. Results are byte-identical for identical (config, seed)
regardless of worker count, because all randomness is keyed by replication
index and the reduction order is fixed.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import scipy.linalg as sla

from . import __version__
from .asymptotics import (
    SignalLaw,
    isotropic_model,
    lasso_equivalents,
    lassoless_equivalents,
    ridge_equivalents,
    ridgeless_equivalents,
    spectral_from_ar1,
)
from .config import (
    ConfigError,
    build_estimator,
    build_generator,
    build_predictor,
    build_proxy_grid,
    build_shift,
    validate_config,
)
from .data import GeneratorSpec, TaskInstance
from .decomposition import scenario_grid, shapley_attribution
from .estimator import (
    EstimatorConfig,
    _fixed_x_df_with_se,
    dof_report,
    estimate_sigma2_proxy,
)
from .matching import df_from_optimism, match_df_derivative
from .predictors import PredictorSpec, fit, smoother_weights

__all__ = ["FIGURES", "reproduce", "run_config", "run_decompose", "run_sweep", "run_asymptotics"]


# ---------------------------------------------------------------------------
# CSV + manifest plumbing


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def write_manifest(out_path: str, cfg: dict, seed: int, reps: int, outputs: list[str]) -> None:
    payload = {
        "tool": "doflab",
        "version": __version__,
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "seed": seed,
        "replications": reps,
        "outputs": [os.path.basename(p) for p in outputs],
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _worker_cap(workers: int | None) -> int:
    cap = os.environ.get("DOFLAB_MAX_WORKERS")
    workers = 1 if workers is None else int(workers)
    if cap is not None:
        workers = min(workers, int(cap))
    return max(workers, 1)


def _map_points(fn, payloads, workers):
    workers = min(_worker_cap(workers), len(payloads))
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


# ---------------------------------------------------------------------------
# sweep command

SWEEP_COLUMNS = [
    "parameter", "value", "err_R", "err_T", "optimism", "optimism_se",
    "df_fixed", "df_fixed_se", "df_emergent", "df_emergent_se",
    "df_intrinsic", "df_intrinsic_se", "df_bias", "df_bias_se", "sigma2_used",
]


def _sweep_points(sweep_cfg: dict) -> list[tuple[str, float, dict]]:
    """(label, coordinate value, predictor overrides) per grid point."""
    points = []
    if "points" in sweep_cfg:
        for override in sweep_cfg["points"]:
            coord = float(np.prod([v for v in override.values()]))
            points.append(("point", coord, dict(override)))
        return points
    param = sweep_cfg["parameter"]
    for value in sweep_cfg["values"]:
        points.append((param, float(value), {param: value}))
    return points


def _sweep_point_job(payload):
    gen, pred, cfg, proxy_grid, fixed_x, label, value = payload
    rep = dof_report(gen, pred, cfg, proxy_grid=proxy_grid)
    emergent = rep.emergent
    row = {
        "parameter": label,
        "value": value,
        "err_R": emergent.err_R,
        "err_T": emergent.err_T,
        "optimism": emergent.optimism,
        "optimism_se": emergent.se,
        "df_fixed": rep.df_fixed,
        "df_fixed_se": rep.df_fixed_se,
        "df_emergent": rep.df_emergent,
        "df_emergent_se": rep.df_emergent_se,
        "df_intrinsic": rep.df_intrinsic,
        "df_intrinsic_se": rep.df_intrinsic_se,
        "df_bias": rep.df_bias,
        "df_bias_se": rep.df_bias_se,
        "sigma2_used": rep.sigma2_used,
    }
    if fixed_x not in (None, "auto"):
        value_se = _fixed_x_df_with_se(gen, pred, replace(cfg, sigma2=rep.sigma2_used), fixed_x)
        row["df_fixed"], row["df_fixed_se"] = value_se
    return row


def _nested_min_norm_errors(X, X0, responses, test_responses, p_values):
    """Training/test MSE of min-norm least squares on nested column prefixes.

    One incremental factorization per replication instead of a fresh SVD per
    prefix: Gram-Schmidt while p <= n (least squares), then rank-one updates
    of the kernel matrix X X' for the p > n interpolation branch. Yields
    (p, [(err_T, err_R) per response], rank).
    """
    n, P = X.shape
    p_values = sorted(p_values)
    Q = np.zeros((n, min(n, P)))
    G = np.zeros((X0.shape[0], min(n, P)))  # X0 R^{-1}
    R = np.zeros((min(n, P), min(n, P)))
    qy = [np.zeros(min(n, P)) for _ in responses]
    yhat = [np.zeros(n) for _ in responses]
    pred0 = [np.zeros(X0.shape[0]) for _ in responses]
    K = T0 = None
    wanted = iter(p_values)
    next_p = next(wanted)
    out = []
    for p in range(1, max(p_values) + 1):
        col = X[:, p - 1]
        col0 = X0[:, p - 1]
        if p <= n:
            j = p - 1
            u = col.copy()
            r_upper = np.zeros(j)
            for _ in range(2):  # reorthogonalize for stability near p = n
                proj = Q[:, :j].T @ u
                u -= Q[:, :j] @ proj
                r_upper += proj
            rjj = np.linalg.norm(u)
            Q[:, j] = u / rjj
            R[:j, j] = r_upper
            R[j, j] = rjj
            G[:, j] = (col0 - G[:, :j] @ r_upper) / rjj
            for i in range(len(responses)):
                coef = Q[:, j] @ responses[i]
                qy[i][j] = coef
                yhat[i] += coef * Q[:, j]
                pred0[i] += coef * G[:, j]
            preds = [(yhat[i], pred0[i]) for i in range(len(responses))]
        else:
            if K is None:
                Xc = X[:, :n]
                K = Xc @ Xc.T
                T0 = X0[:, :n] @ Xc.T
                for q in range(n, p - 1):  # catch up if the grid skipped columns
                    K += np.outer(X[:, q], X[:, q])
                    T0 += np.outer(X0[:, q], X[:, q])
            K += np.outer(col, col)
            T0 += np.outer(col0, col)
            if p < next_p:
                continue
            try:
                alphas = [sla.cho_solve(sla.cho_factor(K, lower=True), resp)
                          for resp in responses]
            except np.linalg.LinAlgError:
                alphas = [np.linalg.lstsq(K, resp, rcond=None)[0] for resp in responses]
            preds = [(K @ a, T0 @ a) for a in alphas]
        if p == next_p:
            errs = [(float(np.mean((preds[i][0] - responses[i]) ** 2)),
                     float(np.mean((preds[i][1] - test_responses[i]) ** 2)))
                    for i in range(len(responses))]
            out.append((p, errs, float(min(p, n))))
            next_p = next(wanted, None)
            if next_p is None:
                break
    return out


def _nested_sweep_rows(gen: GeneratorSpec, p_values, cfg: EstimatorConfig) -> list[dict]:
    """Feature-nested min-norm sweep: one data draw per rep, columns ranked by |beta|.

    Reuses each replication's incremental factorization for the signal and
    pure-noise responses, so emergent and intrinsic estimates are paired.
    """
    sigma2 = cfg.sigma2 if cfg.sigma2 is not None else gen.sigma2
    p_values = [int(p) for p in p_values]
    acc = {p: {"err_T": [], "err_R": [], "err_T_i": [], "err_R_i": [], "rank": []}
           for p in p_values}
    for r in range(cfg.n_reps):
        task = TaskInstance(gen, cfg.seed, r)
        X, _, y = task.train()
        X0, _, y0 = task.test(cfg.test_size)
        v = task.noise(gen.n, "pure-noise-train", sigma2)
        v0 = task.noise(cfg.test_size, "pure-noise-test", sigma2)
        order = np.argsort(-np.abs(task.beta), kind="stable")
        rows = _nested_min_norm_errors(X[:, order], X0[:, order], [y, v], [y0, v0],
                                       p_values)
        for p, ((et, er), (eti, eri)), rank in rows:
            a = acc[p]
            a["err_T"].append(et)
            a["err_R"].append(er)
            a["err_T_i"].append(eti)
            a["err_R_i"].append(eri)
            a["rank"].append(rank)
    rows = []
    n = gen.n
    for p in p_values:
        a = {k: np.asarray(vals) for k, vals in acc[p].items()}
        opt = a["err_R"] - a["err_T"]
        opt_i = a["err_R_i"] - a["err_T_i"]
        row = {"parameter": "p", "value": float(p),
               "err_R": float(a["err_R"].mean()), "err_T": float(a["err_T"].mean()),
               "optimism": float(opt.mean()),
               "optimism_se": float(opt.std(ddof=1) / np.sqrt(len(opt))),
               "df_fixed": float(a["rank"].mean()),
               "df_fixed_se": float(a["rank"].std(ddof=1) / np.sqrt(len(opt))),
               "sigma2_used": sigma2}
        for name, series in (("df_emergent", opt), ("df_intrinsic", opt_i)):
            mean_opt = float(series.mean())
            se_opt = float(series.std(ddof=1) / np.sqrt(len(series)))
            row[name] = float(df_from_optimism(mean_opt, sigma2, n))
            slope = match_df_derivative(max(mean_opt, 0.0) / sigma2, n) / sigma2
            row[name + "_se"] = float(slope * se_opt)
        diff = opt - opt_i
        slope_e = match_df_derivative(max(opt.mean(), 0.0) / sigma2, n) / sigma2
        slope_i = match_df_derivative(max(opt_i.mean(), 0.0) / sigma2, n) / sigma2
        var_bias = (slope_e**2 * opt.var(ddof=1) + slope_i**2 * opt_i.var(ddof=1)
                    - 2 * slope_e * slope_i * float(np.cov(opt, opt_i, ddof=1)[0, 1]))
        row["df_bias"] = row["df_emergent"] - row["df_intrinsic"]
        row["df_bias_se"] = float(np.sqrt(max(var_bias, 0.0) / len(diff)))
        rows.append(row)
    return rows


def run_sweep(cfg: dict, seed: int | None = None, reps: int | None = None,
              out: str | None = None, workers: int | None = None) -> list[str]:
    """Run a sweep config; returns the list of written files."""
    gen = build_generator(cfg["generator"])
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    est = build_estimator(cfg.get("estimator"), seed, reps)
    sweep_cfg = cfg.get("sweep")
    if sweep_cfg is None:
        raise ConfigError("sweep config needs a sweep section")
    out = out or cfg.get("output") or "sweep.csv"

    if sweep_cfg.get("nested_features"):
        values = [int(v) for v in sweep_cfg["values"]]
        rows = _nested_sweep_rows(gen, values, est)
    else:
        proxy_grid = build_proxy_grid((cfg.get("estimator") or {}).get("proxy_grid"))
        fixed_x = (cfg.get("estimator") or {}).get("fixed_x", "auto")
        if est.sigma2 is None and proxy_grid is not None:
            est = replace(est, sigma2=estimate_sigma2_proxy(gen, proxy_grid, est))
        payloads = []
        for label, value, override in _sweep_points(sweep_cfg):
            pred = build_predictor(cfg.get("predictor", {}), **override)
            payloads.append((gen, pred, est, proxy_grid, fixed_x, label, value))
        rows = _map_points(_sweep_point_job, payloads, workers)

    write_csv(out, SWEEP_COLUMNS, rows)
    write_manifest(out, cfg, seed, est.n_reps, [out])
    return [out]


# ---------------------------------------------------------------------------
# asymptotics command

THEORY_COLUMNS = [
    "parameter", "value", "df_fixed_norm", "df_intrinsic_norm", "df_emergent_norm",
    "mu", "tau", "diverged",
]
MC_COLUMNS = [
    "mc_df_fixed_norm", "mc_df_fixed_se", "mc_df_emergent_norm", "mc_df_emergent_se",
    "mc_df_intrinsic_norm", "mc_df_intrinsic_se",
]


def _build_signal_law(section: dict | None, gamma: float) -> SignalLaw:
    if not section or section.get("law") in (None, "null"):
        return SignalLaw.point_mass(0.0)
    law = section["law"]
    if law == "point":
        return SignalLaw.point_mass(float(section.get("amplitude", 0.0)))
    if law == "bernoulli":
        delta = float(section["delta"])
        amplitude = section.get("amplitude", "auto")
        if amplitude == "auto":
            amplitude = 1.0 / np.sqrt(delta * gamma)
        return SignalLaw.bernoulli(delta, float(amplitude))
    raise ConfigError(f"unknown signal law {law!r}")


def _spectral_model(theory: dict, gamma: float):
    spectrum = theory.get("spectrum") or {"kind": "isotropic"}
    sigma2 = float(theory.get("sigma2", 1.0))
    sigma2_nl = float(theory.get("sigma2_nl", 0.0))
    if spectrum.get("kind", "isotropic") == "isotropic":
        return isotropic_model(gamma, sigma2,
                               signal_energy=float(spectrum.get("signal_energy", 0.0)),
                               sigma2_nl=sigma2_nl)
    if spectrum["kind"] == "ar1":
        return spectral_from_ar1(
            int(spectrum["p"]), float(spectrum.get("rho", 0.0)), gamma, sigma2,
            signal_energy=float(spectrum.get("signal_energy", 1.0)),
            include_nonlinear=bool(spectrum.get("nonlinear", False)),
        )
    raise ConfigError(f"unknown spectrum kind {spectrum.get('kind')!r}")


def _theory_row(model_name: str, theory: dict, param: str, value: float) -> dict:
    gamma = float(value if param == "gamma" else theory.get("gamma", 1.0))
    lam = float(value if param == "lam" else theory.get("lam", 0.0))
    sigma2 = float(theory.get("sigma2", 1.0))
    if model_name == "ridge":
        sol = ridge_equivalents(lam, _spectral_model(theory, gamma))
        mu, tau = sol.mu, np.nan
        fixed, intrinsic, emergent, diverged = (
            sol.df_fixed_norm, sol.df_intrinsic_norm, sol.df_emergent_norm, sol.diverged)
    elif model_name == "ridgeless":
        sol = ridgeless_equivalents(_spectral_model(theory, gamma))
        mu, tau = sol.mu, np.nan
        fixed, intrinsic, emergent, diverged = (
            sol.df_fixed_norm, sol.df_intrinsic_norm, sol.df_emergent_norm, sol.diverged)
    elif model_name == "lasso":
        law = _build_signal_law(theory.get("signal"), gamma)
        eq = lasso_equivalents(lam, gamma, law, sigma2)
        mu, tau = eq.signal.mu, eq.signal.tau
        fixed, intrinsic, emergent = (
            eq.df_fixed_norm, eq.df_intrinsic_norm, eq.df_emergent_norm)
        diverged = not (eq.signal.converged and eq.null.converged)
    elif model_name == "lassoless":
        law = _build_signal_law(theory.get("signal"), gamma)
        eq = lassoless_equivalents(gamma, law, sigma2)
        mu, tau = eq.signal.mu, eq.signal.tau
        fixed, intrinsic, emergent = (
            eq.df_fixed_norm, eq.df_intrinsic_norm, eq.df_emergent_norm)
        diverged = abs(gamma - 1.0) < 1e-12
    else:
        raise ConfigError(f"unknown theory model {model_name!r}")
    return {"parameter": param, "value": float(value), "df_fixed_norm": fixed,
            "df_intrinsic_norm": intrinsic, "df_emergent_norm": emergent,
            "mu": mu, "tau": tau, "diverged": diverged}


def _mc_pair_job(payload):
    gen, pred, est = payload
    rep = dof_report(gen, pred, est)
    n = gen.n
    return {
        "mc_df_fixed_norm": rep.df_fixed / n,
        "mc_df_fixed_se": rep.df_fixed_se / n,
        "mc_df_emergent_norm": rep.df_emergent / n,
        "mc_df_emergent_se": rep.df_emergent_se / n,
        "mc_df_intrinsic_norm": rep.df_intrinsic / n,
        "mc_df_intrinsic_se": rep.df_intrinsic_se / n,
    }


def run_asymptotics(cfg: dict, seed: int | None = None, reps: int | None = None,
                    out: str | None = None, workers: int | None = None) -> list[str]:
    theory = cfg.get("theory")
    if theory is None:
        raise ConfigError("asymptotics config needs a theory section")
    grid = theory.get("grid")
    if grid is None:
        raise ConfigError("theory section needs a grid")
    param = grid["parameter"]
    if param not in ("lam", "gamma"):
        raise ConfigError("theory grid parameter must be lam or gamma")
    model_name = theory["model"]
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out = out or cfg.get("output") or "asymptotics.csv"

    rows = [_theory_row(model_name, theory, param, v) for v in grid["values"]]
    columns = list(THEORY_COLUMNS)

    mc = cfg.get("mc")
    if mc:
        est = build_estimator(mc.get("estimator"), seed, reps)
        payloads = []
        for value in grid["values"]:
            gen_section = dict(mc["generator"])
            pred_section = dict(mc.get("predictor") or {})
            if param == "gamma":
                gen_section["p"] = int(round(float(value) * gen_section["n"]))
            else:
                pred_section["lam"] = float(value)
            payloads.append((build_generator(gen_section),
                             build_predictor(pred_section), est))
        mc_rows = _map_points(_mc_pair_job, payloads, workers)
        for row, mc_row in zip(rows, mc_rows):
            row.update(mc_row)
        columns += MC_COLUMNS

    write_csv(out, columns, rows)
    write_manifest(out, cfg, seed, 0 if not mc else est.n_reps, [out])
    return [out]


# ---------------------------------------------------------------------------
# decompose command

DECOMPOSE_COLUMNS = [
    "parameter", "value", "df00", "df01", "df10", "df11",
    "se00", "se01", "se10", "se11", "phi_bias", "phi_cov", "efficiency_residual",
]


def _decompose_point_job(payload):
    gen, pred, shift, est, label, value = payload
    grid = scenario_grid(gen, pred, shift, est)
    attr = shapley_attribution(grid)
    return {
        "parameter": label, "value": value,
        "df00": grid.df00, "df01": grid.df01, "df10": grid.df10, "df11": grid.df11,
        "se00": grid.se00, "se01": grid.se01, "se10": grid.se10, "se11": grid.se11,
        "phi_bias": attr.phi_bias, "phi_cov": attr.phi_cov,
        "efficiency_residual": grid.df11 - grid.df00 - attr.phi_bias - attr.phi_cov,
    }


def run_decompose(cfg: dict, seed: int | None = None, reps: int | None = None,
                  out: str | None = None, workers: int | None = None) -> list[str]:
    gen = build_generator(cfg["generator"])
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    est = build_estimator(cfg.get("estimator"), seed, reps)
    if est.sigma2 is None:
        proxy_grid = build_proxy_grid((cfg.get("estimator") or {}).get("proxy_grid"))
        if proxy_grid is None:
            raise ConfigError("decompose needs estimator.sigma2 or a proxy_grid")
        est = replace(est, sigma2=estimate_sigma2_proxy(gen, proxy_grid, est))
    shift = build_shift(cfg.get("shift"))
    out = out or cfg.get("output") or "decompose.csv"

    sweep_cfg = cfg.get("sweep")
    payloads = []
    if sweep_cfg:
        for label, value, override in _sweep_points(sweep_cfg):
            payloads.append((gen, build_predictor(cfg.get("predictor", {}), **override),
                             shift, est, label, value))
    else:
        payloads.append((gen, build_predictor(cfg["predictor"]), shift, est, "model", 0.0))
    rows = _map_points(_decompose_point_job, payloads, workers)
    write_csv(out, DECOMPOSE_COLUMNS, rows)
    write_manifest(out, cfg, seed, est.n_reps, [out])
    return [out]


# ---------------------------------------------------------------------------
# figure recipes


def _fig1_config():
    return {
        "kind": "sweep",
        "generator": {"variant": "nonlinear-ar1", "n": 100, "p": 300,
                      "rho": 0.25, "sigma": 0.4},
        "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.16},
        "sweep": {"parameter": "p", "values": list(range(1, 301)),
                  "nested_features": True},
    }


def _lasso_sweep_config(n, p, s, lam_values):
    return {
        "kind": "sweep",
        "generator": {"variant": "sparse-linear", "n": n, "p": p, "s": s, "sigma": 1.0},
        "predictor": {"family": "lasso"},
        "estimator": {"reps": 100, "test_size": 1000, "sigma2": 1.0},
        "sweep": {"parameter": "lam", "values": lam_values},
    }


def _knn_sweep_config(n):
    return {
        "kind": "sweep",
        "generator": {"variant": "nonlinear-ar1", "n": n, "p": 300,
                      "rho": 0.25, "sigma": 0.4},
        "predictor": {"family": "knn"},
        "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.16},
        "sweep": {"parameter": "k", "values": [1, 2, 3, 5, 8, 12, 20, 35, 60, 100, n]},
    }


def _ridge_theory_config(n, lam_values):
    return {
        "kind": "asymptotics",
        "theory": {"model": "ridge", "gamma": 300 / n, "sigma2": 0.16,
                   "spectrum": {"kind": "ar1", "p": 300, "rho": 0.25,
                                "signal_energy": 1.0, "nonlinear": True},
                   "grid": {"parameter": "lam", "values": lam_values}},
        "mc": {
            "generator": {"variant": "nonlinear-ar1", "n": n, "p": 300,
                          "rho": 0.25, "sigma": 0.4},
            "predictor": {"family": "ridge"},
            "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.16},
        },
    }


def _lasso_theory_config(n, lam_values):
    return {
        "kind": "asymptotics",
        "theory": {"model": "lasso", "gamma": 600 / n, "sigma2": 1.0,
                   "signal": {"law": "bernoulli", "delta": 1 / 6, "amplitude": "auto"},
                   "grid": {"parameter": "lam", "values": lam_values}},
        "mc": {
            "generator": {"variant": "bernoulli-signal", "n": n, "p": 600,
                          "delta": 1 / 6, "sigma": 1.0},
            "predictor": {"family": "lasso"},
            "estimator": {"reps": 100, "test_size": 1000, "sigma2": 1.0},
        },
    }


def _forest_config():
    leaves_ramp = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2000]
    trees_ramp = [2, 3, 5, 8, 12, 20]
    points = [{"n_trees": 1, "max_leaves": l} for l in leaves_ramp]
    points += [{"n_trees": t, "max_leaves": 2000} for t in trees_ramp]
    return {
        "kind": "sweep",
        "generator": {"variant": "linear-ar1", "n": 2000, "p": 50,
                      "rho": 0.25, "sigma": 0.5},
        "predictor": {"family": "forest", "n_trees": 1, "max_leaves": 2},
        "estimator": {"reps": 20, "test_size": 1000, "sigma2": 0.25,
                      "fixed_x_inner": 40, "fixed_x_outer": 5},
        "sweep": {"points": points},
    }


FIGURES = {
    "fig1": _fig1_config,
    "fig-lasso-under": lambda: _lasso_sweep_config(
        200, 30, 10, list(np.geomspace(0.5, 60.0, 25))),
    "fig-lasso-over": lambda: _lasso_sweep_config(
        200, 300, 100, list(np.geomspace(1.0, 120.0, 25))),
    "fig-knn-under": lambda: _knn_sweep_config(500),
    "fig-knn-over": lambda: _knn_sweep_config(200),
    "fig-ridge-under": lambda: _ridge_theory_config(500, list(np.geomspace(1e-3, 10.0, 15))),
    "fig-ridge-over": lambda: _ridge_theory_config(200, list(np.geomspace(1e-3, 10.0, 15))),
    "fig-ridgeless-theory": lambda: {
        "kind": "asymptotics",
        "theory": {"model": "ridgeless", "sigma2": 0.16,
                   "spectrum": {"kind": "ar1", "p": 300, "rho": 0.25,
                                "signal_energy": 1.0, "nonlinear": True},
                   "grid": {"parameter": "gamma",
                            "values": list(np.round(np.geomspace(0.1, 5.0, 49), 10))}},
    },
    "fig-ridgeless-mc": lambda: {
        "kind": "asymptotics",
        "theory": {"model": "ridgeless", "sigma2": 0.16,
                   "spectrum": {"kind": "ar1", "p": 300, "rho": 0.25,
                                "signal_energy": 1.0, "nonlinear": True},
                   "grid": {"parameter": "gamma", "values": [0.25, 0.5, 2.0, 4.0]}},
        "mc": {
            "generator": {"variant": "nonlinear-ar1", "n": 400, "p": 400,
                          "rho": 0.25, "sigma": 0.4},
            "predictor": {"family": "ridgeless"},
            "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.16},
        },
    },
    "fig-lasso-theory-under": lambda: _lasso_theory_config(
        800, list(np.geomspace(0.01, 3.0, 15))),
    "fig-lasso-theory-over": lambda: _lasso_theory_config(
        400, list(np.geomspace(0.01, 3.0, 15))),
    "fig-lassoless": lambda: {
        "kind": "asymptotics",
        "theory": {"model": "lassoless", "sigma2": 1.0,
                   "signal": {"law": "bernoulli", "delta": 0.1, "amplitude": "auto"},
                   "grid": {"parameter": "gamma",
                            "values": list(np.round(np.geomspace(0.2, 5.0, 41), 10))}},
    },
    "fig-forest": _forest_config,
    "fig-attribution": lambda: {
        "kind": "decompose",
        "generator": {"variant": "linear-ar1", "n": 200, "p": 100,
                      "rho": 0.25, "sigma": 0.5},
        "predictor": {"family": "ridge"},
        "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.25},
        "shift": {"scale": 1.5, "offset": 0.5},
        "sweep": {"parameter": "lam",
                  "values": list(np.geomspace(1e-3, 10.0, 10))},
    },
    "fig-random-features": lambda: {
        "kind": "sweep",
        "generator": {"variant": "nonlinear-ar1", "n": 100, "p": 300,
                      "rho": 0.25, "sigma": 0.4},
        "predictor": {"family": "random-features-ridgeless", "latent_features": 300},
        "estimator": {"reps": 100, "test_size": 1000, "sigma2": 0.16},
        "sweep": {"parameter": "out_features",
                  "values": [1, 2, 5, 10, 20, 40, 60, 80, 90, 100,
                             110, 125, 150, 200, 250, 300]},
    },
}


def reproduce(figure: str, seed: int | None = None, reps: int | None = None,
              out: str | None = None, workers: int | None = None) -> list[str]:
    """Emit the data bundle behind a named figure at desk scale."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; known: {sorted(FIGURES)}")
    cfg = FIGURES[figure]()
    out = out or f"{figure}.csv"
    outputs = run_config(cfg, seed=seed, reps=reps, out=out, workers=workers)
    if figure == "fig1":
        outputs += _split_fig1(out)
    return outputs


def _split_fig1(sweep_csv: str) -> list[str]:
    """Companion views of the nested sweep: error vs p, df vs p, error vs df."""
    with open(sweep_csv, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [dict(zip(header, line.strip().split(","))) for line in fh if line.strip()]
    base = sweep_csv[:-4] if sweep_csv.endswith(".csv") else sweep_csv
    views = {
        f"{base}_err_vs_p.csv": ["value", "err_R", "err_T"],
        f"{base}_df_vs_p.csv": ["value", "df_fixed", "df_emergent", "df_intrinsic"],
        f"{base}_err_vs_df.csv": ["df_emergent", "df_intrinsic", "err_R"],
    }
    written = []
    for path, cols in views.items():
        lines = [",".join(cols)] + [",".join(row[c] for c in cols) for row in rows]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
    return written


def run_config(cfg: dict, seed: int | None = None, reps: int | None = None,
               out: str | None = None, workers: int | None = None) -> list[str]:
    cfg = validate_config(cfg)
    kind = cfg["kind"]
    if kind == "sweep":
        return run_sweep(cfg, seed, reps, out, workers)
    if kind == "asymptotics":
        return run_asymptotics(cfg, seed, reps, out, workers)
    if kind == "decompose":
        return run_decompose(cfg, seed, reps, out, workers)
    return reproduce(cfg["figure"], seed, reps, out, workers)
