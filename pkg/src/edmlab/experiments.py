"""Experiment registry, config validation and deterministic CSV reports.

Every experiment is a function ``(params, seed, threads) -> Result`` whose
tables are written as ``<experiment>_<metric>.csv``. Floats are written with
``repr`` and no timings go into CSVs, so reruns with the same (config, seed)
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import boltzmann, denseam, flows, oscillator, plasticity, proximal
from .mathcore import derive_seed, make_rng, orthonormal_complement, sym_eig


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


class ExperimentError(RuntimeError):
    """An experiment failed while running (exit code 1)."""


# ---------------------------------------------------------------------------
# parameter schemas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, str, bool, int_list, float_list
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    doc: str = ""


def _coerce(name: str, p: Param, v):
    def bad(msg="has the wrong type"):
        return ConfigError(f"parameter {name!r} {msg} (expected {p.kind}, got {v!r})")

    if p.kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise bad()
        out = v
    elif p.kind == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise bad()
        out = float(v)
    elif p.kind == "str":
        if not isinstance(v, str):
            raise bad()
        out = v
    elif p.kind == "bool":
        if not isinstance(v, bool):
            raise bad()
        out = v
    elif p.kind in ("int_list", "float_list"):
        if not isinstance(v, list) or not v:
            raise bad()
        inner = Param(p.kind.split("_")[0], None)
        out = [_coerce(name, inner, e) for e in v]
    else:  # pragma: no cover
        raise AssertionError(p.kind)
    if p.check is not None and not p.check(out):
        raise bad("is out of range")
    return out


pos = lambda v: v > 0
prob = lambda v: 0 < v < 1
all_pos = lambda vs: all(v > 0 for v in vs)


@dataclass
class Result:
    tables: dict = field(default_factory=dict)  # metric -> (header, rows)
    summary: dict = field(default_factory=dict)


@dataclass
class Experiment:
    name: str
    run: Callable[[dict, int, int], Result]
    params: dict
    doc: str = ""


REGISTRY: dict[str, Experiment] = {}


def register(name: str, params: dict, doc: str = ""):
    def deco(fn):
        REGISTRY[name] = Experiment(name, fn, params, doc or (fn.__doc__ or "").strip().splitlines()[0])
        return fn

    return deco


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@register(
    "hopfield-capacity",
    {
        "N": Param("int", 200, pos),
        "K": Param("int_list", list(range(10, 61, 5)), all_pos),
        "trials": Param("int", 200, lambda v: v >= 100),
        "epsilon": Param("float", 0.01, prob),
    },
)
def hopfield_capacity(p, seed, threads):
    """Single-sweep bit-error rate of Hebbian (n = 2) memories versus K."""
    rows = []
    sep = denseam.Separation.power(2)
    for k_idx, K in enumerate(p["K"]):
        r = denseam.estimate_bit_error(p["N"], K, sep, p["trials"], seed=derive_seed(seed, k_idx << 32), threads=threads)
        rows.append((K, r))
    Ks, rates = zip(*rows)
    k_star = denseam.crossing_K(Ks, rates, p["epsilon"])
    return Result(
        {"bit_error": (["K", "bit_error_rate"], rows)},
        {"K_star": k_star, "K_star_over_N": k_star / p["N"]},
    )


@register(
    "errorfree-capacity",
    {
        "N": Param("int", 40, lambda v: v >= 2),
        "kappa": Param("float_list", [0.25, 0.5, 1.0], all_pos),
        "K": Param("int_list", list(range(1, 31)), all_pos),
        "trials": Param("int", 20, pos),
        "level": Param("float", 0.9, prob),
    },
)
def errorfree_capacity(p, seed, threads):
    """Fraction of trials in which every stored pattern is a stable OAM phase-lock."""
    N = p["N"]
    Q = orthonormal_complement(np.ones(N))
    margins = {}
    for k_idx, K in enumerate(p["K"]):
        worst = []
        for t in range(p["trials"]):
            rng = make_rng(derive_seed(seed, (k_idx << 32) | t))
            ps = plasticity.PatternSet.random(N, K, rng)
            W = plasticity.hebbian_weights(ps)
            m = max(
                float(sym_eig(Q.T @ oscillator.coded_state_laplacian(W, xi) @ Q)[0][0]) for xi in ps.patterns
            )
            worst.append(m)
        margins[K] = np.array(worst)
    frac_rows, cap_rows = [], []
    for kappa in p["kappa"]:
        k_emp = 0
        for K in p["K"]:
            frac = float(np.mean(margins[K] < 2.0 * kappa))
            frac_rows.append((kappa, K, frac))
            if frac >= p["level"] and k_emp == K - 1:
                k_emp = K
        cap_rows.append((kappa, k_emp, 2.0 * N * kappa**2 / math.log(N)))
    caps = [r[1] for r in cap_rows]
    return Result(
        {
            "all_stable_fraction": (["kappa", "K", "fraction_all_stable"], frac_rows),
            "capacity": (["kappa", "K_max_empirical", "K_max_formula"], cap_rows),
        },
        {"monotone_in_kappa": int(all(a <= b for a, b in zip(caps, caps[1:])))},
    )


@register(
    "denseam-capacity-curve",
    {
        "N_curve": Param("int_list", [25, 50, 100, 200, 400], all_pos),
        "n_curve": Param("int_list", [2, 3, 4], lambda vs: all(v >= 2 for v in vs)),
        "alpha": Param("float", denseam.DEFAULT_ALPHA, pos),
        "N": Param("int", 100, pos),
        "K_n2": Param("int_list", [5, 8, 10, 12, 14, 16, 18, 20, 24, 28], all_pos),
        "K_n3": Param("int_list", [200, 300, 400, 500, 600, 700, 800, 900, 1000], all_pos),
        "trials": Param("int", 200, lambda v: v >= 100),
        "epsilon": Param("float", 0.01, prob),
    },
)
def denseam_capacity_curve(p, seed, threads):
    """Capacity formula curves plus empirical 1%-error crossings at n = 2 and 3."""
    curve = [(N, n, denseam.capacity_bound(N, n, p["alpha"])) for n in p["n_curve"] for N in p["N_curve"]]
    err_rows, summary = [], {}
    for n, grid in ((2, p["K_n2"]), (3, p["K_n3"])):
        sep = denseam.Separation.power(n)
        rates = []
        for k_idx, K in enumerate(grid):
            s = derive_seed(seed, (n << 40) | (k_idx << 32))
            rates.append(denseam.estimate_bit_error(p["N"], K, sep, p["trials"], seed=s, threads=threads))
            err_rows.append((n, K, rates[-1]))
        summary[f"K_star_n{n}"] = denseam.crossing_K(grid, rates, p["epsilon"])
        summary[f"K_formula_n{n}"] = denseam.capacity_bound(p["N"], n, p["alpha"])
    summary["ratio_n3_over_n2"] = summary["K_star_n3"] / summary["K_star_n2"]
    return Result(
        {
            "capacity_curve": (["N", "n", "K_max_formula"], curve),
            "bit_error": (["n", "K", "bit_error_rate"], err_rows),
        },
        summary,
    )


@register(
    "oam-stability-diagram",
    {
        "N": Param("int", 50, lambda v: v >= 2),
        "K": Param("int", 3, pos),
        "trials": Param("int", 100, pos),
        "flip_fraction": Param("float", 0.1, prob),
    },
)
def oam_stability_diagram(p, seed, threads):
    """Top Jacobian eigenvalue at stored, corrupted and random phase-locked states."""
    N = p["N"]
    rows = []
    for t in range(p["trials"]):
        rng = make_rng(derive_seed(seed, t))
        ps = plasticity.PatternSet.random(N, p["K"], rng)
        W = plasticity.hebbian_weights(ps)
        xi = ps[0]
        flips = rng.choice(N, size=max(1, int(round(p["flip_fraction"] * N))), replace=False)
        corrupted = xi.copy()
        corrupted[flips] *= -1
        rand = np.where(rng.random(N) < 0.5, -1.0, 1.0)
        for cls, s in (("stored", xi), ("corrupted", corrupted), ("random", rand)):
            rows.append((cls, oscillator.oam_stability_margin(W, s)))
    means = {c: float(np.mean([v for k, v in rows if k == c])) for c in ("stored", "corrupted", "random")}
    return Result(
        {"lambda_max": (["class", "lambda_max"], rows)},
        {f"mean_{c}": v for c, v in means.items()},
    )


@register(
    "oim-maxcut",
    {
        "instance": Param("str", "triangle"),
        "restarts": Param("int", 20, pos),
        "duration": Param("float", 40.0, pos),
        "kappa_max": Param("float", 1.0, pos),
        "dt": Param("float", 0.05, pos),
    },
)
def oim_maxcut(p, seed, threads):
    """OIM relaxation with a linear kappa ramp on an Ising/MaxCut instance."""
    name = p["instance"]
    try:
        inst = oscillator.IsingInstance.load(name) if os.path.sep in name or name.endswith(".txt") else oscillator.bundled_instance(name)
    except (OSError, ValueError) as exc:
        raise ExperimentError(f"cannot load instance {name!r}: {exc}") from exc
    res = oscillator.oim_solve(
        inst, oscillator.linear_ramp(p["duration"], 0.0, p["kappa_max"]), p["restarts"], seed=seed, dt=p["dt"], threads=threads
    )
    summary = {"best_H": res.H, "cut": oscillator.cut_value(inst, res.sigma)}
    if inst.N <= 20:
        summary["optimum_H"] = oscillator.brute_force_ising(inst)[0]
    return Result(
        {
            "restarts": (["restart", "H", "final_residual"], res.log),
            "best": (["i", "sigma"], [(i + 1, int(s)) for i, s in enumerate(res.sigma)]),
        },
        summary,
    )


@register(
    "langevin-stationarity",
    {
        "temperature": Param("float", 0.5, pos),
        "dt": Param("float", 1e-3, pos),
        "n_steps": Param("int", 1_000_000, lambda v: v >= 1000),
        "burn_in": Param("int", 100_000, lambda v: v >= 0),
        "thin": Param("int", 10, pos),
        "bins": Param("int", 50, lambda v: v >= 2),
        "lo": Param("float", -2.5),
        "hi": Param("float", 2.5),
        "ou_chains": Param("int", 16, pos),
        "ou_temperatures": Param("float_list", [0.5, 1.0, 2.0], all_pos),
    },
)
def langevin_stationarity(p, seed, threads):
    """Double-well Langevin histogram versus the Gibbs density, and OU variances."""
    if p["burn_in"] >= p["n_steps"] or p["lo"] >= p["hi"]:
        raise ConfigError("need burn_in < n_steps and lo < hi")
    model = boltzmann.double_well_model(1, p["temperature"])
    samples = boltzmann.langevin_sample(model, [0.1], p["dt"], p["n_steps"], make_rng(seed), p["burn_in"], p["thin"])
    table = boltzmann.gibbs_density(model, boltzmann.Grid.line(-4.0, 4.0, 4001))
    edges = np.linspace(p["lo"], p["hi"], p["bins"] + 1)
    counts, _ = np.histogram(samples[:, 0], bins=edges)
    quad = table.bin_masses(edges)
    hist = [(edges[i], edges[i + 1], counts[i] / samples.shape[0], quad[i]) for i in range(p["bins"])]
    tv = boltzmann.tv_distance(samples[:, 0], table, edges)

    ou_rows = []
    for t_idx, T in enumerate(p["ou_temperatures"]):
        m = boltzmann.quadratic_model(1, T)
        vs = []
        for c in range(p["ou_chains"]):
            rng = make_rng(derive_seed(seed, ((t_idx + 1) << 32) | c))
            s = boltzmann.langevin_sample(m, [0.0], p["dt"], p["n_steps"], rng, p["burn_in"], p["thin"])
            vs.append(float(np.var(s[:, 0])))
        ou_rows.append((T, float(np.mean(vs)), float(np.mean(vs)) / T))
    return Result(
        {
            "histogram": (["bin_lo", "bin_hi", "empirical_mass", "quadrature_mass"], hist),
            "ou_variance": (["temperature", "variance", "variance_over_T"], ou_rows),
        },
        {"tv_distance": tv, "max_ou_rel_error": max(abs(r[2] - 1.0) for r in ou_rows)},
    )


@register(
    "oja-pca",
    {
        "dim": Param("int", 5, lambda v: v >= 2),
        "covariances": Param("int", 10, pos),
        "eta": Param("float", 0.002, pos),
        "steps": Param("int", 200_000, pos),
        "min_gap": Param("float", 1.5, lambda v: v > 1),
    },
)
def oja_pca(p, seed, threads):
    """Oja's rule on random covariances with a prescribed top eigen-gap."""
    d, rows = p["dim"], []
    for c in range(p["covariances"]):
        rng = make_rng(derive_seed(seed, c))
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        lam = np.sort(rng.uniform(0.2, 1.0, d))[::-1]
        lam[0] = lam[1] * rng.uniform(p["min_gap"], 2 * p["min_gap"])
        C = (Q * lam) @ Q.T
        X = plasticity.gaussian_stream(C, p["steps"], rng)
        w0 = rng.standard_normal(d)
        w = plasticity.oja_train(X, w0, plasticity.LearnConfig(eta=p["eta"], steps=p["steps"]))
        v1 = sym_eig(C)[1][:, 0]
        rows.append((c, lam[0] / lam[1], float(np.linalg.norm(w)), float(abs(w @ v1) / np.linalg.norm(w))))
    return Result(
        {"alignment": (["covariance", "lambda_ratio", "norm", "alignment"], rows)},
        {"worst_norm_error": max(abs(r[2] - 1) for r in rows), "worst_alignment": min(r[3] for r in rows)},
    )


def _loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(lx, ly, 1)[0])


@register(
    "eqprop-gradcheck",
    {
        "instances": Param("int", 20, pos),
        "N_max": Param("int", 10, lambda v: v >= 3),
        "betas": Param("float_list", [1e-1, 1e-2, 1e-3, 1e-4], all_pos),
        "check_beta": Param("float", 1e-3, pos),
    },
)
def eqprop_gradcheck(p, seed, threads):
    """EqProp gradient estimates versus finite differences of the direct objective."""
    from .mathcore import fd_gradient

    betas = sorted(set(p["betas"]) | {p["check_beta"]}, reverse=True)
    rows, slopes, check_errors = [], [], []
    for k in range(p["instances"]):
        rng = make_rng(derive_seed(seed, k))
        N = int(rng.integers(3, p["N_max"] + 1))
        inst, theta = plasticity.QuadraticEnergy.random(N, 2, 3, rng)
        u, y_t = rng.standard_normal(3), rng.standard_normal(2)
        ref = fd_gradient(lambda th: inst.objective_direct(th, u, y_t), theta)
        errs = []
        for b in betas:
            g = plasticity.eqprop_gradient(inst.problem(), theta, u, y_t, b).gradient
            e = float(np.linalg.norm(g - ref) / np.linalg.norm(ref))
            rows.append((k, N, b, e))
            errs.append(e)
            if b == p["check_beta"]:
                check_errors.append(e)
        sel = [i for i, b in enumerate(betas) if b in p["betas"]]
        slopes.append(_loglog_slope([betas[i] for i in sel], [errs[i] for i in sel]))
    return Result(
        {"rel_error": (["instance", "N", "beta", "rel_error"], rows)},
        {"max_rel_error_at_check_beta": max(check_errors), "min_slope": min(slopes), "max_slope": max(slopes)},
    )


@register(
    "lasso-equivalence",
    {
        "problems": Param("int", 50, pos),
        "M": Param("int", 5, pos),
        "N": Param("int", 8, pos),
        "lam": Param("float", 0.1, pos),
    },
)
def lasso_equivalence(p, seed, threads):
    """Positive-lasso network equilibria versus coordinate descent."""
    rows = []
    for k in range(p["problems"]):
        prob_ = proximal.LassoProblem.random(p["M"], p["N"], make_rng(derive_seed(seed, k)), p["lam"])
        a = prob_.objective(proximal.lasso_network_solve(prob_))
        b = prob_.objective(proximal.lasso_oracle(prob_))
        rows.append((k, a, b, a - b))
    return Result(
        {"objectives": (["problem", "objective_network", "objective_oracle", "difference"], rows)},
        {"max_abs_difference": max(abs(r[3]) for r in rows)},
    )


@register(
    "wta-and-contrast",
    {
        "k": Param("int", 5, lambda v: v >= 2),
        "w_EE": Param("float", 0.4, lambda v: v >= 0),
        "w_EI": Param("float", 0.5, lambda v: v >= 0),
        "w_IE": Param("float", 1.5, lambda v: v >= 0),
        "w_II": Param("float", 0.2, lambda v: v >= 0),
        "draws": Param("int", 100, pos),
        "contrast_w_EE": Param("float", 0.25, lambda v: 0 < v < 0.5),
        "contrast_w_EI": Param("float", 0.05, lambda v: v >= 0),
        "contrast_base": Param("float", 0.2),
        "epsilon_over_delta": Param("float", 0.1, prob),
    },
)
def wta_and_contrast(p, seed, threads):
    """E^k-I winner-take-all draws and a stacked E^2-I contrast cascade."""
    net = proximal.EINetwork.ek_i(p["k"], p["w_EE"], p["w_EI"], p["w_IE"], p["w_II"])
    delta = proximal.wta_threshold(p["w_EE"], p["w_EI"])
    rows, agree = [], 0
    rng = make_rng(seed)
    for t in range(p["draws"]):
        win = int(rng.integers(p["k"]))
        u = -delta - rng.uniform(0.01, 1.0, p["k"])
        u[win] = delta + rng.uniform(0.01, 1.0)
        pred = proximal.wta_predict(net, u)
        x = proximal.wta_simulate(net, u)
        sim = int(np.argmax(x[: p["k"]]))
        agree += int(pred.winner == sim)
        rows.append((t, -1 if pred.winner is None else pred.winner, sim, float(x[sim]), float(np.max(np.delete(x[: p["k"]], sim)))))
    # trajectory of the last draw, for plotting
    traj = flows.integrate_ode(lambda x, t: proximal.ei_field(net, x, u), np.zeros(net.N), flows.IntegratorConfig(dt=0.05, t_max=20.0, record_stride=4))

    w, d2 = p["contrast_w_EE"], proximal.wta_threshold(p["contrast_w_EE"], p["contrast_w_EI"])
    eps = p["epsilon_over_delta"] * d2
    formula, layers = proximal.contrast_layers_needed(w, eps, d2)
    c0 = p["contrast_base"]
    out = proximal.contrast_cascade(layers, w, p["contrast_w_EI"], p["w_IE"], p["w_II"], [c0 + eps, c0 - eps])
    diffs = out[:, 0] - out[:, 1]
    crow = [(0, c0 + eps, c0 - eps, 2 * eps)] + [(l + 1, out[l, 0], out[l, 1], diffs[l]) for l in range(layers)]
    return Result(
        {
            "wta": (["draw", "predicted", "simulated_argmax", "x_winner", "x_runner_up"], rows),
            "contrast": (["layer", "x_left", "x_right", "contrast"], crow),
            "trajectory": (["t"] + [f"x{i}" for i in range(net.N)], [(t,) + tuple(s) for t, s in zip(traj.times, traj.states)]),
        },
        {
            "wta_agreement": agree / p["draws"],
            "delta": delta,
            "contrast_delta": d2,
            "layers_formula": formula,
            "layers_recurrence": layers,
            "first_layer_gain": diffs[0] / (2 * eps),
            "predicted_gain": 1.0 / w - 1.0,
            "final_contrast": float(diffs[-1]),
        },
    )


# ---------------------------------------------------------------------------
# config, reports, plot data
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    params: dict
    out_dir: str

    def echo(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "params": self.params, "out_dir": self.out_dir}


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"experiment", "seed", "params", "out_dir"}
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    name = data.get("experiment")
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; choose one of {sorted(REGISTRY)}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    out_dir = data.get("out_dir", "results")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("out_dir must be a nonempty string")
    raw = data.get("params", {})
    if not isinstance(raw, dict):
        raise ConfigError("params must be an object")
    schema = REGISTRY[name].params
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    params = {k: _coerce(k, spec, raw[k]) if k in raw else spec.default for k, spec in schema.items()}
    return ExperimentConfig(name, seed, params, out_dir)


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    csv_files: list
    summary: dict
    runtime: float
    tables: dict


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def threads_from_env() -> int:
    raw = os.environ.get("EDMLAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"EDMLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("EDMLAB_THREADS must be >= 1")
    return min(n, os.cpu_count() or 1)


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    """Run, then move all CSVs into ``config.out_dir``; nothing is left behind on failure."""
    exp = REGISTRY[config.experiment]
    threads = threads_from_env() if threads is None else threads
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tmp = Path(tempfile.mkdtemp(prefix=".edmlab-", dir=out))
    try:
        try:
            res = exp.run(config.params, config.seed, threads)
        except (ConfigError, ExperimentError):
            raise
        except Exception as exc:
            raise ExperimentError(f"{config.experiment}: {type(exc).__name__}: {exc}") from exc
        written = []
        for metric, (header, rows) in res.tables.items():
            written.append(write_table(tmp / f"{config.experiment}_{metric}.csv", header, rows))
        summary_rows = sorted(res.summary.items())
        written.append(write_table(tmp / f"{config.experiment}_summary.csv", ["metric", "value"], summary_rows))
        runtime = time.perf_counter() - t0
        meta = {"config": config.echo(), "runtime_seconds": runtime, "threads": threads}
        (tmp / f"{config.experiment}_report.json").write_text(json.dumps(meta, indent=2, default=_fmt) + "\n")
        final = []
        for f in sorted(tmp.iterdir()):
            dest = out / f.name
            os.replace(f, dest)
            if dest.suffix == ".csv":
                final.append(dest)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return ExperimentReport(config, final, res.summary, runtime, res.tables)


PLOT_KINDS = {
    "capacity_curve": ("capacity_curve", ["N", "n", "K_max_formula"]),
    "stability_histogram": ("lambda_max", ["class", "lambda_max"]),
    "trajectory": ("trajectory", None),
}


def emit_plotdata(report: ExperimentReport, kind: str, out_dir=None) -> Path:
    """Write the tidy table behind a figure as ``<experiment>_plot_<kind>.csv``."""
    if kind not in PLOT_KINDS:
        raise KeyError(f"unknown plot kind {kind!r}; choose one of {sorted(PLOT_KINDS)}")
    series, header = PLOT_KINDS[kind]
    if series not in report.tables:
        raise KeyError(f"report from {report.config.experiment} has no {series!r} series")
    h, rows = report.tables[series]
    if header is not None and list(h) != header:
        raise KeyError(f"series {series!r} has columns {h}, expected {header}")
    out = Path(out_dir or report.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return write_table(out / f"{report.config.experiment}_plot_{kind}.csv", h, rows)
