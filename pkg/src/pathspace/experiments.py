"""Named experiments: configuration, execution and report files.

Each experiment turns an :class:`ExperimentConfig` into a table of result
rows and a list of :class:`Check` objects. :func:`run` executes one,
writes ``results.csv``, ``summary.txt`` (JSON) and optionally ``plot.svg``
under ``<out>/<experiment>/<seed>/`` and returns a :class:`RunSummary`.
"""

import configparser
import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import brownian, inequalities, measures, spde
from .brownian import PointMass, UniformOnCompact
from .geometry import Euclidean, Hyperbolic2, Sphere2
from .montecarlo import MonteCarloEstimate, combined_z
from .pathcalc import calculus
from .pathcalc.ensemble import EnsembleSpec
from .pathcalc.library import (IBP_SUITE, avg_tanh, get_direction, get_function, mean_coordinate,
                               sphere_positive_suite, sphere_two_sided_suite)
from .rng import RngStream


# -- configuration --------------------------------------------------------------

def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _bool(text):
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


FIELDS = {
    "experiment": str,
    "manifold": str,
    "dt": float,
    "n_paths": int,
    "horizon": float,
    "seed": int,
    "out": str,
    "T": _floats,
    "t": _floats,
    "x": _floats,
    "N": _floats,
    "m": float,
    "cutoff_T": float,
    "L": float,
    "J": int,
    "shift": float,
    "eps": float,
    "K": float,
    "C1": float,
    "floor": float,
    "band": float,
    "fd_eps": float,
    "plot": _bool,
}

REQUIRED = ("experiment", "manifold", "dt", "n_paths", "seed")
NON_NEGATIVE = ("seed",)
MANIFOLD_CHOICES = ("euclidean", "sphere", "hyperbolic", "all")

COMMON_DEFAULTS = {
    "manifold": "euclidean",
    "dt": 1e-3,
    "n_paths": 10_000,
    "seed": 0,
    "out": "runs",
    "plot": False,
}


@dataclass
class ExperimentConfig:
    """Validated, fully resolved settings of one run."""

    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def get(self, name, default=None):
        return self.values.get(name, default)

    def stream(self, suffix=""):
        name = self.experiment if not suffix else f"{self.experiment}/{suffix}"
        return RngStream(int(self.seed), name)

    def as_text(self):
        """Flat ``key = value`` text, sorted by key; reading it back gives the same config."""
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, list):
                value = ",".join(f"{v:.17g}" for v in value)
            elif isinstance(value, float):
                value = f"{value:.17g}"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def read_config_text(text):
    """Parse flat ``key = value`` lines (``#`` comments allowed) into raw strings."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string("[config]\n" + text)
    return dict(parser["config"])


def read_config_file(path):
    with open(path) as fh:
        return read_config_text(fh.read())


def validate(raw):
    """Schema diagnostics for a raw config mapping; an empty list means valid.

    Each entry is ``"config.<field>: <problem>"``.
    """
    problems = []
    for key in REQUIRED:
        if key not in raw or raw[key] in (None, ""):
            problems.append(f"config.{key}: missing required field")
    for key, value in raw.items():
        if key not in FIELDS:
            problems.append(f"config.{key}: unknown field")
            continue
        try:
            parsed = FIELDS[key](value)
        except (TypeError, ValueError):
            problems.append(f"config.{key}: cannot parse {value!r} as {FIELDS[key].__name__.strip('_')}")
            continue
        numbers = parsed if isinstance(parsed, list) else [parsed]
        if isinstance(parsed, list) and not parsed:
            problems.append(f"config.{key}: empty list")
        for v in numbers:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                continue
            if key in NON_NEGATIVE:
                if v < 0:
                    problems.append(f"config.{key}: must be non-negative")
            elif not v > 0:
                problems.append(f"config.{key}: must be positive")
    if "experiment" in raw and raw["experiment"] and raw["experiment"] not in EXPERIMENTS:
        problems.append(f"config.experiment: unknown experiment {raw['experiment']!r}")
    if "manifold" in raw and raw["manifold"] and raw["manifold"] not in MANIFOLD_CHOICES:
        problems.append(f"config.manifold: must be one of {', '.join(MANIFOLD_CHOICES)}")
    return problems


def resolve(experiment, raw=None, overrides=None):
    """Merge defaults, config-file values and overrides (later wins), then validate."""
    if experiment not in EXPERIMENTS:
        raise KeyError(experiment)
    merged = dict(COMMON_DEFAULTS)
    merged.update(EXPERIMENTS[experiment].defaults)
    merged.update(raw or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged["experiment"] = experiment
    problems = validate(merged)
    if problems:
        raise ValueError("; ".join(problems))
    return ExperimentConfig({k: FIELDS[k](v) for k, v in merged.items()})


def default_config(experiment):
    return resolve(experiment)


# -- results ----------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    value: float = float("nan")
    detail: str = ""
    mandatory: bool = True


@dataclass
class Result:
    rows: list
    checks: list
    series: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    experiment: str
    verdict: str
    checks: list
    wall_time: float
    seed: int
    artifacts: list

    @property
    def passed(self):
        return self.verdict == "PASS"

    def as_dict(self):
        return {
            "experiment": self.experiment,
            "verdict": self.verdict,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "artifacts": self.artifacts,
            "checks": [{"name": c.name, "passed": bool(c.passed), "value": _json_number(c.value),
                        "detail": c.detail, "mandatory": c.mandatory} for c in self.checks],
        }


def _json_number(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def rows_to_csv(rows):
    """CSV text with a header row (union of keys in first-seen order) and 17-digit floats."""
    header = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header or ["empty"])
    for row in rows:
        writer.writerow([_fmt(row.get(k, "")) for k in header])
    return buf.getvalue()


def _z_check(name, z, limit=3.0):
    return Check(name, bool(abs(z) <= limit), float(z), f"|z| <= {limit:g}")


# -- manifold helpers -----------------------------------------------------------------

def manifolds_for(choice, euclidean_dim=2):
    if choice == "all":
        return [Euclidean(euclidean_dim), Sphere2(), Hyperbolic2()]
    return [{"euclidean": Euclidean(euclidean_dim), "sphere": Sphere2(), "hyperbolic": Hyperbolic2()}[choice]]


def _label(M):
    return {Euclidean: "euclidean", Sphere2: "sphere", Hyperbolic2: "hyperbolic"}[type(M)]


# -- experiments ----------------------------------------------------------------------

def exp_bm_stats(cfg):
    rows, checks = [], []
    for M in manifolds_for(cfg.manifold):
        name = _label(M)
        if isinstance(M, Euclidean):
            cov = brownian.coordinate_covariance(M, M.origin(), cfg.T, cfg.n_paths, cfg.dt, cfg.stream(name))
            for r in cov:
                if r["s"] > r["t"] or r["i"] > r["j"]:
                    continue
                target = float(r["i"] == r["j"]) * min(r["s"], r["t"])
                z = (r["estimate"] - target) / r["stderr"]
                rows.append({"manifold": name, "statistic": f"cov(g{r['i']}({r['s']:g}),g{r['j']}({r['t']:g}))",
                             "time": r["t"], "estimate": r["estimate"], "stderr": r["stderr"], "target": target,
                             "z": z})
                checks.append(_z_check(f"{name} cov i={r['i']} j={r['j']} s={r['s']:g} t={r['t']:g}", z))
            continue
        sign = 1.0 if isinstance(M, Sphere2) else -1.0
        stat = "cos" if sign > 0 else "cosh"
        for dt in (cfg.dt, cfg.dt / 2):
            if sign > 0:
                est = brownian.cos_decay(M, M.origin(), cfg.t, cfg.n_paths, dt, cfg.stream(f"{name}/dt={dt:g}"))
            else:
                est = _cosh_growth(M, cfg.t, cfg.n_paths, dt, cfg.stream(f"{name}/dt={dt:g}"))
            for t, e in est.items():
                target = math.exp(-sign * t)
                err = abs(e.value - target)
                tol = 3 * e.stderr + 0.01 * (1.0 if sign > 0 else target)
                row = {"manifold": name, "statistic": f"E[{stat} rho]", "time": t, "dt": dt, "estimate": e.value,
                       "stderr": e.stderr, "target": target, "z": (e.value - target) / e.stderr}
                if sign > 0:
                    row["walk_exact"] = brownian.walk_cos_mean(t, dt)
                rows.append(row)
                checks.append(Check(f"{name} E[{stat} rho] t={t:g} dt={dt:g}", err <= tol, err, f"<= {tol:.3g}"))
        if sign > 0:
            for t in cfg.t:
                coarse = abs(brownian.walk_cos_mean(t, cfg.dt) - math.exp(-t))
                fine = abs(brownian.walk_cos_mean(t, cfg.dt / 2) - math.exp(-t))
                checks.append(Check(f"{name} scheme bias shrinks t={t:g}", fine < coarse, fine / coarse,
                                    "exact walk bias at dt/2 over bias at dt"))
            # the exact walk law is confirmed at a coarse step where its bias is visible
            big = 0.25
            est = brownian.cos_decay(M, M.origin(), [1.0], 4 * cfg.n_paths, big, cfg.stream(f"{name}/coarse"))[1.0]
            exact = brownian.walk_cos_mean(1.0, big)
            z = (est.value - exact) / est.stderr
            rows.append({"manifold": name, "statistic": "E[cos rho] coarse", "time": 1.0, "dt": big,
                         "estimate": est.value, "stderr": est.stderr, "target": exact, "z": z,
                         "walk_exact": exact})
            checks.append(_z_check(f"{name} coarse-step walk oracle", z))
    return Result(rows, checks)


def _cosh_growth(M, times, n_paths, dt, stream):
    """E[cosh rho(o, gamma(t))] on the hyperbolic plane, equal to e^{t} for the 1/2 Laplacian."""
    times = [float(t) for t in times]
    T = max(times)
    nodes = [int(round(t / dt)) for t in times]
    o = M.origin()
    ens = EnsembleSpec(M, o, dt, n_paths, stream, T)
    out = ens.map(lambda paths, idx: {"c": np.cosh(M.distance(o, paths.points[:, nodes]))})
    return {t: MonteCarloEstimate.from_samples(out["c"][:, k], stream.master_seed, keep=False)
            for k, t in enumerate(times)}


def exp_ibp(cfg):
    rows, checks = [], []
    for M in manifolds_for(cfg.manifold):
        name = _label(M)
        functions = [get_function(f, M) for f in IBP_SUITE]
        directions = [get_direction(d, M.dim) for d in ("ramp", "bump")]
        cut = isinstance(M, Hyperbolic2)
        m = cfg.m if cut else None
        T = cfg.cutoff_T if cut else None
        ens = EnsembleSpec(M, M.origin(), cfg.dt, cfg.n_paths, cfg.stream(name), cfg.horizon)
        for res in calculus.ibp_suite(functions, directions, ens, m, T):
            rows.append({"manifold": name, "case": res.label, "cutoff_m": m if cut else "none",
                         "lhs": res.lhs.value, "lhs_se": res.lhs.stderr, "rhs": res.rhs.value,
                         "rhs_se": res.rhs.stderr, "z": res.z, "paired_z": res.paired_z})
            checks.append(_z_check(f"{name} {res.label}", res.z))
        if isinstance(M, Euclidean):
            E1 = Euclidean(1)
            F = mean_coordinate(E1, 1.0)
            h = get_direction("ramp", 1)
            ens1 = EnsembleSpec(E1, np.zeros(1), cfg.dt, cfg.n_paths, cfg.stream("analytic"), cfg.horizon)
            res = calculus.ibp_residual(F, h, ens1)
            rows.append({"manifold": "euclidean-1d", "case": "analytic mean/ramp", "cutoff_m": "none",
                         "lhs": res.lhs.value, "lhs_se": res.lhs.stderr, "rhs": res.rhs.value,
                         "rhs_se": res.rhs.stderr, "z": res.z, "paired_z": res.paired_z})
            checks.append(_z_check("analytic case lhs = rhs", res.z))
            err = abs(res.lhs.value - 0.5)
            checks.append(Check("analytic lhs = 0.5", err <= 3 * res.lhs.stderr + 1e-12, err,
                                "|lhs - 0.5| <= 3 s.e. (deterministic up to rounding)"))
            zr = float(res.rhs.z_against(0.5))
            checks.append(_z_check("analytic rhs = 0.5", zr))
    return Result(rows, checks)


def exp_dirichlet_form(cfg):
    rows, checks = [], []
    for M in manifolds_for(cfg.manifold):
        name = _label(M)
        if isinstance(M, Euclidean):
            T = cfg.T[0]
            F = mean_coordinate(M, T)
            ens = EnsembleSpec(M, M.origin(), cfg.dt, cfg.n_paths, cfg.stream(name), T)
            est = calculus.dirichlet_form(F, F, ens)
            err = abs(est.value - T / 2)
            rows.append({"manifold": name, "function": F.name, "frame": "standard", "estimate": est.value,
                         "stderr": est.stderr, "target": T / 2})
            checks.append(Check(f"{name} E(F_T,F_T) = T/2", err <= 3 * est.stderr + 1e-9 * T, err,
                                "deterministic integrand: quadrature tolerance"))
            one = get_function("constant", M)
            c = calculus.dirichlet_form(one, one, ens.with_(n_paths=min(cfg.n_paths, 1000)))
            rows.append({"manifold": name, "function": "constant", "frame": "standard", "estimate": c.value,
                         "stderr": c.stderr, "target": 0.0})
            checks.append(Check(f"{name} E(1,1) = 0", c.value == 0.0, c.value))
            continue
        F = avg_tanh(M)
        base = EnsembleSpec(M, M.origin(), cfg.dt, cfg.n_paths, cfg.stream(name), F.forward_horizon)
        frame = M.standard_frame(M.origin())
        angle = 1.234
        rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        estimates = {}
        for label, fr in (("standard", frame), ("rotated", frame @ rot)):
            est = calculus.dirichlet_form(F, F, base.with_(frame0=fr, stream=cfg.stream(f"{name}/{label}")))
            estimates[label] = est
            rows.append({"manifold": name, "function": F.name, "frame": label, "estimate": est.value,
                         "stderr": est.stderr, "target": ""})
        z = float(combined_z(estimates["standard"], estimates["rotated"]))
        checks.append(_z_check(f"{name} frame independence", z))
    return Result(rows, checks)


def _suite_samples(cfg):
    M = Sphere2()
    suite = sphere_positive_suite()
    horizon = max(F.forward_horizon for F in suite)
    ens = EnsembleSpec(M, M.origin(), cfg.dt, cfg.n_paths, cfg.stream("suite"), horizon)
    return M, suite, ens, inequalities.functional_samples(suite, ens)


def _inequality_rows(report, checks, label):
    rows = []
    for r in report.table():
        r = dict(r)
        r["check"] = label
        rows.append(r)
        checks.append(Check(f"{label} {r['function']}", r["passed"], r["ratio"], f"ratio vs constant {r['constant']:g}"))
    return rows


def exp_lsi(cfg):
    M, suite, ens, samples = _suite_samples(cfg)
    checks = []
    report = inequalities.lsi_report(suite, samples, inequalities.lsi_constant(cfg.K), ens.stream.master_seed)
    rows = _inequality_rows(report, checks, "lsi")
    checks.append(Check("entropy clamping events", report.clamped == 0, report.clamped, "must be 0"))
    lin = inequalities.linearization_check(avg_tanh(M), ens.with_(stream=cfg.stream("linear")), cfg.eps, cfg.K)
    rows.append({"check": "linearization", "function": "1+eps*avg-tanh", "lhs": lin["entropy"],
                 "lhs_se": lin["entropy_se"], "rhs": lin["lsi_rhs"], "taylor": lin["taylor"],
                 "relative_gap": lin["relative_gap"], "passed": lin["passed"]})
    checks.append(Check("linearized LSI", lin["passed"], lin["relative_gap"], "Taylor gap reported"))
    if cfg.get("C1") is not None:
        # whole-line version: uniform start, two-sided paths, C1 is the start law's constant
        two = sphere_two_sided_suite()
        horizon = max(max(F.forward_horizon, F.backward_horizon) for F in two)
        wl = EnsembleSpec(M, M.origin(), cfg.dt, cfg.n_paths, cfg.stream("whole-line"), horizon, two_sided=True,
                          nu=UniformOnCompact())
        report = inequalities.whole_line_check(two, wl, cfg.K, cfg.C1)
        rows += _inequality_rows(report, checks, "whole-line-lsi")
    return Result(rows, checks)


def exp_poincare(cfg):
    M, suite, ens, samples = _suite_samples(cfg)
    eps = cfg.eps
    delta, T_grid, values = inequalities.delta_eps(lambda s: inequalities.eta(M, s), eps)
    closed = inequalities.delta_eps_closed_form(cfg.K, eps)
    checks = [Check("delta_eps quadrature = closed form", abs(delta - closed) <= 1e-6 * closed, delta)]
    report = inequalities.poincare_report(suite, samples, delta, ens.stream.master_seed)
    rows = _inequality_rows(report, checks, "poincare")
    implied = inequalities.poincare_report(suite, samples, 2 * inequalities.lsi_constant(cfg.K),
                                           ens.stream.master_seed, label="lsi-implied")
    for r in implied.table():
        r = dict(r)
        r["check"] = "lsi-implied"
        rows.append(r)
        checks.append(Check(f"lsi-implied {r['function']}", r["passed"], r["ratio"], "", mandatory=False))
    return Result(rows, checks, {"delta_eps(T)": (T_grid, values)})


def exp_poincare_failure(cfg):
    rows, slope = inequalities.poincare_failure(cfg.T, cfg.n_paths, cfg.dt, cfg.stream())
    checks = []
    for r in rows:
        checks.append(Check(f"ratio T={r['T']:g} within 5%", r["relative_error"] <= 0.05, r["relative_error"]))
        checks.append(Check(f"Var(F_T) >= T^3/6 at T={r['T']:g}", r["bound_ok"], r["variance"]))
    if len(rows) > 1:
        checks.append(Check("log-log slope = 2 +- 0.1", abs(slope - 2) <= 0.1, slope))
    return Result(rows, checks, {"ratio": ([r["T"] for r in rows], [r["ratio"] for r in rows])})


def exp_ergodicity(cfg):
    x = cfg.x[0]
    times, values, info = spde.ergodicity_decay(x, cfg.L, cfg.J)
    rows = [{"t": t, "variance": v, "fraction": v / values[0]} for t, v in zip(times, values)]
    J, h = cfg.J, cfg.L / cfg.J
    const = spde.quadratic_decay(np.zeros((J, J)), J, h, times[:3])
    checks = [
        Check("monotone decay", info["monotone"], 0.0),
        Check("below 1% by twice the slowest mode time", info["final_fraction"] < 0.01, info["final_fraction"]),
        Check("rate within 10% of lambda_1", abs(info["fitted_rate"] - info["lambda1"]) <= 0.1 * info["lambda1"],
              info["fitted_rate"] / info["lambda1"]),
        Check("constant F gives 0", bool(np.all(const == 0)), float(np.max(np.abs(const)))),
    ]
    for c in checks[:3]:
        c.detail = f"lambda_1={info['lambda1']:.6g}, mode time={info['mode_time']:.6g}"
    return Result(rows, checks, {"decay": (times, values)})


def exp_nonergodicity(cfg):
    rows, slope = inequalities.nonergodicity_witness(cfg.T, cfg.n_paths, cfg.dt, cfg.stream())
    checks = [Check("Dirichlet form log-log slope in [-2.4, -1.6]", -2.4 <= slope <= -1.6, slope)]
    last = rows[-1]
    checks.append(Check(f"Var(F_T) >= {cfg.floor:g} at T={last['T']:g}", last["variance"] >= cfg.floor,
                        last["variance"]))
    for r in rows:
        checks.append(_z_check(f"martingale drift T={r['T']:g}", r["drift_z"]))
        checks.append(_z_check(f"gradient vs Ito estimator T={r['T']:g}", r["cross_z"]))
    return Result(rows, checks, {"dirichlet": ([r["T"] for r in rows], [r["dirichlet"] for r in rows])})


def exp_spde_invariance(cfg):
    rows, checks = [], []
    for M in manifolds_for(cfg.manifold, euclidean_dim=1):
        name = _label(M)
        if isinstance(M, Euclidean):
            # the lattice step is tied to the mesh (dt = h^2 / 4), not to the path step
            table = spde.euclidean_invariance(cfg.J, cfg.L, None, cfg.t[0], tuple(cfg.x), cfg.n_paths,
                                              cfg.stream(name))
            for r in table:
                rows.append({"manifold": name, **r})
                checks.append(_z_check(f"{name} {r['stage']} C({r['x']:g},{r['y']:g})", r["z"]))
        elif isinstance(M, Sphere2):
            table = spde.sphere_invariance(M, 32, 2.0, None, cfg.t[0], n_paths=cfg.n_paths, band=cfg.band,
                                           stream=cfg.stream(name))
            for r in table:
                rows.append({"manifold": name, **r})
                checks.append(Check(f"{name} cos-distance drift sites {r['site_j']}-{r['site_k']}", r["passed"],
                                    r["drift"], f"|drift| <= 3 s.e. + {cfg.band:g}"))
    return Result(rows, checks)


def exp_covariance_limit(cfg):
    table = spde.covariance_limit(cfg.t[0], cfg.L, cfg.J, tuple(cfg.x), cfg.n_paths, cfg.stream())
    checks = [Check(f"C({r['x']:g},{r['y']:g}) vs min", r["passed"], r["estimate"] - r["target"],
                    f"tolerance h + 3 s.e. = {r['tolerance']:.4g}") for r in table]
    rows = []
    for r in table:
        r = dict(r)
        r["halfline_exact"] = spde.halfline_noise_covariance(cfg.t[0], r["x"], r["y"])
        rows.append(r)
    return Result(rows, checks)


def exp_tail_bound(cfg):
    rows, checks = [], []
    T = cfg.T[0]
    cases = [Euclidean(1), Euclidean(2), Sphere2()] if cfg.manifold == "all" else manifolds_for(cfg.manifold, 1)
    for M in cases:
        name = f"{_label(M)}{M.dim if isinstance(M, Euclidean) else ''}"
        K1 = (lambda r: 1.0) if isinstance(M, Hyperbolic2) else None
        c2 = brownian.tail_constant_c2(M.dim, 1.0, K1)
        probs = brownian.tail_probability(M, M.origin(), T, cfg.N, cfg.n_paths, cfg.dt, cfg.stream(name))
        for N, est in probs.items():
            bound = brownian.tail_bound(M.dim, T, N, 1.0, c2)
            row = {"manifold": name, "N": N, "T": T, "empirical": est.value, "stderr": est.stderr, "bound": bound}
            checks.append(Check(f"{name} N={N:g} below bound", est.value <= bound + 3 * est.stderr,
                                est.value, f"bound {bound:.4g}"))
            if isinstance(M, Euclidean) and M.dim == 1:
                oracle = brownian.sup_abs_bm_tail_discrete(T, N, cfg.dt)
                row["oracle"] = oracle
                row["oracle_continuous"] = brownian.sup_abs_bm_tail(T, N)
                z = (est.value - oracle) / est.stderr if est.stderr > 0 else 0.0
                row["z"] = z
                checks.append(_z_check(f"{name} N={N:g} reflection oracle", z))
            rows.append(row)
    return Result(rows, checks)


def exp_stationarity(cfg):
    # time 0 is always included: the start law is uniform by construction
    times = [0.0] + [t for t in cfg.t if t > 0]
    table = measures.stationarity_test(times, cfg.n_paths, cfg.dt, cfg.stream())
    checks = []
    for r in table:
        if r["statistic"].startswith("max"):
            checks.append(Check(f"t={r['time']:g} on the sphere", r["passed"], r["estimate"]))
        else:
            checks.append(_z_check(f"t={r['time']:g} {r['statistic']}", r["z"]))
    return Result(table, checks)


def exp_shift_invariance(cfg):
    rows, checks = [], []
    times = tuple(cfg.t[:2]) if len(cfg.t) >= 2 else (0.2, 1.0)
    S = Sphere2()
    table = measures.shift_invariance_test(S, UniformOnCompact(), cfg.shift, times, cfg.n_paths, cfg.dt,
                                           cfg.stream("uniform"))
    for r in table:
        rows.append({"case": "sphere uniform", **r})
        checks.append(_z_check(f"uniform {r['statistic']}", r["z"]))
    E = Euclidean(2)
    control = measures.shift_invariance_test(E, PointMass((0.0, 0.0)), cfg.shift, times, cfg.n_paths, cfg.dt,
                                             cfg.stream("control"))
    for r in control:
        rows.append({"case": "euclidean point mass (control)", **r})
    norm_rows = [r for r in control if r["statistic"].startswith("|g1|")]
    fails = any(not r["passed"] for r in norm_rows)
    checks.append(Check("point-mass control fails on E|g(t)|^2", fails,
                        max(abs(r["z"]) for r in norm_rows), "negative control must be rejected"))
    return Result(rows, checks)


def exp_grad_expectation(cfg):
    rows, checks = [], []
    for M in manifolds_for(cfg.manifold):
        name = _label(M)
        if isinstance(M, Hyperbolic2):
            continue
        F = get_function("exp-bump", M) if isinstance(M, Sphere2) else avg_tanh(M)
        x0 = M.origin() if isinstance(M, Sphere2) else np.array([0.3, -0.2])
        ens = EnsembleSpec(M, x0, cfg.dt, cfg.n_paths, cfg.stream(name), F.forward_horizon)
        grad = calculus.gradient_of_expectation(F, ens)
        frame = M.standard_frame(x0)
        for k in range(M.dim):
            e = frame[:, k]
            comp = grad.samples @ e
            est = MonteCarloEstimate.from_samples(comp, ens.stream.master_seed, keep=False)
            fd = calculus.fd_directional_gradient(F, ens, e, cfg.fd_eps)
            z = float(combined_z(est, fd))
            rows.append({"manifold": name, "direction": k, "estimator": est.value, "estimator_se": est.stderr,
                         "finite_difference": fd.value, "finite_difference_se": fd.stderr, "z": z})
            checks.append(_z_check(f"{name} direction e{k}", z))
    return Result(rows, checks)


@dataclass
class Experiment:
    func: object
    description: str
    defaults: dict


EXPERIMENTS = {
    "bm-stats": Experiment(exp_bm_stats, "Brownian covariance (flat) and eigenfunction decay (sphere)",
                           {"T": [0.25, 0.5, 0.75, 1.0], "t": [0.25, 0.5, 1.0]}),
    "ibp": Experiment(exp_ibp, "integration by parts: <DF, l h> against F times the Ito weight",
                      {"horizon": 1.5, "m": 2.0, "cutoff_T": 1.0}),
    "dirichlet-form": Experiment(exp_dirichlet_form, "Dirichlet form estimates and frame independence",
                                 {"T": [1.0]}),
    "lsi": Experiment(exp_lsi, "log-Sobolev inequality on the unit sphere, C(K) = 4/K^2",
                      {"manifold": "sphere", "K": 1.0, "eps": 0.1}),
    "poincare": Experiment(exp_poincare, "Poincare inequality on the unit sphere with delta_eps",
                           {"manifold": "sphere", "K": 1.0, "eps": 0.5}),
    "poincare-failure": Experiment(exp_poincare_failure, "Var(F_T)/E(F_T) grows like 2T^2/3 in flat space",
                                   {"T": [1.0, 2.0, 4.0, 8.0], "n_paths": 20_000}),
    "ergodicity": Experiment(exp_ergodicity, "exact flat-space decay of mu|P_t F - mu F|^2",
                             {"x": [1.0], "L": 8.0, "J": 256}),
    "nonergodicity": Experiment(exp_nonergodicity, "bounded harmonic witness on the hyperbolic plane",
                                {"manifold": "hyperbolic", "T": [2.0, 4.0, 8.0, 16.0, 32.0], "dt": 1e-2,
                                 "floor": 0.005}),
    "spde-invariance": Experiment(exp_spde_invariance, "lattice string started at Wiener measure stays there",
                                  {"J": 64, "L": 4.0, "t": [1.0], "x": [0.5, 1.0, 2.0, 4.0], "n_paths": 2000,
                                   "band": 0.05}),
    "covariance-limit": Experiment(exp_covariance_limit, "exact flat-space covariance at time t against min(x, y)",
                                   {"t": [10.0], "x": [0.5, 1.0, 2.0], "L": 8.0, "J": 256}),
    "tail-bound": Experiment(exp_tail_bound, "sup-distance exceedance probabilities against the tail bound",
                             {"manifold": "all", "T": [1.0], "N": [2.0, 3.0], "n_paths": 20_000}),
    "stationarity": Experiment(exp_stationarity, "uniform start on the sphere gives stationary marginals",
                               {"manifold": "sphere", "t": [0.5, 1.0]}),
    "shift-invariance": Experiment(exp_shift_invariance, "time-shift invariance with a point-mass negative control",
                                   {"manifold": "sphere", "t": [0.2, 1.0], "shift": 0.7}),
    "grad-expectation": Experiment(exp_grad_expectation, "damped gradient formula against finite differences",
                                   {"manifold": "all", "fd_eps": 0.02}),
}


def execute(cfg: ExperimentConfig):
    """Run an experiment without touching the file system."""
    return EXPERIMENTS[cfg.experiment].func(cfg)


def run(cfg: ExperimentConfig, out=None, plot=None):
    """Execute, write the report files and return the summary.

    ``summary.txt`` is written even when a check fails.
    """
    out = cfg.out if out is None else out
    plot = cfg.plot if plot is None else plot
    folder = os.path.join(out, cfg.experiment, str(cfg.seed))
    os.makedirs(folder, exist_ok=True)
    start = time.perf_counter()
    result = execute(cfg)
    wall = time.perf_counter() - start
    artifacts = []
    path = os.path.join(folder, "results.csv")
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(result.rows))
    artifacts.append(path)
    path = os.path.join(folder, "config.txt")
    with open(path, "w") as fh:
        fh.write(cfg.as_text())
    artifacts.append(path)
    if plot:
        path = os.path.join(folder, "plot.svg")
        write_plot(path, cfg, result)
        artifacts.append(path)
    failed = [c for c in result.checks if c.mandatory and not c.passed]
    summary = RunSummary(cfg.experiment, "FAIL" if failed else "PASS", result.checks, wall, int(cfg.seed),
                         artifacts + [os.path.join(folder, "summary.txt")])
    with open(os.path.join(folder, "summary.txt"), "w") as fh:
        json.dump(summary.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def write_plot(path, cfg, result):
    """One-page SVG: the experiment's main series if it has one, else the check values."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = f"pathspace-{cfg.experiment}-{cfg.seed}"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if result.series:
        for label, (xs, ys) in result.series.items():
            ax.plot(xs, ys, "o-", label=label)
        if cfg.experiment in ("poincare-failure", "nonergodicity"):
            ax.set_xscale("log")
            ax.set_yscale("log")
        if cfg.experiment == "ergodicity":
            ax.set_yscale("log")
        ax.legend()
    else:
        values = [c.value if math.isfinite(c.value) else 0.0 for c in result.checks]
        colors = ["tab:green" if c.passed else "tab:red" for c in result.checks]
        ax.bar(range(len(values)), values, color=colors)
        ax.set_xlabel("check")
        ax.set_ylabel("value")
    ax.set_title(f"{cfg.experiment} (seed {cfg.seed})")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
