"""Command-line front end: one subcommand per experiment battery.

Every run writes ``trials.csv`` (when the battery has per-trial rows) and
``summary.json`` into the output directory.  Both files are a pure function
of the configuration; the worker count changes only wall time.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cech import (
    GeomConfig,
    HSpec,
    estimate_mu,
    increment_stats,
    mecke_selftest,
    tail_contribution_bound,
    tail_split_order,
    truncation_order,
)
from .er import (
    cov_f,
    exact_var_tilde_beta,
    mean_f,
    regime_bounds,
    regime_check,
    sigma2_asymptotic,
    stein_rate,
)
from .harness import (
    CechTrial,
    ERTrial,
    column,
    empirical_standardize,
    ks_normal,
    run_trials,
    standardize,
    summarize,
    wasserstein1_normal,
)
from .oracles import enumerate_er
from .rng import derive_seed

MODELS = ("er", "cech", "oracle", "formula")
BATTERIES = ("sim", "increments", "mecke", "mu")

# subcommand -> (model, battery)
COMMANDS = {
    "er-sim": ("er", "sim"),
    "cech-sim": ("cech", "sim"),
    "increments": ("cech", "increments"),
    "mecke": ("cech", "mecke"),
    "mu": ("cech", "mu"),
    "formula": ("formula", "sim"),
    "oracle": ("oracle", "sim"),
}


class ConfigError(ValueError):
    pass


def parse_p(value):
    """Edge probability from a float, an int or an exact ``"a/b"`` string."""
    if value is None or isinstance(value, (float, Fraction)):
        return value
    if isinstance(value, bool):
        raise ConfigError("p must be a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value) if "/" in value else float(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse p={value!r}") from exc
    raise ConfigError(f"cannot parse p={value!r}")


@dataclass
class ExperimentConfig:
    model: str = "er"
    battery: str = "sim"
    n: int = 100
    p: float | Fraction | None = None
    p_exponent: float | None = None
    r: float | None = None
    r_exponent: float | None = None
    k: int = 1
    d: int = 2
    delta: float = 0.05
    trials: int = 100
    gamma: float = 0.75
    q_offsets: list[int] | None = None
    m: int | None = None
    c: float = 1.0
    poissonized: bool = False
    homology: bool = True
    lam: float = 200.0
    i: int | None = None
    j: int = 1
    h: str = "count"
    h_r: float = 0.05
    master_seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        self.p = parse_p(self.p)
        self.validate()

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        if self.battery not in BATTERIES:
            raise ConfigError(f"battery must be one of {BATTERIES}")
        if self.battery != "sim" and self.model != "cech":
            raise ConfigError(f"battery {self.battery!r} needs model 'cech'")
        for name in ("n", "k", "d", "trials", "j", "master_seed"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer")
        if self.n < 0 or self.trials < 1 or self.k < 1 or self.d < 1 or self.j < 1:
            raise ConfigError("need n >= 0, trials >= 1, k >= 1, d >= 1, j >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.p is not None and self.p_exponent is not None:
            raise ConfigError("give p or p_exponent, not both")
        if self.r is not None and self.r_exponent is not None:
            raise ConfigError("give r or r_exponent, not both")
        if self.p is not None and not 0 <= self.p <= 1:
            raise ConfigError("p must lie in [0, 1]")
        if self.r is not None and not self.r >= 0:
            raise ConfigError("r must be nonnegative")
        if self.h not in ("zero", "count", "isolated"):
            raise ConfigError("h must be zero, count or isolated")
        if self.m is not None and self.m < 1:
            raise ConfigError("m must be positive")

    # --- resolved parameters -------------------------------------------

    def edge_probability(self):
        if self.p is not None:
            return self.p
        if self.p_exponent is not None:
            return float(self.n) ** self.p_exponent
        raise ConfigError("this battery needs p or p_exponent")

    def radius(self) -> float:
        if self.r is not None:
            return float(self.r)
        if self.r_exponent is not None:
            return float(self.n) ** self.r_exponent
        raise ConfigError("this battery needs r or r_exponent")

    # --- canonical JSON ---------------------------------------------------

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Fraction):
                v = f"{v.numerator}/{v.denominator}"
            elif isinstance(v, list):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        data = dict(data)
        for name in ("delta", "gamma", "c", "lam", "h_r", "p_exponent", "r_exponent", "r"):
            v = data.get(name)
            if isinstance(v, int) and not isinstance(v, bool):
                data[name] = float(v)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


# --- serialization ---------------------------------------------------------

def _plain(x):
    """JSON-ready copy: NaN/inf become null, Fractions become "a/b" strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, rows: list[dict]):
    """trial_index, seed, then the remaining columns in lexicographic order."""
    names = sorted({k for r in rows for k in r} - {"trial_index", "seed"})
    header = ["trial_index", "seed"] + names
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(h, "")) for h in header])
    path.write_bytes(buf.getvalue().encode("utf-8"))


# --- batteries -------------------------------------------------------------

def _normality(values, center=None, scale=None) -> dict:
    x = np.asarray(values, dtype=float)
    out = {}
    if len(x) > 1 and x.std() > 0:
        z = empirical_standardize(x)
        out["empirical"] = {"ks": ks_normal(z), "w1": wasserstein1_normal(z)}
    else:
        out["empirical"] = {"ks": None, "w1": None}
    if center is not None and scale is not None and scale > 0:
        z = standardize(x, center, scale)
        out["formula"] = {"ks": ks_normal(z), "w1": wasserstein1_normal(z)}
    return out


def _record_rows(records) -> list[dict]:
    return [{"trial_index": r.trial_index, "seed": r.seed, **r.statistics} for r in records]


def _summaries(records, names) -> dict:
    out = {}
    for name in names:
        vals = column(records, name)
        out[name] = summarize(vals).as_dict() if len(vals) > 1 else {"count": 1, "mean": float(vals[0])}
    return out


def _run_er(cfg: ExperimentConfig):
    p = float(cfg.edge_probability())
    k = cfg.k
    records = run_trials(ERTrial(cfg.n, p, k, cfg.delta, cfg.homology), cfg.trials, cfg.master_seed)
    numeric = [nm for nm in sorted(records[0].statistics)]
    var_exact = float(exact_var_tilde_beta(cfg.n, p, k).value)
    tb = column(records, "tilde_beta")
    summary = {
        "parameters": {"n": cfg.n, "p": p, "k": k},
        "statistics": _summaries(records, numeric),
        "formulas": {
            "exact_var_tilde_beta": var_exact,
            "sigma2_asymptotic": sigma2_asymptotic(cfg.n, p, k).value,
            "stein_rate": stein_rate(cfg.n, p, k, cfg.c) if p > 0 else None,
            "mean_f": {str(i): float(mean_f(cfg.n, p, i).value) for i in (k - 1, k, k + 1)},
            "exact_mean_tilde_beta": math.fsum(
                (-1) ** (i - k) * float(mean_f(cfg.n, p, i).value) for i in range(min(cfg.n, 64))),
        },
        "regime": {
            "verdict": regime_check(cfg.n, p, k, cfg.delta),
            "bounds": list(regime_bounds(cfg.n, k, cfg.delta)),
            "k1_outside_k_ge_2_analysis": k == 1,
        },
        "invariants": {
            "alt_identity_all": bool(column(records, "alt_identity_ok").all()),
        },
        "normality": {"tilde_beta": _normality(tb, tb.mean(), math.sqrt(var_exact) if var_exact > 0 else None)},
    }
    if cfg.homology:
        b = column(records, "beta_k")
        summary["invariants"].update({
            name: bool(column(records, col).all())
            for name, col in (("euler_all", "euler_ok"), ("offset_all", "offset_ok"),
                              ("morse_all", "morse_ok"))
        })
        summary["invariants"]["equals_tilde_fraction"] = float(column(records, "equals_tilde").mean())
        summary["invariants"]["equals_tilde_offset_fraction"] = float(
            column(records, "equals_tilde_offset").mean())
        summary["normality"]["beta_k"] = _normality(b, b.mean(), math.sqrt(var_exact) if var_exact > 0 else None)
        summary["variance_ratio"] = float(b.var(ddof=1) / var_exact) if var_exact > 0 else None
    return _record_rows(records), summary


def _tail_bounds(n, r, d, k, m, s_order) -> dict:
    top = max(s_order, m, k + 3)
    return {str(i): tail_contribution_bound(n, r, d, i, k) for i in range(k + 3, top + 1)}


def _run_cech(cfg: ExperimentConfig):
    r, k, d = cfg.radius(), cfg.k, cfg.d
    m = truncation_order(cfg.delta, d) if cfg.m is None else cfg.m
    s_order = tail_split_order(cfg.delta, d)
    records = run_trials(CechTrial(cfg.n, r, d, k, cfg.delta, cfg.poissonized, m),
                         cfg.trials, cfg.master_seed)
    numeric = sorted(nm for nm in records[0].statistics if nm != "x_digest")
    b = column(records, "beta_k")
    summary = {
        "parameters": {"n": cfg.n, "r": r, "d": d, "k": k, "m": m, "poissonized": cfg.poissonized},
        "statistics": _summaries(records, numeric),
        "formulas": {
            "truncation_order": truncation_order(cfg.delta, d),
            "tail_split_order": s_order,
            "tail_bounds": _tail_bounds(cfg.n, r, d, k, m, s_order),
            "clt_scale": math.sqrt(cfg.n * (cfg.n * r ** d) ** (k + 1)) if r > 0 else 0.0,
        },
        "regime": {
            "radius_upper": float(cfg.n) ** (-1 / d - cfg.delta),
            "inside": bool(r <= float(cfg.n) ** (-1 / d - cfg.delta)),
            "n_k2_r_dk1": cfg.n ** (k + 2) * r ** (d * (k + 1)),
            "k1_outside_k_ge_2_analysis": k == 1,
        },
        "invariants": {
            "decomposition_all": bool(column(records, "decomposition_ok").all()),
            "cap_all": bool(column(records, "cap_ok").all()),
            "nerve_all": bool((column(records, "nerve_max") == 0).all()),
            "beta_k_vanishes": k >= d,
            "beta_k_zero_all": bool((b == 0).all()),
        },
        "normality": {"beta_k": _normality(b), "truncated_beta": _normality(column(records, "truncated_beta"))},
    }
    return _record_rows(records), summary


def _run_increments(cfg: ExperimentConfig):
    r = cfg.radius()
    width = math.floor(cfg.n ** cfg.gamma)
    offsets = cfg.q_offsets if cfg.q_offsets is not None else [-width, 0, width]
    geom = GeomConfig(cfg.n, r, cfg.d, cfg.k, cfg.delta, False, cfg.master_seed)
    st = increment_stats(geom, cfg.gamma, offsets, cfg.trials, cfg.m)
    rows = []
    for t in range(cfg.trials):
        row = {"trial_index": t, "seed": derive_seed(cfg.master_seed, t)}
        row.update({f"R_q{q}": float(st.samples[t, col]) for col, q in enumerate(st.qs)})
        rows.append(row)
    summary = {
        "parameters": {"n": cfg.n, "r": r, "d": cfg.d, "k": cfg.k, "m": st.m, "gamma": cfg.gamma,
                       "qs": list(st.qs)},
        "increments": {
            "mean_R": list(st.mean_R), "se_R": list(st.se_R),
            "mean_R2_sqrt_n": list(st.mean_R2_sqrt_n), "se_R2_sqrt_n": list(st.se_R2_sqrt_n),
            "mean_RR": {f"{a},{b}": v for (a, b), v in st.mean_RR.items()},
            "se_RR": {f"{a},{b}": v for (a, b), v in st.se_RR.items()},
        },
        "formulas": {"increment_bound": st.bound,
                     "truncation_order": truncation_order(cfg.delta, cfg.d)},
        "checks": {"mean_within_bound_3se": [abs(mu) <= st.bound + 3 * se
                                             for mu, se in zip(st.mean_R, st.se_R)]},
    }
    return rows, summary


def _run_mecke(cfg: ExperimentConfig):
    spec = HSpec(cfg.h, cfg.h_r, cfg.d)
    res = mecke_selftest(cfg.lam, cfg.j, spec, cfg.trials, cfg.master_seed)
    rows = [{"trial_index": t, "seed": derive_seed(cfg.master_seed, t),
             "lhs": float(res.lhs_samples[t]), "rhs": float(res.rhs_samples[t])}
            for t in range(cfg.trials)]
    summary = {
        "parameters": {"lam": cfg.lam, "j": cfg.j, "h": cfg.h, "h_r": cfg.h_r, "d": cfg.d},
        "mecke": {"lhs": res.lhs, "rhs": res.rhs, "lhs_se": res.lhs_se, "rhs_se": res.rhs_se,
                  "combined_se": res.combined_se,
                  "within_3se": abs(res.lhs - res.rhs) <= 3 * res.combined_se},
    }
    return rows, summary


def _run_mu(cfg: ExperimentConfig):
    i = cfg.k + 2 if cfg.i is None else cfg.i
    r = cfg.radius()
    est = estimate_mu(i, cfg.j, cfg.k, cfg.d, None, r, cfg.trials, cfg.master_seed)
    return None, {"mu": dataclasses.asdict(est),
                  "mu_over_factorial": est.mu_hat / math.factorial(i)}


def _run_formula(cfg: ExperimentConfig):
    p = cfg.edge_probability()
    n, k = cfg.n, cfg.k
    top = min(n - 1, 3) if n else -1
    out = {
        "parameters": {"n": n, "p": p, "k": k},
        "mean_f": {str(a): mean_f(n, p, a).value for a in range(top + 1)},
        "cov_f": {f"{a},{b}": cov_f(n, p, a, b).value
                  for a in range(top + 1) for b in range(top + 1)},
        "exact_var_tilde_beta": exact_var_tilde_beta(n, p, k).value,
        "sigma2_asymptotic": sigma2_asymptotic(n, p, k).value,
        "truncation_order": truncation_order(cfg.delta, cfg.d),
        "tail_split_order": tail_split_order(cfg.delta, cfg.d),
    }
    if 0 < p:
        out["stein_rate"] = stein_rate(n, float(p), k, cfg.c)
    if n > 0:
        out["regime"] = {"verdict": regime_check(n, float(p), k, cfg.delta),
                         "bounds": list(regime_bounds(n, k, cfg.delta))}
    if cfg.r is not None or cfg.r_exponent is not None:
        r = cfg.radius()
        m = truncation_order(cfg.delta, cfg.d) if cfg.m is None else cfg.m
        out["tail_bounds"] = _tail_bounds(n, r, cfg.d, k, m, out["tail_split_order"])
    return None, out


def _run_oracle(cfg: ExperimentConfig):
    p = cfg.edge_probability()
    if not isinstance(p, Fraction):
        p = Fraction(repr(p))
    res = enumerate_er(cfg.n, p, cfg.k)
    fn = [nm for nm in res.names if nm.startswith("f")]
    agree = {
        "mean_f": all(res.expectation(f"f{a}") == mean_f(cfg.n, p, a).value for a in range(cfg.n)),
        "cov_f": all(res.covariance(f"f{a}", f"f{b}") == cov_f(cfg.n, p, a, b).value
                     for a in range(cfg.n) for b in range(cfg.n)),
        "exact_var_tilde_beta": res.variance("tilde_beta") == exact_var_tilde_beta(cfg.n, p, cfg.k).value,
    }
    return None, {
        "parameters": {"n": cfg.n, "p": p, "k": cfg.k},
        "total_weight": res.total_weight,
        "mean": dict(res.mean),
        "variance": {nm: res.variance(nm) for nm in res.names},
        "cov_f": {f"{a[1:]},{b[1:]}": res.covariance(a, b) for a in fn for b in fn},
        "agreement": agree,
    }


RUNNERS = {
    ("er", "sim"): _run_er,
    ("cech", "sim"): _run_cech,
    ("cech", "increments"): _run_increments,
    ("cech", "mecke"): _run_mecke,
    ("cech", "mu"): _run_mu,
    ("formula", "sim"): _run_formula,
    ("oracle", "sim"): _run_oracle,
}


def run(config: ExperimentConfig) -> dict:
    """Run one battery and write its artifacts; returns the summary document."""
    rows, body = RUNNERS[(config.model, config.battery)](config)
    summary = {
        "provenance": {
            "config": config.to_dict(),
            "master_seed": config.master_seed,
            "package": "betticlt",
            "version": __version__,
            "field": "GF(2)",
        },
        "result": body,
    }
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if rows is not None:
        write_csv(out / "trials.csv", rows)
    (out / "summary.json").write_bytes(canonical_json(summary).encode("utf-8"))
    return summary


# --- argument parsing ------------------------------------------------------

def _flag_type(f: dataclasses.Field):
    if f.name == "p":
        return str
    if f.name == "q_offsets":
        return lambda s: [int(x) for x in s.split(",") if x.strip()]
    t = str(f.type)
    if "int" in t and "float" not in t:
        return int
    if "float" in t:
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betticlt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config; its fields override flags")
        for f in dataclasses.fields(ExperimentConfig):
            if f.name in ("model", "battery"):
                continue
            opt = "--" + f.name.replace("_", "-")
            if f.type in ("bool",) or str(f.type) == "bool":
                sp.add_argument(opt, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
            else:
                sp.add_argument(opt, dest=f.name, type=_flag_type(f), default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    model, battery = COMMANDS[args.command]
    data = {"model": model, "battery": battery}
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name not in data:
            data[f.name] = v
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
            file_data = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("model", "battery"):
            if key in file_data and file_data[key] != data[key]:
                raise ConfigError(f"config {key}={file_data[key]!r} conflicts with '{args.command}'")
        data.update(file_data)
    return ExperimentConfig.from_dict(data)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line", 2)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    try:
        run(config)
    except (ConfigError, ValueError) as exc:
        return _fail("invalid-parameters", str(exc), 2)
    except Exception as exc:  # noqa: BLE001
        return _fail("runtime", f"{type(exc).__name__}: {exc}", 1)
    sys.stdout.write(os.path.join(config.out_dir, "summary.json") + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
