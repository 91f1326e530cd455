"""Command-line front end.

Subcommands: ``simulate``, ``estimate``, ``mc`` and ``oracle``. Settings are
resolved from built-in defaults, then an INI config file (``--config``),
then per-key flags named ``--<section>-<key>``. Every run that writes
output also writes the resolved settings as ``config.ini``; passing that
file back with ``--config`` reproduces the outputs byte for byte.

Exit codes: 0 ok, 1 usage or validation error, 2 an acceptance threshold
failed, 3 I/O or dataset parse error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .dgp import CrossSectionSpec, conditional_moments, generate_joint, read_dataset, write_dataset
from .errors import DatasetParseError, DegenerateDesignError, DegenerateVarianceError, ParameterDomainError
from .estimate import estimate_all
from .infer import counterfactual_inference, wald
from .lrv import LrvConfig, hac
from .process import (
    ProcessSpec,
    autocovariance,
    check_condition2,
    long_run_variance_true,
    mixingale_coefficient_true,
    truncated_autocovariance_sum,
)
from .verify import (
    DEFAULT_CF_GRID,
    McConfig,
    conditional_clt_check,
    discrimination_check,
    expansion_residual_check,
    joint_stable_check,
    ks_critical_value,
    panel_clt_check,
    run_mc,
    stable_ts_check,
    write_csv,
    write_kv,
    write_mc_report,
)

EXIT_OK, EXIT_USAGE, EXIT_THRESHOLD, EXIT_IO = 0, 1, 2, 3

DEFAULTS: dict[str, dict[str, str]] = {
    "process": {"family": "AR1", "theta": "0.5", "ma_weights": "", "innovation_sd": "1.0", "mean": "0.0"},
    "cross_section": {
        "n": "2000",
        "upsilon": "PotentialOutcomes",
        "u_sd": "1.0",
        "beta": "1.0",
        "treat_prob": "0.5",
        "u_law": "normal",
    },
    "lrv": {"kernel": "bartlett", "bandwidth": "auto", "demean": "true"},
    "sample": {"tau": "2000", "seed": "20261016", "kappa": "auto"},
    "inference": {"beta0": "none", "alpha": "0.05", "kappa_mode": "realized", "counterfactual_nu": "none"},
    "mc": {
        "profile": "coverage",
        "replications": "2000",
        "n_grid": "2000",
        "tau_grid": "2000",
        "master_seed": "20261016",
        "zeta": "one",
        "zeta_threshold": "0.0",
        "cf_grid": "default",
        "y_mode": "influence",
        "beta0": "none",
        "nu1_fixed": "1.0",
        "nu_head": "1.0,0.5",
        "panel_q": "coord1",
    },
    "oracle": {"max_lag": "10", "nu1": "1.0"},
}

# sections each command reads; only these are written to the resolved config
COMMAND_SECTIONS = {
    "simulate": ("process", "cross_section", "sample"),
    "estimate": ("lrv", "inference"),
    "mc": ("process", "cross_section", "lrv", "inference", "mc"),
    "oracle": ("process", "cross_section", "oracle"),
}

PROFILES = ("conditional-clt", "panel", "stable-ts", "joint-stable", "coverage", "discrimination", "expansion")
# interface names accepted as synonyms
PROFILE_ALIASES = {"theorem1": "conditional-clt", "lemma1": "stable-ts", "theorem2": "joint-stable"}


class UsageError(Exception):
    pass


def _flag(section: str, key: str) -> str:
    return f"--{section}-{key}".replace("_", "-")


def _dest(section: str, key: str) -> str:
    return f"set__{section}__{key}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with [section] key = value entries")
    common.add_argument("--seed", type=int, help="master seed (sets sample.seed and mc.master_seed)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes for mc")
    common.add_argument("--format", choices=("csv", "kv"), default="kv", help="format of summary records")
    for section, keys in DEFAULTS.items():
        group = common.add_argument_group(f"[{section}] overrides")
        for key, default in keys.items():
            group.add_argument(_flag(section, key), dest=_dest(section, key), metavar="VALUE", help=f"default: {default!r}")

    parser = argparse.ArgumentParser(prog="jointclt", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write one synthetic dataset")
    est = sub.add_parser("estimate", parents=[common], help="estimate and test on a dataset")
    est.add_argument("dataset", type=Path, help="directory written by 'simulate'")
    est.add_argument("--beta0", type=float, help="null value for the Wald test (shortcut for --inference-beta0)")
    mc = sub.add_parser("mc", parents=[common], help="run a Monte Carlo acceptance profile")
    mc.add_argument("--profile", choices=PROFILES + tuple(PROFILE_ALIASES), help="shortcut for --mc-profile")
    sub.add_parser("oracle", parents=[common], help="print analytic moments of the configured model")
    return parser


def resolve_config(args: argparse.Namespace) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULTS)
    if args.config is not None:
        if not args.config.exists():
            raise FileNotFoundError(f"{args.config}: config file not found")
        user = configparser.ConfigParser()
        user.read(args.config, encoding="utf-8")
        for section in user.sections():
            if section not in DEFAULTS:
                raise UsageError(f"{args.config}: unknown section [{section}]")
            for key, value in user[section].items():
                if key not in DEFAULTS[section]:
                    raise UsageError(f"{args.config}: unknown key '{key}' in [{section}]")
                cfg[section][key] = value
    for section, keys in DEFAULTS.items():
        for key in keys:
            value = getattr(args, _dest(section, key), None)
            if value is not None:
                cfg[section][key] = value
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        cfg["sample"]["seed"] = str(args.seed)
        cfg["mc"]["master_seed"] = str(args.seed)
    if getattr(args, "beta0", None) is not None:
        cfg["inference"]["beta0"] = repr(args.beta0)
    if getattr(args, "profile", None) is not None:
        cfg["mc"]["profile"] = args.profile
    return cfg


def write_resolved(cfg: configparser.ConfigParser, command: str, out: Path) -> Path:
    resolved = configparser.ConfigParser()
    for section in COMMAND_SECTIONS[command]:
        resolved[section] = dict(cfg[section])
    path = out / "config.ini"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        resolved.write(fh)
    return path


def _field(section: str, key: str, conv, raw: str):
    try:
        return conv(raw)
    except ValueError as exc:
        raise UsageError(f"[{section}] {key}: {exc}") from exc


def _optional_float(raw: str) -> float | None:
    return None if raw.strip().lower() in ("none", "auto", "") else float(raw)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _cf_grid(raw: str) -> tuple[tuple[float, float], ...]:
    if raw.strip().lower() == "default":
        return DEFAULT_CF_GRID
    # "s:t;s:t;..."
    points = []
    for item in raw.split(";"):
        if item.strip():
            s, t = item.split(":")
            points.append((float(s), float(t)))
    return tuple(points)


def _with_context(section: str, build):
    try:
        return build()
    except ParameterDomainError as exc:
        raise UsageError(f"[{section}] {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"[{section}] {exc}") from exc


def _specs(cfg: configparser.ConfigParser) -> tuple[ProcessSpec, CrossSectionSpec]:
    proc = _with_context("process", lambda: ProcessSpec.from_config(cfg["process"]))
    cs = _with_context("cross_section", lambda: CrossSectionSpec.from_config(cfg["cross_section"]))
    return proc, cs


def _emit(record: dict, args: argparse.Namespace, name: str) -> list[Path]:
    lines = [f"{k} = {v}" for k, v in record.items()]
    print("\n".join(lines))
    if args.out is None:
        return []
    args.out.mkdir(parents=True, exist_ok=True)
    if args.format == "kv":
        return [write_kv(record, args.out / f"{name}.kv")]
    return [write_csv(("key", "value"), record.items(), args.out / f"{name}.csv")]


def cmd_simulate(args: argparse.Namespace, cfg: configparser.ConfigParser) -> int:
    proc, cs = _specs(cfg)
    tau = _field("sample", "tau", int, cfg["sample"]["tau"])
    seed = _field("sample", "seed", int, cfg["sample"]["seed"])
    kappa = _field("sample", "kappa", _optional_float, cfg["sample"]["kappa"])
    sample = _with_context("sample", lambda: generate_joint(proc, cs, tau, seed, kappa=kappa))
    out = args.out or Path("dataset")
    paths = write_dataset(sample, out)
    paths.append(write_resolved(cfg, "simulate", out))
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, cfg: configparser.ConfigParser) -> int:
    z, y, d, meta = read_dataset(args.dataset)
    lrv_cfg = _with_context("lrv", lambda: LrvConfig.from_config(cfg["lrv"]))
    sec = cfg["inference"]
    beta0 = _field("inference", "beta0", _optional_float, sec["beta0"])
    alpha = _field("inference", "alpha", float, sec["alpha"])
    nu_cf = _field("inference", "counterfactual_nu", _optional_float, sec["counterfactual_nu"])
    kappa = None
    if meta.has_option("sample", "kappa"):
        kappa = _field("sample", "kappa", float, meta["sample"]["kappa"])
    est = _with_context("inference", lambda: estimate_all(y, d, z, kappa=kappa))
    eta = _with_context("lrv", lambda: hac(z, lrv_cfg))
    res = _with_context(
        "inference", lambda: wald(est, eta.value, 0.0 if beta0 is None else beta0, alpha, sec["kappa_mode"])
    )
    record: dict = {**est.to_record(), "eta_hat": eta.value, "bandwidth": eta.bandwidth_used}
    record.update(se_beta=res.se, ci_low=res.ci_low, ci_high=res.ci_high, alpha=alpha)
    if beta0 is not None:
        record.update(beta0=beta0, statistic=res.statistic, reject=int(res.reject))
    if nu_cf is not None:
        cf = counterfactual_inference(res, nu_cf)
        record.update(pi_nu=cf.estimate, pi_nu_se=cf.se, pi_nu_ci_low=cf.ci_low, pi_nu_ci_high=cf.ci_high)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_resolved(cfg, "estimate", args.out)
    _emit({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in record.items()}, args, "estimate")
    if beta0 is not None:
        print(res.summary())
    return EXIT_OK


def _mc_config(cfg: configparser.ConfigParser) -> McConfig:
    proc, cs = _specs(cfg)
    m = cfg["mc"]
    inf = cfg["inference"]
    lrv_cfg = _with_context("lrv", lambda: LrvConfig.from_config(cfg["lrv"]))
    return _with_context(
        "mc",
        lambda: McConfig(
            replications=int(m["replications"]),
            n_grid=_int_list(m["n_grid"]),
            tau_grid=_int_list(m["tau_grid"]),
            proc=proc,
            cs=cs,
            master_seed=int(m["master_seed"]),
            cf_grid=_cf_grid(m["cf_grid"]),
            zeta=m["zeta"].strip(),
            zeta_threshold=float(m["zeta_threshold"]),
            lrv=lrv_cfg,
            alpha=float(inf["alpha"]),
            beta0=_optional_float(m["beta0"]),
            kappa_mode=inf["kappa_mode"].strip(),
            y_mode=m["y_mode"].strip(),
        ),
    )


def _profile_run(profile: str, mc: McConfig, m: configparser.SectionProxy, out: Path, fmt: str, workers: int) -> tuple[bool, dict]:
    """Run one acceptance profile, write its tables and return ``(passed, summary)``."""
    R = mc.replications
    crit = ks_critical_value(R)
    if profile in ("conditional-clt", "panel"):
        n = mc.n_grid[0]
        if profile == "conditional-clt":
            rep = conditional_clt_check(mc.cs, float(m["nu1_fixed"]), n, R, mc.master_seed)
        else:
            rep = panel_clt_check(mc.cs, _float_list(m["nu_head"]), n, R, mc.master_seed, m["panel_q"].strip())
        write_csv(("r", "y_n"), enumerate(rep.draws), out / "draws.csv")
        summary = {"n": n, "replications": R, "sigma2": rep.sigma2, "sample_variance": rep.sample_variance,
                   "variance_ratio": rep.variance_ratio, "ks_stat": rep.ks_stat, "ks_critical_5pct": crit}
        return abs(rep.variance_ratio - 1.0) <= 0.1 and rep.ks_stat < crit, summary
    if profile == "stable-ts":
        tau = mc.tau_grid[0]
        rep = stable_ts_check(mc.proc, tau, R, mc.master_seed, zeta=mc.zeta, zeta_threshold=mc.zeta_threshold)
        write_csv(("r", "z_tau"), enumerate(rep.z), out / "draws.csv")
        write_csv(("s", "re_cov", "im_cov"), ((s, c.real, c.imag) for s, c in zip(rep.s_grid, rep.independence)),
                  out / "independence.csv")
        summary = {"tau": tau, "replications": R, "eta_true": rep.eta, "sample_variance": rep.sample_variance,
                   "ks_stat": rep.ks_stat, "ks_critical_5pct": crit}
        return abs(rep.sample_variance / rep.eta - 1.0) <= 0.1 and rep.ks_stat < crit, summary
    if profile == "expansion":
        rep = expansion_residual_check(mc, workers)
        write_csv(("n", "tau", "median_abs_residual"), zip(rep.n_grid, rep.tau_grid, rep.median_abs_residual),
                  out / "expansion.csv")
        summary = {"replications": R, "strictly_decreasing": int(rep.strictly_decreasing)}
        for k, r in enumerate(rep.ratios):
            summary[f"ratio_{k + 1}"] = float(r)
        return rep.strictly_decreasing, summary

    report = run_mc(mc, workers=workers)
    extra: dict = {"profile": profile}
    if profile == "joint-stable":
        js = joint_stable_check(mc, report=report)
        extra["origin_deviation"] = js.origin_deviation if js.origin_deviation is not None else math.nan
        passed = js.max_deviation < 0.06 and js.origin_deviation in (None, 0.0)
    elif profile == "coverage":
        passed = report.ks_stat < ks_critical_value(len(report.wald_draws)) and 0.93 <= report.coverage <= 0.97
    else:
        dis = discrimination_check(mc, report=report)
        extra.update(ks_pooled=dis.ks_pooled, ks_standardized=dis.ks_standardized)
        passed = dis.pooled_rejected and dis.standardized_accepted
    extra["passed"] = int(passed)
    write_mc_report(report, out, fmt, extra)
    print(f"runtime {report.runtime:.2f}s", file=sys.stderr)
    return passed, {**report.summary(), **extra}


def cmd_mc(args: argparse.Namespace, cfg: configparser.ConfigParser) -> int:
    mc = _mc_config(cfg)
    profile = cfg["mc"]["profile"].strip()
    profile = PROFILE_ALIASES.get(profile, profile)
    if profile not in PROFILES:
        raise UsageError(f"[mc] profile: must be one of {PROFILES}, got {profile!r}")
    out = args.out or Path("mc_" + profile)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(cfg, "mc", out)
    try:
        passed, summary = _profile_run(profile, mc, cfg["mc"], out, args.format, max(1, args.workers))
    except (DegenerateVarianceError, DegenerateDesignError, ParameterDomainError) as exc:
        raise UsageError(f"[mc] {exc}") from exc
    if profile in ("conditional-clt", "panel", "stable-ts", "expansion"):
        summary["passed"] = int(passed)
        if args.format == "kv":
            write_kv(summary, out / "summary.kv")
        else:
            write_csv(("key", "value"), summary.items(), out / "summary.csv")
    for k, v in summary.items():
        print(f"{k} = {v}")
    return EXIT_OK if passed else EXIT_THRESHOLD


def cmd_oracle(args: argparse.Namespace, cfg: configparser.ConfigParser) -> int:
    proc, cs = _specs(cfg)
    max_lag = _field("oracle", "max_lag", int, cfg["oracle"]["max_lag"])
    nu1 = _field("oracle", "nu1", float, cfg["oracle"]["nu1"])
    record: dict = {
        "eta": long_run_variance_true(proc),
        "eta_truncated_sum": truncated_autocovariance_sum(proc),
        "stationary_variance": proc.stationary_variance,
    }
    for k in range(max_lag + 1):
        record[f"acov_{k}"] = autocovariance(proc, k)
    for k in range(max_lag + 1):
        record[f"gamma_{k}"] = mixingale_coefficient_true(proc, k)
    c2 = check_condition2(proc)
    record.update(
        condition2_i=int(c2.clause_i), condition2_ii=int(c2.clause_ii), condition2_iii=int(c2.clause_iii),
        condition2_decay_rate=c2.decay_rate,
    )
    try:
        mu, s2 = conditional_moments(cs, nu1)
        record.update(cond_mean=mu, cond_variance=s2)
    except (NotImplementedError, ParameterDomainError) as exc:
        print(f"note: conditional moments unavailable ({exc})", file=sys.stderr)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_resolved(cfg, "oracle", args.out)
    _emit({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in record.items()}, args, "oracle")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "mc": cmd_mc, "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegenerateDesignError, DegenerateVarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
