"""Monte Carlo engine and limit-theorem diagnostics.

Replication ``r`` of a run with master seed ``m`` draws everything from
``derive_seed(m, r)``, so a replication's data depend only on ``(m, r)``.
Replications are computed in chunks, optionally on a process pool, and
gathered back in replication order before any reduction; summaries are
therefore identical for every worker count.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .dgp import (
    CrossSectionSpec,
    conditional_moments,
    draw_d,
    draw_u,
    generate_joint,
    influence_values,
    panel_conditional_variance,
    resolve_q,
)
from .errors import DegenerateDesignError, DegenerateVarianceError, ParameterDomainError
from .estimate import estimate_all, linearization_residual
from .infer import wald
from .lrv import LrvConfig, hac
from .process import ProcessSpec, generate_shocks, long_run_variance_true
from .seeding import STREAM_D, STREAM_SHOCK, STREAM_U, derive_seed, make_rng

KS_CRIT_5PCT = 1.358
MIN_R_FOR_VERDICT = 500
ZETAS = ("one", "indicator", "tanh")
DEFAULT_CF_AXIS = (-2.0, -1.0, 0.0, 1.0, 2.0)
DEFAULT_CF_GRID = tuple((s, t) for s in DEFAULT_CF_AXIS for t in DEFAULT_CF_AXIS)


def ks_distance(sample: Sequence[float]) -> float:
    """Sup distance between the empirical CDF of ``sample`` and the standard normal CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    m = len(x)
    if m == 0:
        raise ParameterDomainError("KS distance of an empty sample")
    cdf = ndtr(x)
    upper = np.arange(1, m + 1) / m - cdf
    lower = cdf - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


def ks_critical_value(R: int) -> float:
    """Asymptotic 5% Kolmogorov-Smirnov critical value ``1.358 / sqrt(R)``."""
    return KS_CRIT_5PCT / math.sqrt(R)


def ks_passes(distance: float, R: int) -> bool:
    """Pass/fail verdict at 5%; refuses to judge below ``MIN_R_FOR_VERDICT`` draws."""
    if R < MIN_R_FOR_VERDICT:
        raise ParameterDomainError(f"KS verdicts need R >= {MIN_R_FOR_VERDICT}, got {R}")
    return distance < ks_critical_value(R)


def zeta_values(kind: str, nu1: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Bounded test functions of the initial shock."""
    nu1 = np.asarray(nu1, dtype=float)
    if kind == "one":
        return np.ones_like(nu1)
    if kind == "indicator":
        return (nu1 > threshold).astype(float)
    if kind == "tanh":
        return np.tanh(nu1)
    raise ParameterDomainError(f"zeta must be one of {ZETAS}, got {kind!r}")


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.

    ``n_grid`` and ``tau_grid`` are paired point by point; :func:`run_mc`
    uses one point (the first by default) and
    :func:`expansion_residual_check` sweeps all of them. ``beta0=None``
    tests the true ``beta``; ``kappa=None`` declares the realised ratio.
    """

    replications: int = 2000
    n_grid: tuple[int, ...] = (2000,)
    tau_grid: tuple[int, ...] = (2000,)
    proc: ProcessSpec = field(default_factory=lambda: ProcessSpec.ar1(0.5))
    cs: CrossSectionSpec = field(default_factory=CrossSectionSpec)
    master_seed: int = 20261016
    cf_grid: tuple[tuple[float, float], ...] = DEFAULT_CF_GRID
    zeta: str = "one"
    zeta_threshold: float = 0.0
    lrv: LrvConfig = field(default_factory=LrvConfig)
    alpha: float = 0.05
    beta0: float | None = None
    kappa: float | None = None
    kappa_mode: str = "realized"
    y_mode: str = "influence"

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "tau_grid", tuple(int(t) for t in self.tau_grid))
        object.__setattr__(self, "cf_grid", tuple((float(s), float(t)) for s, t in self.cf_grid))
        if self.replications < 1:
            raise ParameterDomainError(f"replications must be >= 1, got {self.replications}")
        if not self.n_grid or len(self.n_grid) != len(self.tau_grid):
            raise ParameterDomainError("n_grid and tau_grid must be non-empty and of equal length")
        if min(self.n_grid) < 2 or min(self.tau_grid) < 2:
            raise ParameterDomainError("grid sizes must be >= 2")
        if self.zeta not in ZETAS:
            raise ParameterDomainError(f"zeta must be one of {ZETAS}, got {self.zeta!r}")
        if self.y_mode not in ("influence", "estimator"):
            raise ParameterDomainError(f"y_mode must be 'influence' or 'estimator', got {self.y_mode!r}")
        if self.master_seed < 0:
            raise ParameterDomainError("master_seed must be non-negative")

    @property
    def beta(self) -> float:
        return self.cs.beta

    @property
    def tested_value(self) -> float:
        return self.beta if self.beta0 is None else self.beta0


# per-replication record columns, in export order
RECORD_FIELDS = (
    "r",
    "upsilon_hat",
    "beta_hat",
    "eta_hat",
    "nu1_hat",
    "covered",
    "nu1",
    "z_tau",
    "y_n",
    "sigma2",
    "scaled_error",
    "expansion_residual",
    "degenerate",
)


def _replicate(cfg: McConfig, n: int, tau: int, r: int) -> tuple:
    cs = replace(cfg.cs, n=n)
    sample = generate_joint(cfg.proc, cs, tau, derive_seed(cfg.master_seed, r), kappa=cfg.kappa)
    nu1 = sample.nu1
    phi = cfg.proc.mean
    z_tau = math.sqrt(tau) * (float(np.mean(sample.z)) - phi)
    try:
        est = estimate_all(sample.y_tilde, sample.d, sample.z, kappa=cfg.kappa)
        eta_hat = hac(sample.z, cfg.lrv).value
        res = wald(est, eta_hat, cfg.tested_value, cfg.alpha, cfg.kappa_mode)
    except (DegenerateDesignError, DegenerateVarianceError):
        nan = math.nan
        return (r, nan, nan, nan, nan, False, nu1, z_tau, nan, nan, nan, nan, True)
    if cfg.y_mode == "influence":
        y_n = float(np.sum(influence_values(cs, nu1, sample.u, sample.d))) / math.sqrt(n)
    else:
        y_n = math.sqrt(n) * (est.pi1_hat - sample.pi1)
    sigma2 = conditional_moments(cs, nu1)[1] if not cs.is_custom else math.nan
    return (
        r,
        res.statistic,
        est.beta_hat,
        eta_hat,
        est.nu1_hat,
        res.ci_low <= cfg.tested_value <= res.ci_high,
        nu1,
        z_tau,
        y_n,
        sigma2,
        math.sqrt(n) * (est.beta_hat - cfg.beta),
        linearization_residual(est, cfg.beta, phi, nu1),
        False,
    )


def _run_chunk(cfg: McConfig, n: int, tau: int, start: int, stop: int) -> list[tuple]:
    return [_replicate(cfg, n, tau, r) for r in range(start, stop)]


def run_replications(cfg: McConfig, n: int, tau: int, workers: int = 1) -> dict[str, np.ndarray]:
    """Per-replication records for one ``(n, tau)`` point, as column arrays in replication order."""
    R = cfg.replications
    if workers <= 1:
        rows = _run_chunk(cfg, n, tau, 0, R)
    else:
        n_chunks = min(R, 4 * workers)
        bounds = np.linspace(0, R, n_chunks + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, cfg, n, tau, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a
            ]
            rows = [row for fut in futures for row in fut.result()]
    cols = list(zip(*rows))
    out = {name: np.asarray(col) for name, col in zip(RECORD_FIELDS, cols)}
    out["r"] = out["r"].astype(np.int64)
    out["covered"] = out["covered"].astype(bool)
    out["degenerate"] = out["degenerate"].astype(bool)
    return out


def characteristic_grid(
    z: np.ndarray,
    y: np.ndarray,
    zeta: np.ndarray,
    sigma2: np.ndarray,
    eta: float,
    grid: Sequence[tuple[float, float]],
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical and limiting ``E[zeta exp(i(sZ + tY))]`` over ``grid``.

    The limit is ``exp(-s^2 eta / 2) * mean(zeta * exp(-t^2 sigma2 / 2))``,
    averaged over the same draws of the initial shock.
    """
    emp = np.empty(len(grid), dtype=complex)
    tgt = np.empty(len(grid), dtype=complex)
    for k, (s, t) in enumerate(grid):
        arg = s * z + t * y
        emp[k] = complex(np.mean(zeta * np.cos(arg)), np.mean(zeta * np.sin(arg)))
        tgt[k] = math.exp(-0.5 * s * s * eta) * np.mean(zeta * np.exp(-0.5 * t * t * sigma2))
    return emp, tgt


@dataclass
class McReport:
    n: int
    tau: int
    replications: int
    eta: float
    records: dict[str, np.ndarray] = field(repr=False)
    wald_draws: np.ndarray = field(repr=False)
    ks_stat: float
    coverage: float
    cf_grid: tuple[tuple[float, float], ...]
    cf_empirical: np.ndarray = field(repr=False)
    cf_target: np.ndarray = field(repr=False)
    excluded_degenerate: int
    runtime: float = field(compare=False)

    @property
    def cf_deviation(self) -> np.ndarray:
        return np.abs(self.cf_empirical - self.cf_target)

    @property
    def max_cf_deviation(self) -> float:
        return float(self.cf_deviation.max())

    def summary(self) -> dict[str, float | int]:
        """Scalar summary; deterministic (runtime excluded)."""
        return {
            "n": self.n,
            "tau": self.tau,
            "replications": self.replications,
            "excluded_degenerate": self.excluded_degenerate,
            "eta_true": self.eta,
            "ks_stat": self.ks_stat,
            "ks_critical_5pct": ks_critical_value(len(self.wald_draws)),
            "coverage": self.coverage,
            "max_cf_deviation": self.max_cf_deviation,
            "median_eta_hat": float(np.nanmedian(self.records["eta_hat"])),
        }


def run_mc(cfg: McConfig, point: int = 0, workers: int = 1) -> McReport:
    """Simulate, estimate and test ``cfg.replications`` datasets at grid point ``point``."""
    t0 = time.perf_counter()
    n, tau = cfg.n_grid[point], cfg.tau_grid[point]
    rec = run_replications(cfg, n, tau, workers)
    ok = ~rec["degenerate"]
    draws = rec["upsilon_hat"][ok]
    zeta = zeta_values(cfg.zeta, rec["nu1"][ok], cfg.zeta_threshold)
    eta = long_run_variance_true(cfg.proc)
    emp, tgt = characteristic_grid(rec["z_tau"][ok], rec["y_n"][ok], zeta, rec["sigma2"][ok], eta, cfg.cf_grid)
    return McReport(
        n=n,
        tau=tau,
        replications=cfg.replications,
        eta=eta,
        records=rec,
        wald_draws=draws,
        ks_stat=ks_distance(draws) if draws.size else math.nan,
        coverage=float(np.mean(rec["covered"][ok])) if draws.size else math.nan,
        cf_grid=cfg.cf_grid,
        cf_empirical=emp,
        cf_target=tgt,
        excluded_degenerate=int((~ok).sum()),
        runtime=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class JointStableReport:
    grid: tuple[tuple[float, float], ...]
    empirical: np.ndarray
    target: np.ndarray
    deviation: np.ndarray
    max_deviation: float
    origin_deviation: float | None


def joint_stable_check(cfg: McConfig, workers: int = 1, report: McReport | None = None) -> JointStableReport:
    """Compare the empirical joint characteristic function against its mixed-Gaussian limit."""
    rep = run_mc(cfg, workers=workers) if report is None else report
    dev = rep.cf_deviation
    origin = None
    for k, (s, t) in enumerate(rep.cf_grid):
        if s == 0.0 and t == 0.0:
            origin = float(dev[k])
    return JointStableReport(rep.cf_grid, rep.cf_empirical, rep.cf_target, dev, float(dev.max()), origin)


@dataclass(frozen=True)
class ConditionalCltReport:
    draws: np.ndarray
    sigma2: float
    sample_variance: float
    variance_ratio: float
    ks_stat: float


def _clt_report(y: np.ndarray, sigma2: float) -> ConditionalCltReport:
    if not sigma2 > 0:
        raise DegenerateVarianceError("conditional variance is zero at this shock value")
    var = float(np.var(y, ddof=1))
    return ConditionalCltReport(y, sigma2, var, var / sigma2, ks_distance(y / math.sqrt(sigma2)))


def conditional_clt_check(cs: CrossSectionSpec, nu1_fixed: float, n: int, R: int, seed: int) -> ConditionalCltReport:
    """Draw ``R`` cross-section averages ``Y_n`` with the initial shock held at ``nu1_fixed``."""
    _, sigma2 = conditional_moments(cs, nu1_fixed)
    if not sigma2 > 0:
        raise DegenerateVarianceError(f"sigma^2({nu1_fixed}) = 0")
    y = np.empty(R)
    for r in range(R):
        seed_r = derive_seed(seed, r)
        u = draw_u(cs, make_rng(derive_seed(seed_r, STREAM_U)), n)
        d = draw_d(cs, make_rng(derive_seed(seed_r, STREAM_D, 1)), n)
        y[r] = np.sum(influence_values(cs, nu1_fixed, u, d)) / math.sqrt(n)
    return _clt_report(y, sigma2)


def panel_clt_check(
    cs: CrossSectionSpec, nu_head: Sequence[float], n: int, R: int, seed: int, q: str = "coord1"
) -> ConditionalCltReport:
    """Conditional CLT for ``n^{-1/2} sum q(y_i)`` in a short panel with ``nu_1..nu_T`` fixed.

    Period ``t`` uses the same seed streams as :func:`conditional_clt_check`
    does for period 1, so ``q="coord1"`` reproduces its draws exactly.
    """
    nu = np.asarray(nu_head, dtype=float)
    T = len(nu)
    if T < 2:
        raise ParameterDomainError(f"a short panel needs T >= 2, got {T}")
    sigma2 = panel_conditional_variance(cs, nu, q)
    agg = resolve_q(q)
    y = np.empty(R)
    for r in range(R):
        seed_r = derive_seed(seed, r)
        u = draw_u(cs, make_rng(derive_seed(seed_r, STREAM_U)), n)
        infl = np.column_stack(
            [
                influence_values(cs, float(nu[t]), u, draw_d(cs, make_rng(derive_seed(seed_r, STREAM_D, t + 1)), n))
                for t in range(T)
            ]
        )
        y[r] = np.sum(agg(infl)) / math.sqrt(n)
    return _clt_report(y, sigma2)


@dataclass(frozen=True)
class StableTsReport:
    z: np.ndarray
    eta: float
    sample_variance: float
    ks_stat: float
    s_grid: tuple[float, ...]
    independence: np.ndarray


def stable_ts_check(
    proc: ProcessSpec,
    tau: int,
    R: int,
    seed: int,
    zeta: str = "indicator",
    zeta_threshold: float = 0.0,
    s_grid: Sequence[float] = DEFAULT_CF_AXIS,
) -> StableTsReport:
    """Draw ``R`` normalized sums ``Z_tau`` and compare them with ``N(0, eta)``.

    ``independence[k]`` is the sample covariance between ``zeta(nu_1)`` and
    ``exp(i s_k Z_tau)``, which vanishes in the limit because the Gaussian
    factor is independent of the initial shock.
    """
    eta = long_run_variance_true(proc)
    z = np.empty(R)
    nu1 = np.empty(R)
    for r in range(R):
        path = generate_shocks(proc, tau, derive_seed(derive_seed(seed, r), STREAM_SHOCK))
        z[r] = path.normalized_sum()
        nu1[r] = path.nu1
    zv = zeta_values(zeta, nu1, zeta_threshold)
    ind = np.empty(len(s_grid), dtype=complex)
    for k, s in enumerate(s_grid):
        c, sn = np.cos(s * z), np.sin(s * z)
        ind[k] = complex(
            np.mean(zv * c) - np.mean(zv) * np.mean(c),
            np.mean(zv * sn) - np.mean(zv) * np.mean(sn),
        )
    return StableTsReport(
        z=z,
        eta=eta,
        sample_variance=float(np.var(z, ddof=1)),
        ks_stat=ks_distance(z / math.sqrt(eta)),
        s_grid=tuple(float(s) for s in s_grid),
        independence=ind,
    )


@dataclass(frozen=True)
class ExpansionReport:
    n_grid: tuple[int, ...]
    tau_grid: tuple[int, ...]
    median_abs_residual: np.ndarray
    ratios: np.ndarray

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.median_abs_residual) < 0))


def expansion_residual_check(cfg: McConfig, workers: int = 1) -> ExpansionReport:
    """Median absolute remainder of the first-order expansion at every grid point."""
    med = []
    for n, tau in zip(cfg.n_grid, cfg.tau_grid):
        rec = run_replications(cfg, n, tau, workers)
        med.append(float(np.median(np.abs(rec["expansion_residual"][~rec["degenerate"]]))))
    med_arr = np.asarray(med)
    return ExpansionReport(cfg.n_grid, cfg.tau_grid, med_arr, med_arr[1:] / med_arr[:-1])


@dataclass(frozen=True)
class DiscriminationReport:
    ks_pooled: float
    ks_standardized: float
    critical_value: float

    @property
    def pooled_rejected(self) -> bool:
        return self.ks_pooled > self.critical_value

    @property
    def standardized_accepted(self) -> bool:
        return self.ks_standardized < self.critical_value


def discrimination_check(cfg: McConfig, workers: int = 1, report: McReport | None = None) -> DiscriminationReport:
    """KS normality of the pooled ``sqrt(n)(beta_hat - beta)`` versus the studentized statistic.

    The pooled draws are centred and scaled by their own sample moments, so
    only the shape of the distribution is tested.
    """
    rep = run_mc(cfg, workers=workers) if report is None else report
    ok = ~rep.records["degenerate"]
    x = rep.records["scaled_error"][ok]
    pooled = (x - x.mean()) / x.std(ddof=1)
    return DiscriminationReport(ks_distance(pooled), rep.ks_stat, ks_critical_value(int(ok.sum())))


# --- exports -------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_kv(record: dict, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in record.items():
            fh.write(f"{k} = {_fmt(v)}\n")
    return path


def write_csv(header: Sequence[str], rows, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_mc_report(report: McReport, directory: str | Path, summary_format: str = "kv", extra: dict | None = None) -> list[Path]:
    """Per-replication table, cf-grid table and summary record."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    rec = report.records
    cols = ("r", "upsilon_hat", "beta_hat", "eta_hat", "nu1_hat", "covered")
    paths = [write_csv(cols, zip(*(rec[c] for c in cols)), out / "replications.csv")]
    dev = report.cf_deviation
    rows = (
        (s, t, e.real, e.imag, g.real, g.imag, d)
        for (s, t), e, g, d in zip(report.cf_grid, report.cf_empirical, report.cf_target, dev)
    )
    paths.append(
        write_csv(("s", "t", "re_empirical", "im_empirical", "re_target", "im_target", "deviation"), rows, out / "cf_grid.csv")
    )
    summary = {**report.summary(), **(extra or {})}
    if summary_format == "kv":
        paths.append(write_kv(summary, out / "summary.kv"))
    else:
        paths.append(write_csv(("key", "value"), summary.items(), out / "summary.csv"))
    return paths
