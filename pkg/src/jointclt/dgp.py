"""Joint time-series / cross-section data generation.

The time series is ``z_s = phi + nu_s`` for ``s = 1..tau``. The cross-section
is observed at ``t = 1`` and depends on the aggregate shock only through
``nu_1``::

    y_tilde_i = pi_1 * d_i + e(nu_1, u_i),     pi_1 = beta / (1 + nu_1^2)

with ``d_i ~ Bernoulli(treat_prob)`` independent of ``u_i``. The noise
``e`` depends on the outcome model:

``PotentialOutcomes``  ``e = u``
``ScaledShock``        ``e = nu_1 * u / 2``

With ``treat_prob = 1/2`` the difference-in-means estimator has influence
``y_i = 2 (2 d_i - 1) e_i``, whose conditional variance is ``4 sigma_u^2``
for PotentialOutcomes and ``nu_1^2 sigma_u^2`` for ScaledShock.

Shock, ``u`` and ``d`` draws come from disjoint seed streams derived from one
master seed, so given ``nu_1`` the two samples are independent and changing
the cross-section streams never touches the shock path.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DatasetParseError, ParameterDomainError
from .process import ProcessSpec, ShockPath, generate_shocks
from .seeding import STREAM_D, STREAM_SHOCK, STREAM_U, derive_seed, make_rng

UPSILONS = ("PotentialOutcomes", "ScaledShock")
U_LAWS = ("normal", "uniform")

# tag -> f(nu1, u, d, pi1) returning observed outcomes
_CUSTOM_UPSILON: dict[str, Callable[[float, np.ndarray, np.ndarray, float], np.ndarray]] = {}


def register_upsilon(tag: str, fn: Callable[[float, np.ndarray, np.ndarray, float], np.ndarray]) -> None:
    """Register a custom outcome model usable as ``upsilon="Custom:<tag>"``."""
    _CUSTOM_UPSILON[tag] = fn


@dataclass(frozen=True)
class CrossSectionSpec:
    n: int = 1000
    upsilon: str = "PotentialOutcomes"
    u_sd: float = 1.0
    beta: float = 1.0
    treat_prob: float = 0.5
    u_law: str = "normal"

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ParameterDomainError(f"n must be an integer >= 2, got {self.n}")
        if not (self.u_sd > 0 and math.isfinite(self.u_sd)):
            raise ParameterDomainError(f"u_sd must be positive, got {self.u_sd}")
        if not 0 < self.treat_prob < 1:
            raise ParameterDomainError(f"treat_prob must lie in (0, 1), got {self.treat_prob}")
        if not math.isfinite(self.beta):
            raise ParameterDomainError(f"beta must be finite, got {self.beta}")
        if self.u_law not in U_LAWS:
            raise ParameterDomainError(f"u_law must be one of {U_LAWS}, got {self.u_law!r}")
        if self.upsilon not in UPSILONS and not self.upsilon.startswith("Custom:"):
            raise ParameterDomainError(
                f"upsilon must be one of {UPSILONS} or 'Custom:<tag>', got {self.upsilon!r}"
            )

    @property
    def is_custom(self) -> bool:
        return self.upsilon.startswith("Custom:")

    def to_config(self) -> dict[str, str]:
        return {
            "n": str(self.n),
            "upsilon": self.upsilon,
            "u_sd": repr(self.u_sd),
            "beta": repr(self.beta),
            "treat_prob": repr(self.treat_prob),
            "u_law": self.u_law,
        }

    @classmethod
    def from_config(cls, section: Mapping[str, str]) -> "CrossSectionSpec":
        return cls(
            n=int(section.get("n", "1000")),
            upsilon=section.get("upsilon", "PotentialOutcomes").strip(),
            u_sd=float(section.get("u_sd", "1.0")),
            beta=float(section.get("beta", "1.0")),
            treat_prob=float(section.get("treat_prob", "0.5")),
            u_law=section.get("u_law", "normal").strip(),
        )


def effect_at(beta: float, nu: float | np.ndarray) -> float | np.ndarray:
    """Causal effect ``beta / (1 + nu^2)``."""
    return beta / (1.0 + np.square(nu))


def draw_u(cs: CrossSectionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if cs.u_law == "normal":
        return rng.standard_normal(size) * cs.u_sd
    half_width = math.sqrt(3.0) * cs.u_sd
    return rng.uniform(-half_width, half_width, size)


def draw_d(cs: CrossSectionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    return (rng.random(size) < cs.treat_prob).astype(np.int64)


def outcome_noise(cs: CrossSectionSpec, nu: float, u: np.ndarray) -> np.ndarray:
    """The additive noise ``e(nu, u)`` of the built-in outcome models."""
    if cs.upsilon == "PotentialOutcomes":
        return u
    if cs.upsilon == "ScaledShock":
        return 0.5 * nu * u
    raise NotImplementedError(f"no additive-noise form for {cs.upsilon}")


def observed_outcomes(cs: CrossSectionSpec, nu: float, u: np.ndarray, d: np.ndarray) -> np.ndarray:
    pi = float(effect_at(cs.beta, nu))
    if cs.is_custom:
        tag = cs.upsilon.split(":", 1)[1]
        try:
            fn = _CUSTOM_UPSILON[tag]
        except KeyError:
            raise ParameterDomainError(f"no custom outcome model registered under {tag!r}") from None
        return np.asarray(fn(nu, u, d, pi), dtype=float)
    return pi * d + outcome_noise(cs, nu, u)


def influence_values(cs: CrossSectionSpec, nu: float, u: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Per-unit influence ``2 (2 d - 1) e(nu, u)`` of the difference in means."""
    return 2.0 * (2.0 * d - 1.0) * outcome_noise(cs, nu, u)


def conditional_moments(cs: CrossSectionSpec, nu1: float) -> tuple[float, float]:
    """Conditional mean and variance of the influence value given ``nu_1``."""
    if cs.is_custom:
        raise NotImplementedError("moments of a custom outcome model must be estimated by simulation")
    if cs.treat_prob != 0.5:
        raise ParameterDomainError("the influence representation assumes treat_prob = 1/2")
    if cs.upsilon == "PotentialOutcomes":
        return 0.0, 4.0 * cs.u_sd**2
    return 0.0, nu1 * nu1 * cs.u_sd**2


@dataclass(frozen=True)
class JointSample:
    """One synthetic dataset.

    ``u`` holds the latent draws when the sample was simulated and is ``None``
    for datasets read from disk.
    """

    shocks: ShockPath
    z: np.ndarray = field(repr=False)
    y_tilde: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    nu1: float
    kappa: float
    proc: ProcessSpec
    cs: CrossSectionSpec
    seed: int
    stream_seeds: dict[str, int] = field(default_factory=dict)
    u: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.y_tilde)

    @property
    def tau(self) -> int:
        return len(self.z)

    @property
    def pi1(self) -> float:
        return float(effect_at(self.cs.beta, self.nu1))


def generate_joint(
    proc: ProcessSpec,
    cs: CrossSectionSpec,
    tau: int,
    seed: int,
    kappa: float | None = None,
    head: Sequence[float] | None = None,
) -> JointSample:
    """Simulate ``(z_1..z_tau)`` and the period-1 cross-section of size ``cs.n``.

    ``kappa`` is the declared limit of ``n / tau`` and defaults to the
    realised ratio. ``head`` forces the leading shocks (see
    :func:`generate_shocks`).
    """
    if tau < 1:
        raise ParameterDomainError(f"tau must be >= 1, got {tau}")
    if kappa is None:
        kappa = cs.n / tau
    if not kappa > 0:
        raise ParameterDomainError(f"kappa must be positive, got {kappa}")
    seeds = {
        "shock": derive_seed(seed, STREAM_SHOCK),
        "u": derive_seed(seed, STREAM_U),
        "d": derive_seed(seed, STREAM_D, 1),
    }
    shocks = generate_shocks(proc, tau, seeds["shock"], head=head)
    nu1 = shocks.nu1
    u = draw_u(cs, make_rng(seeds["u"]), cs.n)
    d = draw_d(cs, make_rng(seeds["d"]), cs.n)
    return JointSample(
        shocks=shocks,
        z=proc.mean + shocks.values,
        y_tilde=observed_outcomes(cs, nu1, u, d),
        d=d,
        nu1=nu1,
        kappa=float(kappa),
        proc=proc,
        cs=cs,
        seed=seed,
        stream_seeds=seeds,
        u=u,
    )


# --- short panels -----------------------------------------------------------


@dataclass(frozen=True)
class PanelSample:
    """``T`` cross-sectional periods driven by ``nu_1..nu_T`` and unit effects ``u_i``.

    Row ``i`` of ``y_tilde``/``d``/``influence`` is unit ``i`` across the
    periods; ``d`` is re-randomised every period.
    """

    shocks: ShockPath
    T: int
    y_tilde: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    pi: np.ndarray
    cs: CrossSectionSpec
    q_tag: str = "coord1"

    @property
    def nu_head(self) -> np.ndarray:
        return self.shocks.values[: self.T]

    def influence(self) -> np.ndarray:
        cols = [influence_values(self.cs, float(nu), self.u, self.d[:, t]) for t, nu in enumerate(self.nu_head)]
        return np.column_stack(cols)

    def aggregate(self, q: str | Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
        """``q(y_i)`` for every unit, applied to the influence rows."""
        return resolve_q(self.q_tag if q is None else q)(self.influence())


def resolve_q(q: str | Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Aggregation over periods: ``"coord<k>"`` (1-based projection), ``"mean"`` or a callable."""
    if callable(q):
        return q
    if q == "mean":
        return lambda y: y.mean(axis=1)
    if q.startswith("coord"):
        k = int(q[5:]) - 1
        if k < 0:
            raise ParameterDomainError(f"coordinates are 1-based, got {q!r}")
        return lambda y: y[:, k]
    raise ParameterDomainError(f"unknown aggregation {q!r}")


def panel_conditional_variance(cs: CrossSectionSpec, nu_head: Sequence[float], q: str) -> float:
    """``E[q(y_i)^2 | nu_1..nu_T]`` for the built-in outcome models and aggregations."""
    nu = np.asarray(nu_head, dtype=float)
    if q.startswith("coord"):
        return conditional_moments(cs, float(nu[int(q[5:]) - 1]))[1]
    if q == "mean":
        conditional_moments(cs, 0.0)  # validates the design
        T = len(nu)
        if cs.upsilon == "PotentialOutcomes":
            # independent signs across periods share one u
            return 4.0 * cs.u_sd**2 / T
        # every period shares u and the sign flips independently
        return cs.u_sd**2 * float(np.sum(nu * nu)) / T**2
    raise NotImplementedError(f"no analytic conditional variance for aggregation {q!r}")


def generate_panel(
    proc: ProcessSpec,
    cs: CrossSectionSpec,
    T: int,
    tau: int,
    seed: int,
    q_tag: str = "coord1",
    head: Sequence[float] | None = None,
) -> PanelSample:
    """Simulate a ``T``-period panel; period 1 reproduces :func:`generate_joint` for the same seed."""
    if T < 2:
        raise ParameterDomainError(f"a short panel needs T >= 2, got {T}")
    if T > tau:
        raise ParameterDomainError(f"T={T} exceeds tau={tau}")
    shocks = generate_shocks(proc, tau, derive_seed(seed, STREAM_SHOCK), head=head)
    u = draw_u(cs, make_rng(derive_seed(seed, STREAM_U)), cs.n)
    d = np.column_stack([draw_d(cs, make_rng(derive_seed(seed, STREAM_D, t)), cs.n) for t in range(1, T + 1)])
    nu = shocks.values[:T]
    y = np.column_stack([observed_outcomes(cs, float(nu[t]), u, d[:, t]) for t in range(T)])
    return PanelSample(
        shocks=shocks, T=T, y_tilde=y, d=d, u=u, pi=np.asarray(effect_at(cs.beta, nu)), cs=cs, q_tag=q_tag
    )


# --- dataset files -------------------------------------------------------------

TIMESERIES_FILE = "timeseries.csv"
CROSS_SECTION_FILE = "cross_section.csv"
METADATA_FILE = "metadata.ini"


def fmt_float(x: float) -> str:
    return "%.17g" % x


def write_dataset(sample: JointSample, directory: str | Path) -> list[Path]:
    """Write the two data tables and the metadata sidecar; returns the paths written."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    ts_path = out / TIMESERIES_FILE
    with open(ts_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "z"])
        for s, z in enumerate(sample.z, start=1):
            w.writerow([s, fmt_float(z)])
    cs_path = out / CROSS_SECTION_FILE
    with open(cs_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "y_tilde", "d"])
        for i, (y, d) in enumerate(zip(sample.y_tilde, sample.d), start=1):
            w.writerow([i, fmt_float(y), int(d)])
    meta = configparser.ConfigParser()
    meta["process"] = sample.proc.to_config()
    meta["cross_section"] = sample.cs.to_config()
    meta["sample"] = {
        "tau": str(sample.tau),
        "n": str(sample.n),
        "kappa": fmt_float(sample.kappa),
        "seed": str(sample.seed),
        "nu1": fmt_float(sample.nu1),
        **{f"seed_{k}": str(v) for k, v in sample.stream_seeds.items()},
    }
    meta_path = out / METADATA_FILE
    with open(meta_path, "w", newline="", encoding="utf-8") as fh:
        meta.write(fh)
    return [ts_path, cs_path, meta_path]


def _read_table(path: Path, columns: Sequence[str], converters: Sequence[Callable[[str], object]]) -> list[list]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetParseError(f"{path}: cannot open ({exc.strerror})") from exc
    rows = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetParseError(f"{path}:1: empty file")
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise DatasetParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([conv(row[j]) for j, conv in zip(idx, converters)])
            except ValueError as exc:
                raise DatasetParseError(f"{path}:{lineno}: {exc}") from exc
    return rows


def _binary(text: str) -> int:
    v = int(text)
    if v not in (0, 1):
        raise ValueError(f"d must be 0 or 1, got {text!r}")
    return v


def read_dataset(directory: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, configparser.ConfigParser]:
    """Load ``(z, y_tilde, d, metadata)`` written by :func:`write_dataset`.

    The metadata parser is empty when the sidecar is absent.
    """
    base = Path(directory)
    ts = _read_table(base / TIMESERIES_FILE, ["z"], [float])
    cross = _read_table(base / CROSS_SECTION_FILE, ["y_tilde", "d"], [float, _binary])
    if not ts:
        raise DatasetParseError(f"{base / TIMESERIES_FILE}:2: no observations")
    if not cross:
        raise DatasetParseError(f"{base / CROSS_SECTION_FILE}:2: no observations")
    meta = configparser.ConfigParser()
    meta_path = base / METADATA_FILE
    if meta_path.exists():
        meta.read(meta_path, encoding="utf-8")
    z = np.array([r[0] for r in ts], dtype=float)
    y = np.array([r[0] for r in cross], dtype=float)
    d = np.array([r[1] for r in cross], dtype=np.int64)
    return z, y, d, meta
