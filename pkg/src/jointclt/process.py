"""Stationary mixingale shock processes and their analytic moments.

Three Gaussian families are supported:

``AR1``
    ``nu_s = theta * nu_{s-1} + eps_s`` with ``|theta| < 1``.
``MA``
    ``nu_s = eps_s + w_1 eps_{s-1} + ... + w_q eps_{s-q}`` (leading weight 1).
``IID``
    ``nu_s = eps_s``.

with ``eps_s ~ N(0, innovation_sd**2)``. Every path starts in the stationary
law: AR1 draws ``nu_1 ~ N(0, sd^2 / (1 - theta^2))``, MA draws ``q``
pre-sample innovations, IID needs nothing. ``burn_in`` is honoured (extra
steps are generated and discarded) but is never required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ParameterDomainError
from .seeding import make_rng

FAMILIES = ("AR1", "MA", "IID")

# autocovariances below this are treated as zero when truncating the eta sum
ACOV_TAIL_TOL = 1e-14
ACOV_TAIL_CAP = 10**6


@dataclass(frozen=True)
class ProcessSpec:
    """Law of the centred shock process plus the level ``mean`` of ``z_s = mean + nu_s``."""

    family: str = "AR1"
    params: tuple[float, ...] = (0.0,)
    innovation_sd: float = 1.0
    mean: float = 0.0

    def __post_init__(self) -> None:
        family = self.family.upper()
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if family not in FAMILIES:
            raise ParameterDomainError(f"unknown process family {self.family!r}")
        if not (self.innovation_sd > 0 and math.isfinite(self.innovation_sd)):
            raise ParameterDomainError(
                f"innovation_sd must be positive and finite, got {self.innovation_sd}"
            )
        if not math.isfinite(self.mean):
            raise ParameterDomainError(f"mean must be finite, got {self.mean}")
        if family == "AR1":
            if len(self.params) != 1:
                raise ParameterDomainError("AR1 takes exactly one parameter (theta)")
            if not abs(self.params[0]) < 1:
                raise ParameterDomainError(
                    f"AR1 requires |theta| < 1 for stationarity, got theta={self.params[0]}"
                )
        elif family == "IID":
            if self.params:
                raise ParameterDomainError("IID takes no parameters")
        elif not all(math.isfinite(p) for p in self.params):
            raise ParameterDomainError("MA weights must be finite")

    @classmethod
    def ar1(cls, theta: float, innovation_sd: float = 1.0, mean: float = 0.0) -> "ProcessSpec":
        return cls("AR1", (theta,), innovation_sd, mean)

    @classmethod
    def ma(cls, weights: Sequence[float], innovation_sd: float = 1.0, mean: float = 0.0) -> "ProcessSpec":
        return cls("MA", tuple(weights), innovation_sd, mean)

    @classmethod
    def iid(cls, innovation_sd: float = 1.0, mean: float = 0.0) -> "ProcessSpec":
        return cls("IID", (), innovation_sd, mean)

    @property
    def theta(self) -> float:
        if self.family != "AR1":
            raise AttributeError(f"{self.family} process has no theta")
        return self.params[0]

    @property
    def ma_coefficients(self) -> np.ndarray:
        """``(1, w_1, ..., w_q)`` for MA, ``(1,)`` for IID."""
        if self.family == "AR1":
            raise AttributeError("AR1 process has no finite MA representation")
        return np.concatenate(([1.0], np.asarray(self.params, dtype=float)))

    @property
    def stationary_variance(self) -> float:
        return autocovariance(self, 0)

    def to_config(self) -> dict[str, str]:
        """Flat string mapping for a config-file section."""
        out = {"family": self.family}
        if self.family == "AR1":
            out["theta"] = repr(self.theta)
        elif self.family == "MA":
            out["ma_weights"] = ",".join(repr(w) for w in self.params)
        out["innovation_sd"] = repr(self.innovation_sd)
        out["mean"] = repr(self.mean)
        return out

    @classmethod
    def from_config(cls, section: Mapping[str, str]) -> "ProcessSpec":
        family = section.get("family", "AR1").strip().upper()
        sd = float(section.get("innovation_sd", "1.0"))
        mean = float(section.get("mean", "0.0"))
        if family == "AR1":
            return cls.ar1(float(section.get("theta", "0.0")), sd, mean)
        if family == "MA":
            raw = section.get("ma_weights", "").strip()
            weights = [float(w) for w in raw.split(",") if w.strip()]
            return cls.ma(weights, sd, mean)
        if family == "IID":
            return cls.iid(sd, mean)
        raise ParameterDomainError(f"unknown process family {family!r}")


@dataclass(frozen=True)
class ShockPath:
    """A realised path ``nu_1, ..., nu_tau`` and what produced it."""

    values: np.ndarray = field(repr=False)
    spec: ProcessSpec
    seed: int
    burn_in: int = 0

    @property
    def tau(self) -> int:
        return len(self.values)

    @property
    def nu1(self) -> float:
        return float(self.values[0])

    def normalized_sum(self) -> float:
        """``Z_tau = tau^{-1/2} * sum(nu_s)``."""
        return float(np.sum(self.values) / math.sqrt(self.tau))


def generate_shocks(
    spec: ProcessSpec,
    tau: int,
    seed: int,
    burn_in: int = 0,
    head: Sequence[float] | None = None,
) -> ShockPath:
    """Draw a stationary path of length ``tau``.

    Parameters
    ----------
    spec : ProcessSpec
    tau : int
        Path length, at least 1.
    seed : int
        Seed of the path's private generator.
    burn_in : int
        Extra steps generated and discarded before the first emitted value.
    head : sequence of float, optional
        Forces ``nu_1, ..., nu_h``; the rest of the path is drawn from the
        conditional law given the head. Supported for AR1 and IID only.

    Returns
    -------
    ShockPath
    """
    if tau < 1:
        raise ParameterDomainError(f"tau must be >= 1, got {tau}")
    if burn_in < 0:
        raise ParameterDomainError(f"burn_in must be >= 0, got {burn_in}")
    rng = make_rng(seed)
    sd = spec.innovation_sd
    fixed = np.asarray([] if head is None else head, dtype=float)
    h = len(fixed)
    if h > tau:
        raise ParameterDomainError(f"head of length {h} exceeds tau={tau}")

    if spec.family == "AR1":
        theta = spec.theta
        if h:
            eps = rng.standard_normal(tau - h) * sd
            tail, _ = lfilter([1.0], [1.0, -theta], eps, zi=[theta * fixed[-1]])
            values = np.concatenate((fixed, tail))
        else:
            first = rng.standard_normal() * sd / math.sqrt(1.0 - theta * theta)
            eps = rng.standard_normal(burn_in + tau - 1) * sd
            rest, _ = lfilter([1.0], [1.0, -theta], eps, zi=[theta * first])
            values = np.concatenate(([first], rest))[burn_in:]
    elif spec.family == "IID":
        values = rng.standard_normal(burn_in + tau)[burn_in:] * sd
        values[:h] = fixed
    else:
        if h:
            raise NotImplementedError("conditioning on a forced head is not available for MA")
        coef = spec.ma_coefficients
        eps = rng.standard_normal(burn_in + tau + len(coef) - 1) * sd
        values = np.convolve(eps, coef, mode="valid")[burn_in:]
    return ShockPath(values=np.ascontiguousarray(values), spec=spec, seed=seed, burn_in=burn_in)


def autocovariance(spec: ProcessSpec, k: int) -> float:
    """Exact ``E[nu_0 nu_k]``."""
    if k < 0:
        raise ParameterDomainError(f"lag must be non-negative, got {k}")
    var_eps = spec.innovation_sd**2
    if spec.family == "AR1":
        theta = spec.theta
        return theta**k * var_eps / (1.0 - theta * theta)
    coef = spec.ma_coefficients
    if k >= len(coef):
        return 0.0
    return float(var_eps * np.dot(coef[: len(coef) - k], coef[k:]))


def long_run_variance_true(spec: ProcessSpec) -> float:
    """Closed-form ``eta = E[nu_0^2] + 2 sum_{s>=1} E[nu_0 nu_s]``."""
    var_eps = spec.innovation_sd**2
    if spec.family == "AR1":
        return var_eps / (1.0 - spec.theta) ** 2
    return float(var_eps * np.sum(spec.ma_coefficients) ** 2)


def truncated_autocovariance_sum(
    spec: ProcessSpec, tol: float = ACOV_TAIL_TOL, cap: int = ACOV_TAIL_CAP
) -> float:
    """``sum_{|k| <= K} autocovariance(k)`` with ``K`` the first lag whose value is below ``tol``.

    Independent of :func:`long_run_variance_true`; used to check it.
    """
    total = autocovariance(spec, 0)
    for k in range(1, cap + 1):
        g = autocovariance(spec, k)
        if abs(g) < tol:
            break
        total += 2.0 * g
    return total


def mixingale_coefficient_true(spec: ProcessSpec, k: int) -> float:
    """``gamma_k = || E[nu_k | M_0] ||_1`` for Gaussian innovations.

    ``E[nu_k | M_0]`` is Gaussian, so its L1 norm is ``sqrt(2 v / pi)`` with
    ``v`` its variance: ``theta^{2k} Var(nu_0)`` for AR1 and
    ``sd^2 * sum_{j>=k} c_j^2`` for MA/IID.
    """
    if k < 0:
        raise ParameterDomainError(f"lag must be non-negative, got {k}")
    if spec.family == "AR1":
        return abs(spec.theta) ** k * math.sqrt(2.0 * spec.stationary_variance / math.pi)
    coef = spec.ma_coefficients
    if spec.family not in ("MA", "IID"):
        raise NotImplementedError(f"no analytic mixingale coefficient for {spec.family}")
    v = spec.innovation_sd**2 * float(np.sum(coef[k:] ** 2))
    return math.sqrt(2.0 * v / math.pi)


@dataclass(frozen=True)
class Condition2Report:
    """Which of the three moment/decay trade-off clauses hold for a process.

    ``decay_rate`` is the ``a`` in ``gamma_k = O(a^k)``; ``moment_order`` is the
    ``r > 2`` used to evaluate the series in clauses (i) and (ii).
    """

    clause_i: bool
    clause_ii: bool
    clause_iii: bool
    decay_rate: float
    moment_order: float
    series_i: float
    series_ii: float

    @property
    def satisfied(self) -> bool:
        return self.clause_i or self.clause_ii or self.clause_iii


def _gamma_sequence(spec: ProcessSpec, cutoff: float = 1e-300, cap: int = ACOV_TAIL_CAP) -> np.ndarray:
    if spec.family == "AR1":
        g0 = mixingale_coefficient_true(spec, 0)
        a = abs(spec.theta)
        if a == 0.0:
            return np.array([g0])
        n_terms = min(cap, int(math.log(cutoff / g0) / math.log(a)) + 2)
        return g0 * a ** np.arange(n_terms)
    q = len(spec.ma_coefficients)
    return np.array([mixingale_coefficient_true(spec, k) for k in range(q)])


def check_condition2(spec: ProcessSpec, moment_order: float = 4.0) -> Condition2Report:
    """Evaluate the three alternative sufficient conditions for the stable CLT.

    Gaussian innovations give finite moments of every order (so the tail
    bound of clause (i), the ``L_r`` bound of clause (ii) and the
    ``x^2 log(1+x)`` moment of clause (iii) all hold); what remains is
    the decay of ``gamma_k``, which is geometric for AR1 with ``a = |theta|``
    and eventually zero for MA/IID.
    """
    if moment_order <= 2:
        raise ParameterDomainError("moment_order must exceed 2")
    if spec.family not in FAMILIES:
        raise NotImplementedError(f"no analytic mixingale coefficients for {spec.family}")
    r = moment_order
    gammas = _gamma_sequence(spec)
    k = np.arange(len(gammas), dtype=float)
    series_i = float(np.sum((gammas / 2.0) ** ((r - 2.0) / (r - 1.0))))
    series_ii = float(np.sum(k ** (1.0 / (r - 2.0)) * gammas))
    decay = abs(spec.theta) if spec.family == "AR1" else 0.0
    geometric = decay < 1.0
    return Condition2Report(
        clause_i=geometric and math.isfinite(series_i),
        clause_ii=geometric and math.isfinite(series_ii),
        clause_iii=geometric,
        decay_rate=decay,
        moment_order=r,
        series_i=series_i,
        series_ii=series_ii,
    )
