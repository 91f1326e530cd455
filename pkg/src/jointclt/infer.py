"""Plug-in Gaussian inference for the structural parameter and counterfactual effects."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .errors import DegenerateVarianceError, ParameterDomainError
from .estimate import EstimateSet

# Acklam's rational approximation to the standard normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def gaussian_quantile(p: float) -> float:
    """Standard normal quantile.

    Acklam's rational approximation (relative error about 1e-9) followed by
    one Halley step on ``Phi(x) - p`` evaluated with ``math.erfc``, which
    brings the absolute error to around machine precision.
    """
    if not 0.0 < p < 1.0:
        raise ParameterDomainError(f"quantile level must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact here, and the lower tail keeps full relative precision
        return -gaussian_quantile(1.0 - p)
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def limit_variance(nu1: float, sigma_u2: float, pi1: float, kappa: float, eta: float) -> float:
    """Conditional variance of the mixed-Gaussian limit of ``sqrt(n)(beta_hat - beta)``.

    ``4 ((1 + nu1^2)^2 sigma_u2 + kappa eta pi1^2 nu1^2)``
    """
    if sigma_u2 < 0 or eta < 0:
        raise ParameterDomainError("sigma_u2 and eta must be non-negative")
    if not kappa > 0:
        raise ParameterDomainError(f"kappa must be positive, got {kappa}")
    a = 1.0 + nu1 * nu1
    return 4.0 * (a * a * sigma_u2 + kappa * eta * pi1 * pi1 * nu1 * nu1)


@dataclass(frozen=True)
class InferenceResult:
    estimate: float
    statistic: float
    se: float
    ci_low: float
    ci_high: float
    alpha: float
    reject: bool
    beta0: float

    def to_record(self) -> dict[str, float | bool]:
        return asdict(self)

    def summary(self, label: str = "beta") -> str:
        decision = "reject" if self.reject else "do not reject"
        level = 100.0 * (1.0 - self.alpha)
        return (
            f"{label}_hat={self.estimate:.6g} se={self.se:.6g} "
            f"{level:g}% CI=[{self.ci_low:.6g}, {self.ci_high:.6g}] "
            f"stat={self.statistic:.6g} H0: {label}={self.beta0:.6g} -> {decision} at alpha={self.alpha:g}"
        )


def wald(
    est: EstimateSet,
    eta_hat: float,
    beta0: float,
    alpha: float = 0.05,
    kappa_mode: str = "realized",
) -> InferenceResult:
    """Two-sided t-ratio test of ``beta = beta0`` and the matching confidence interval.

    ``kappa_mode="realized"`` plugs ``n / tau`` into the variance,
    ``"declared"`` uses ``est.kappa``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterDomainError(f"alpha must lie in (0, 1], got {alpha}")
    if kappa_mode == "realized":
        kappa = est.realized_ratio
    elif kappa_mode == "declared":
        kappa = est.kappa
    else:
        raise ParameterDomainError(f"kappa_mode must be 'realized' or 'declared', got {kappa_mode!r}")
    v = limit_variance(est.nu1_hat, est.sigma_u2_hat, est.pi1_hat, kappa, eta_hat)
    if not v > 0:
        raise DegenerateVarianceError("estimated limit variance is zero")
    rn = math.sqrt(est.n)
    scale = math.sqrt(v)
    stat = rn * (est.beta_hat - beta0) / scale
    c = gaussian_quantile(1.0 - alpha / 2.0)
    se = scale / rn
    return InferenceResult(
        estimate=est.beta_hat,
        statistic=stat,
        se=se,
        ci_low=est.beta_hat - c * se,
        ci_high=est.beta_hat + c * se,
        alpha=alpha,
        reject=abs(stat) > c,
        beta0=beta0,
    )


def counterfactual_inference(res: InferenceResult, nu: float) -> InferenceResult:
    """Rescale inference on ``beta`` to inference on ``pi(nu) = beta / (1 + nu^2)``.

    The null value is rescaled with everything else, so the statistic and the
    decision carry over unchanged.
    """
    f = 1.0 + nu * nu
    return replace(
        res,
        estimate=res.estimate / f,
        se=res.se / f,
        ci_low=res.ci_low / f,
        ci_high=res.ci_high / f,
        beta0=res.beta0 / f,
    )
