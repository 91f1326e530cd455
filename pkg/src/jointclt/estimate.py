"""Point estimators combining the cross-section and the time series."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateDesignError, ParameterDomainError


@dataclass(frozen=True)
class EstimateSet:
    pi1_hat: float
    phi_hat: float
    beta_hat: float
    nu1_hat: float
    sigma_u2_hat: float
    n: int
    tau: int
    kappa: float

    @property
    def realized_ratio(self) -> float:
        return self.n / self.tau

    def to_record(self) -> dict[str, float | int]:
        return asdict(self)


def estimate_pi1(y_tilde: np.ndarray, d: np.ndarray) -> float:
    """Difference in means between treated and control units.

    Equivalent to ``sum(w_i * y_i)`` with ``w_i = d_i / sum(d) - (1 - d_i) / sum(1 - d)``.
    """
    y = np.asarray(y_tilde, dtype=float)
    treated = np.asarray(d) == 1
    n_treated = int(treated.sum())
    if n_treated == 0 or n_treated == len(y):
        raise DegenerateDesignError(
            f"need at least one treated and one control unit, got {n_treated} of {len(y)} treated"
        )
    return float(y[treated].mean() - y[~treated].mean())


def estimate_phi(z: np.ndarray) -> float:
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ParameterDomainError("cannot average an empty series")
    return float(z.mean())


def estimate_beta(pi1_hat: float, phi_hat: float, z1: float) -> float:
    """``pi1_hat * (1 + (z1 - phi_hat)^2)``."""
    nu1_hat = z1 - phi_hat
    return pi1_hat * (1.0 + nu1_hat * nu1_hat)


def estimate_pi_at(beta_hat: float, nu: float) -> float:
    """Counterfactual effect ``beta_hat / (1 + nu^2)``."""
    return beta_hat / (1.0 + nu * nu)


def estimate_sigma_u2(y_tilde: np.ndarray, d: np.ndarray, pi1_hat: float) -> float:
    """Mean squared residual of ``y_tilde - pi1_hat * d``."""
    y = np.asarray(y_tilde, dtype=float)
    if y.size == 0:
        raise ParameterDomainError("empty cross-section")
    resid = y - pi1_hat * np.asarray(d, dtype=float)
    return float(np.mean(resid * resid))


def estimate_all(
    y_tilde: np.ndarray, d: np.ndarray, z: np.ndarray, kappa: float | None = None
) -> EstimateSet:
    """Run every estimator on one dataset.

    ``kappa`` is the declared limit of ``n / tau``; it defaults to the
    realised ratio.
    """
    n, tau = len(y_tilde), len(z)
    if kappa is None:
        kappa = n / tau
    if not (kappa > 0 and math.isfinite(kappa)):
        raise ParameterDomainError(f"kappa must be positive, got {kappa}")
    pi1 = estimate_pi1(y_tilde, d)
    phi = estimate_phi(z)
    z1 = float(z[0])
    return EstimateSet(
        pi1_hat=pi1,
        phi_hat=phi,
        beta_hat=estimate_beta(pi1, phi, z1),
        nu1_hat=z1 - phi,
        sigma_u2_hat=estimate_sigma_u2(y_tilde, d, pi1),
        n=n,
        tau=tau,
        kappa=float(kappa),
    )


def linearization_residual(
    est: EstimateSet, beta: float, phi: float, nu1: float
) -> float:
    """Remainder of the first-order expansion of ``sqrt(n) (beta_hat - beta)``.

    ``sqrt(n)(beta_hat - beta) - [(1 + nu1^2) sqrt(n)(pi1_hat - pi1)
    - 2 pi1 nu1 sqrt(n/tau) sqrt(tau)(phi_hat - phi)]``
    """
    pi1 = beta / (1.0 + nu1 * nu1)
    rn = math.sqrt(est.n)
    lead = (1.0 + nu1 * nu1) * rn * (est.pi1_hat - pi1) - 2.0 * pi1 * nu1 * math.sqrt(
        est.n / est.tau
    ) * math.sqrt(est.tau) * (est.phi_hat - phi)
    return rn * (est.beta_hat - beta) - lead
