"""Kernel (HAC) estimation of the long-run variance of a scalar series.

``eta_hat = g_0 + 2 * sum_{j>=1} k(j / (b + 1)) g_j`` where ``g_j`` is the
sample autocovariance with divisor ``tau``. With the ``b + 1`` scaling the
Bartlett weight is ``1 - j / (b + 1)`` and ``b = 0`` uses no lags for every
kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError

KERNELS = ("bartlett", "parzen", "qs")
_KERNEL_ALIASES = {"quadraticspectral": "qs", "quadratic_spectral": "qs"}


@dataclass(frozen=True)
class LrvConfig:
    """``bandwidth`` is a non-negative integer or ``None`` for the automatic rule."""

    kernel: str = "bartlett"
    bandwidth: int | None = None
    demean: bool = True

    def __post_init__(self) -> None:
        k = self.kernel.lower()
        k = _KERNEL_ALIASES.get(k, k)
        if k not in KERNELS:
            raise ParameterDomainError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        object.__setattr__(self, "kernel", k)
        if self.bandwidth is not None and (int(self.bandwidth) != self.bandwidth or self.bandwidth < 0):
            raise ParameterDomainError(f"bandwidth must be a non-negative integer, got {self.bandwidth}")

    def to_config(self) -> dict[str, str]:
        return {
            "kernel": self.kernel,
            "bandwidth": "auto" if self.bandwidth is None else str(self.bandwidth),
            "demean": "true" if self.demean else "false",
        }

    @classmethod
    def from_config(cls, section) -> "LrvConfig":
        bw = section.get("bandwidth", "auto").strip().lower()
        demean = section.get("demean", "true").strip().lower()
        if demean not in ("true", "false", "1", "0", "yes", "no"):
            raise ParameterDomainError(f"demean must be a boolean, got {demean!r}")
        return cls(
            kernel=section.get("kernel", "bartlett").strip(),
            bandwidth=None if bw == "auto" else int(bw),
            demean=demean in ("true", "1", "yes"),
        )


@dataclass(frozen=True)
class LrvEstimate:
    value: float
    kernel: str
    bandwidth_used: int
    tau: int
    clipped: bool = False


def auto_bandwidth(tau: int) -> int:
    """Newey-West fixed rule ``floor(4 (tau / 100)^(2/9))``."""
    if tau < 2:
        raise ParameterDomainError(f"tau must be >= 2, got {tau}")
    return math.floor(4.0 * (tau / 100.0) ** (2.0 / 9.0))


def kernel_weight(kernel: str, x: np.ndarray) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    if kernel == "bartlett":
        return np.clip(1.0 - x, 0.0, None)
    if kernel == "parzen":
        return np.where(x <= 0.5, 1.0 - 6.0 * x**2 + 6.0 * x**3, np.where(x <= 1.0, 2.0 * (1.0 - x) ** 3, 0.0))
    if kernel == "qs":
        a = 6.0 * np.pi * x / 5.0
        with np.errstate(divide="ignore", invalid="ignore"):
            w = 25.0 / (12.0 * np.pi**2 * x**2) * (np.sin(a) / a - np.cos(a))
        return np.where(x == 0.0, 1.0, w)
    raise ParameterDomainError(f"unknown kernel {kernel!r}")


def sample_autocovariances(x: np.ndarray, max_lag: int) -> np.ndarray:
    """``g_j = tau^{-1} sum_{s>j} x_s x_{s-j}`` for ``j = 0..max_lag`` (no demeaning)."""
    tau = len(x)
    out = np.empty(max_lag + 1)
    out[0] = np.mean(x * x)
    if max_lag <= 256:
        for j in range(1, max_lag + 1):
            out[j] = np.dot(x[j:], x[: tau - j]) / tau
    else:
        nfft = 1 << (2 * tau - 1).bit_length()
        f = np.fft.rfft(x, nfft)
        out[1:] = np.fft.irfft(f * np.conj(f), nfft)[1 : max_lag + 1] / tau
    return out


def hac(series: np.ndarray, cfg: LrvConfig = LrvConfig()) -> LrvEstimate:
    """Long-run variance estimate of ``series``.

    Bandwidths of ``tau`` or more are clipped to ``tau - 1`` and flagged. The
    quadratic-spectral kernel has unbounded support and uses every lag.
    """
    x = np.asarray(series, dtype=float)
    tau = len(x)
    if tau < 2:
        raise ParameterDomainError(f"HAC needs at least two observations, got {tau}")
    if cfg.demean:
        x = x - x.mean()
    b = auto_bandwidth(tau) if cfg.bandwidth is None else int(cfg.bandwidth)
    clipped = b > tau - 1
    if clipped:
        b = tau - 1
    if b == 0:
        return LrvEstimate(float(np.mean(x * x)), cfg.kernel, 0, tau, clipped)
    max_lag = tau - 1 if cfg.kernel == "qs" else b
    g = sample_autocovariances(x, max_lag)
    w = kernel_weight(cfg.kernel, np.arange(1, max_lag + 1) / (b + 1.0))
    value = g[0] + 2.0 * float(np.dot(w, g[1:]))
    return LrvEstimate(float(value), cfg.kernel, b, tau, clipped)
