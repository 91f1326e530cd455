import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jointclt.errors import ParameterDomainError
from jointclt.lrv import LrvConfig, auto_bandwidth, hac, kernel_weight, sample_autocovariances
from jointclt.process import ProcessSpec, generate_shocks, long_run_variance_true

ALT = np.array([1.0, -1.0, 1.0, -1.0])


def test_hand_checks():
    assert hac(ALT, LrvConfig("bartlett", 0, demean=False)).value == 1.0
    # g_1 = -3/4, weight 1/2
    assert hac(ALT, LrvConfig("bartlett", 1, demean=False)).value == 0.25


@pytest.mark.parametrize("tau, b", [(100, 4), (2, 1), (100_000, 18)])
def test_auto_bandwidth(tau, b):
    assert auto_bandwidth(tau) == b


def test_errors_and_clipping():
    with pytest.raises(ParameterDomainError):
        hac(np.array([1.0]))
    est = hac(ALT, LrvConfig("bartlett", 10))
    assert est.clipped and est.bandwidth_used == 3


def test_autocovariances_direct_vs_fft(rng):
    x = rng.standard_normal(1000)
    direct = np.array([np.dot(x[j:], x[: 1000 - j]) / 1000 for j in range(300)])
    np.testing.assert_allclose(sample_autocovariances(x, 299), direct, atol=1e-12)


def test_kernel_weights():
    x = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5])
    np.testing.assert_allclose(kernel_weight("bartlett", x), [1, 0.75, 0.5, 0.25, 0, 0])
    np.testing.assert_allclose(kernel_weight("parzen", x), [1, 1 - 6 / 16 + 6 / 64, 0.25, 2 / 64, 0, 0])
    qs = kernel_weight("qs", np.array([0.0, 1e-4, 1.0]))
    assert qs[0] == 1.0 and qs[1] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kernel", ["bartlett", "parzen", "qs"])
def test_fixed_zero_is_sample_variance(kernel, rng):
    x = rng.standard_normal(257) + 3.0
    assert hac(x, LrvConfig(kernel, 0)).value == np.var(x)


@settings(max_examples=50, deadline=None)
@given(
    x=arrays(np.float64, st.integers(2, 200), elements=st.floats(-100, 100)),
    c=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3),
    kernel=st.sampled_from(["bartlett", "parzen", "qs"]),
)
def test_scale_equivariance_and_shift_invariance(x, c, kernel):
    cfg = LrvConfig(kernel)
    base = hac(x, cfg).value
    scale = max(1.0, float(np.mean(x * x)))
    assert hac(c * x, cfg).value == pytest.approx(c * c * base, rel=1e-9, abs=1e-9 * c * c * scale)
    assert hac(x + c, cfg).value == pytest.approx(base, rel=1e-7, abs=1e-7 * scale)


def test_scale_by_power_of_two_is_exact(rng):
    x = rng.standard_normal(500)
    assert hac(2.0 * x).value == 4.0 * hac(x).value


@settings(max_examples=50, deadline=None)
@given(x=arrays(np.float64, st.integers(2, 300), elements=st.floats(-50, 50)))
def test_psd_kernels_non_negative(x):
    for kernel in ("bartlett", "parzen", "qs"):
        assert hac(x, LrvConfig(kernel)).value >= -1e-9


@pytest.mark.slow
def test_ar1_long_series_auto():
    vals = np.array([hac(generate_shocks(ProcessSpec.ar1(0.5), 100_000, seed=s).values).value for s in range(40)])
    assert 3.6 <= np.median(vals) <= 4.4
    assert np.mean((vals >= 3.6) & (vals <= 4.4)) >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.0, 0.5, -0.5])
def test_consistency_sweep(theta):
    spec = ProcessSpec.ar1(theta)
    eta = long_run_variance_true(spec)
    vals = [hac(generate_shocks(spec, 10_000, seed=1000 + s).values).value for s in range(200)]
    med = float(np.median(vals))
    print(f"theta={theta}: median eta_hat={med:.4f} truth={eta:.4f} rel err={med / eta - 1:+.3%}")
    assert abs(med / eta - 1) <= 0.10
