"""Acceptance suite.

Each test checks one criterion at its pinned tolerance and prints a single
``[criterion k] PASS|FAIL ...`` line to the terminal, whether or not output
capture is on. Run it alone with ``pytest tests/test_acceptance.py -v`` or
as a script with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import replace

import numpy as np
import pytest

from jointclt.cli import main as cli_main
from jointclt.dgp import CrossSectionSpec
from jointclt.lrv import LrvConfig, hac
from jointclt.process import ProcessSpec, generate_shocks, long_run_variance_true, truncated_autocovariance_sum
from jointclt.seeding import derive_seed
from jointclt.verify import (
    McConfig,
    characteristic_grid,
    conditional_clt_check,
    discrimination_check,
    expansion_residual_check,
    joint_stable_check,
    ks_critical_value,
    panel_clt_check,
    run_mc,
    stable_ts_check,
    zeta_values,
)

SEED = 20261016
KS_2000 = 1.358 / math.sqrt(2000)
AR_HALF = ProcessSpec.ar1(0.5)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def _report(k: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {k:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return _report


def test_criterion_01_eta_oracle(report):
    errs = {th: abs(long_run_variance_true(ProcessSpec.ar1(th)) - truncated_autocovariance_sum(ProcessSpec.ar1(th)))
            for th in (-0.5, 0.0, 0.5, 0.9)}
    exact = long_run_variance_true(AR_HALF) == 4.0
    ok = max(errs.values()) < 1e-10 and exact
    report(1, ok, f"max |eta - truncated sum| = {max(errs.values()):.2e} (< 1e-10); eta(0.5) == 4.0: {exact}")


def test_criterion_02_hac_consistency(report):
    tau, R = 10_000, 200
    vals = np.array([
        hac(generate_shocks(AR_HALF, tau, derive_seed(SEED, r)).values, LrvConfig()).value for r in range(R)
    ])
    med = float(np.median(vals))
    hand = hac(np.array([1.0, -1.0, 1.0, -1.0]), LrvConfig(bandwidth=1)).value
    ok = 3.6 <= med <= 4.4 and hand == 0.25
    report(2, ok, f"median eta_hat = {med:.4f} (need [3.6, 4.4]); hand check = {hand!r} (need 0.25)")


def _clt_cases():
    return [
        ("PotentialOutcomes nu1=1", CrossSectionSpec(), 1.0, 4.0),
        ("ScaledShock nu1=1", CrossSectionSpec(upsilon="ScaledShock"), 1.0, 1.0),
        ("ScaledShock nu1=2", CrossSectionSpec(upsilon="ScaledShock"), 2.0, 4.0),
    ]


def test_criterion_03_conditional_clt(report):
    parts, ok = [], True
    for label, cs, nu1, sigma2 in _clt_cases():
        rep = conditional_clt_check(cs, nu1, 10_000, 2000, SEED)
        good = rep.sigma2 == sigma2 and abs(rep.variance_ratio - 1.0) <= 0.1 and rep.ks_stat < KS_2000
        ok &= good
        parts.append(f"{label}: ratio {rep.variance_ratio:.4f} KS {rep.ks_stat:.4f}")
    report(3, ok, "; ".join(parts) + f" (ratio within 1 +/- 0.1, KS < {KS_2000:.5f})")


def test_criterion_04_stable_ts_clt(report):
    rep = stable_ts_check(AR_HALF, 10_000, 2000, SEED)
    ok = 3.6 <= rep.sample_variance <= 4.4 and rep.ks_stat < KS_2000
    report(4, ok, f"Var(Z) = {rep.sample_variance:.4f} (need [3.6, 4.4]); KS = {rep.ks_stat:.4f} (< {KS_2000:.5f})")


def test_criterion_05_joint_stable(report):
    cfg = McConfig(replications=5000, n_grid=(2000,), tau_grid=(2000,), proc=AR_HALF,
                   cs=CrossSectionSpec(n=2000), master_seed=SEED, zeta="one")
    rep = run_mc(cfg)
    js = joint_stable_check(cfg, report=rep)
    ok_rows = ~rep.records["degenerate"]
    ind = zeta_values("indicator", rep.records["nu1"][ok_rows])
    emp, tgt = characteristic_grid(rep.records["z_tau"][ok_rows], rep.records["y_n"][ok_rows], ind,
                                   rep.records["sigma2"][ok_rows], rep.eta, rep.cf_grid)
    dev_ind = np.abs(emp - tgt)
    origin_ind = float(dev_ind[rep.cf_grid.index((0.0, 0.0))])
    ok = js.max_deviation < 0.06 and float(dev_ind.max()) < 0.06 and js.origin_deviation == 0.0 and origin_ind == 0.0
    report(5, ok, f"max dev zeta=1 {js.max_deviation:.4f}, zeta=1{{nu1>0}} {dev_ind.max():.4f} (< 0.06); "
                  f"origin dev {js.origin_deviation}, {origin_ind}")


def _mc_2000(upsilon: str) -> McConfig:
    return McConfig(replications=2000, n_grid=(2000,), tau_grid=(2000,), proc=AR_HALF,
                    cs=CrossSectionSpec(n=2000, upsilon=upsilon, beta=1.0), master_seed=SEED)


def test_criterion_06_feasible_inference(report):
    rep = run_mc(_mc_2000("PotentialOutcomes"))
    ok = rep.ks_stat < 0.0304 and 0.93 <= rep.coverage <= 0.97 and rep.excluded_degenerate == 0
    report(6, ok, f"KS = {rep.ks_stat:.4f} (< 0.0304); coverage = {rep.coverage:.4f} (need [0.93, 0.97])")


def test_criterion_07_mixed_gaussian_discrimination(report):
    dis = discrimination_check(_mc_2000("ScaledShock"))
    ok = dis.pooled_rejected and dis.standardized_accepted
    report(7, ok, f"pooled KS = {dis.ks_pooled:.4f} (need > {dis.critical_value:.4f}); "
                  f"studentized KS = {dis.ks_standardized:.4f} (need < {dis.critical_value:.4f})")


def test_criterion_08_expansion_residual(report):
    cfg = McConfig(replications=500, n_grid=(400, 1600, 6400), tau_grid=(400, 1600, 6400), proc=AR_HALF,
                   cs=CrossSectionSpec(), master_seed=SEED)
    rep = expansion_residual_check(cfg)
    meds = ", ".join(f"{m:.4f}" for m in rep.median_abs_residual)
    report(8, rep.strictly_decreasing, f"median |residual| = [{meds}] strictly decreasing: {rep.strictly_decreasing}")


def _tree(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_criterion_09_determinism(report, tmp_path, capsys):
    small = ["--mc-replications", "500", "--mc-n-grid", "500", "--mc-tau-grid", "500"]
    runs = {
        "simulate": ["simulate", "--cross-section-n", "500", "--sample-tau", "400"],
        "oracle": ["oracle"],
        "mc": ["mc", "--profile", "joint-stable", *small, "--workers", "1"],
    }
    identical = {}
    for name, argv in runs.items():
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        cli_main([*argv, "--out", str(a)])
        cli_main([argv[0], "--config", str(a / "config.ini"), "--out", str(b), "--workers", "1"])
        identical[name] = _tree(a) == _tree(b) and len(_tree(a)) > 0
    data = tmp_path / "simulate_a"
    e1, e2 = tmp_path / "est_a", tmp_path / "est_b"
    cli_main(["estimate", str(data), "--beta0", "1", "--out", str(e1)])
    cli_main(["estimate", str(data), "--config", str(e1 / "config.ini"), "--out", str(e2)])
    identical["estimate"] = _tree(e1) == _tree(e2)
    w8 = tmp_path / "mc_w8"
    cli_main(["mc", "--profile", "joint-stable", *small, "--workers", "8", "--out", str(w8)])
    identical["mc workers 1 vs 8"] = _tree(tmp_path / "mc_a") == _tree(w8)
    capsys.readouterr()
    report(9, all(identical.values()), "byte-identical: " + ", ".join(f"{k}={v}" for k, v in identical.items()))


def test_criterion_10_short_panel_reduction(report):
    parts, ok = [], True
    for label, cs, nu1, sigma2 in _clt_cases():
        single = conditional_clt_check(cs, nu1, 10_000, 2000, SEED)
        panel = panel_clt_check(cs, [nu1, 0.5], 10_000, 2000, SEED, q="coord1")
        same = (panel.draws.tobytes() == single.draws.tobytes() and panel.sigma2 == single.sigma2
                and panel.variance_ratio == single.variance_ratio and panel.ks_stat == single.ks_stat)
        ok &= same and abs(panel.variance_ratio - 1.0) <= 0.1 and panel.ks_stat < KS_2000
        parts.append(f"{label}: identical={same}")
    report(10, ok, "; ".join(parts))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
