import math

import numpy as np
import pytest

from jointclt.dgp import (
    CrossSectionSpec,
    conditional_moments,
    generate_joint,
    generate_panel,
    panel_conditional_variance,
    read_dataset,
    register_upsilon,
    write_dataset,
)
from jointclt.errors import DatasetParseError, ParameterDomainError
from jointclt.process import ProcessSpec, generate_shocks
from jointclt.seeding import STREAM_SHOCK, derive_seed

AR = ProcessSpec.ar1(0.5, mean=1.5)


def test_spec_validation():
    for kwargs in ({"n": 1}, {"u_sd": 0.0}, {"treat_prob": 1.0}, {"upsilon": "Other"}, {"u_law": "cauchy"}):
        with pytest.raises(ParameterDomainError):
            CrossSectionSpec(**kwargs)


def test_forced_zero_shock_gives_full_effect():
    s = generate_joint(AR, CrossSectionSpec(n=50, beta=1.0), 10, seed=1, head=[0.0])
    assert s.nu1 == 0.0 and s.pi1 == 1.0


def test_sample_invariants():
    s = generate_joint(AR, CrossSectionSpec(n=300), 200, seed=5)
    assert np.array_equal(s.z, AR.mean + s.shocks.values)
    assert s.nu1 == s.shocks.values[0]
    assert len(s.y_tilde) == len(s.d) == 300
    assert s.kappa == 300 / 200


def test_reproducible():
    a = generate_joint(AR, CrossSectionSpec(n=100), 50, seed=9)
    b = generate_joint(AR, CrossSectionSpec(n=100), 50, seed=9)
    assert a.z.tobytes() == b.z.tobytes()
    assert a.y_tilde.tobytes() == b.y_tilde.tobytes()
    assert a.d.tobytes() == b.d.tobytes()


def test_shock_path_independent_of_cross_section_streams():
    # changing anything about the cross-section leaves the shocks bit-identical
    a = generate_joint(AR, CrossSectionSpec(n=100), 50, seed=9)
    b = generate_joint(AR, CrossSectionSpec(n=700, u_sd=3.0, u_law="uniform"), 50, seed=9)
    assert a.shocks.values.tobytes() == b.shocks.values.tobytes()
    direct = generate_shocks(AR, 50, derive_seed(9, STREAM_SHOCK))
    assert direct.values.tobytes() == a.shocks.values.tobytes()


def test_difference_in_means_recovers_effect():
    n = 10_000
    s = generate_joint(ProcessSpec.ar1(0.5), CrossSectionSpec(n=n, beta=1.0), n, seed=3)
    diff = s.y_tilde[s.d == 1].mean() - s.y_tilde[s.d == 0].mean()
    assert abs(diff - 1.0 / (1.0 + s.nu1**2)) < 4 * 2.0 / math.sqrt(n)


def test_uniform_u_has_requested_variance():
    s = generate_joint(AR, CrossSectionSpec(n=200_000, u_sd=2.0, u_law="uniform"), 5, seed=2)
    assert np.var(s.u) == pytest.approx(4.0, rel=0.02)
    assert np.max(np.abs(s.u)) <= 2.0 * math.sqrt(3.0)


def test_conditional_moments_examples():
    assert conditional_moments(CrossSectionSpec(), 0.7) == (0.0, 4.0)
    assert conditional_moments(CrossSectionSpec(upsilon="ScaledShock"), 0.0) == (0.0, 0.0)
    assert conditional_moments(CrossSectionSpec(upsilon="ScaledShock", u_sd=2.0), 3.0) == (0.0, 36.0)
    with pytest.raises(NotImplementedError):
        conditional_moments(CrossSectionSpec(upsilon="Custom:x"), 1.0)


def test_scaled_shock_variance_against_sampling():
    rng = np.random.default_rng(0)
    y = 3.0 * rng.normal(0.0, 2.0, 1_000_000)
    assert np.var(y) == pytest.approx(conditional_moments(CrossSectionSpec(upsilon="ScaledShock", u_sd=2.0), 3.0)[1], rel=0.01)


def test_custom_upsilon_hook():
    register_upsilon("cubic", lambda nu, u, d, pi: pi * d + u**3)
    s = generate_joint(AR, CrossSectionSpec(n=20, upsilon="Custom:cubic"), 5, seed=1)
    np.testing.assert_allclose(s.y_tilde, s.pi1 * s.d + s.u**3)
    with pytest.raises(ParameterDomainError):
        generate_joint(AR, CrossSectionSpec(n=20, upsilon="Custom:missing"), 5, seed=1)


def test_mean_zero_influence_scales_like_root_n():
    # |mean| * sqrt(n) stays bounded as n grows
    vals = []
    for n in (1_000, 10_000, 100_000):
        s = generate_joint(AR, CrossSectionSpec(n=n), 10, seed=n)
        infl = 2 * (2 * s.d - 1) * s.u
        vals.append(abs(infl.mean()) * math.sqrt(n))
    assert max(vals) < 4 * 2.0


def test_conditional_independence_given_fixed_shock():
    # nu_1 held fixed: Y_n and Z_tau are uncorrelated across replications
    R = 1000
    y, z = np.empty(R), np.empty(R)
    for r in range(R):
        s = generate_joint(ProcessSpec.ar1(0.5), CrossSectionSpec(n=200), 200, seed=r, head=[0.8])
        y[r] = np.sum(2 * (2 * s.d - 1) * s.u) / math.sqrt(200)
        z[r] = s.shocks.normalized_sum()
    assert abs(np.corrcoef(y, z)[0, 1]) < 4 / math.sqrt(R)


def test_panel_basic():
    cs = CrossSectionSpec(n=100, beta=0.0)
    p = generate_panel(AR, cs, 2, 50, seed=4)
    assert np.all(p.pi == 0.0)
    np.testing.assert_array_equal(p.y_tilde[:, 0], p.u)
    np.testing.assert_array_equal(p.y_tilde[:, 1], p.u)
    with pytest.raises(ParameterDomainError):
        generate_panel(AR, cs, 5, 4, seed=1)
    with pytest.raises(ParameterDomainError):
        generate_panel(AR, cs, 1, 4, seed=1)


def test_panel_equal_shocks_equal_effects():
    p = generate_panel(AR, CrossSectionSpec(n=10), 2, 20, seed=1, head=[0.3, 0.3])
    assert p.pi[0] == p.pi[1]


def test_panel_period_one_reproduces_joint_sample():
    cs = CrossSectionSpec(n=100)
    p = generate_panel(AR, cs, 3, 40, seed=8)
    j = generate_joint(AR, cs, 40, seed=8)
    np.testing.assert_array_equal(p.y_tilde[:, 0], j.y_tilde)
    np.testing.assert_array_equal(p.d[:, 0], j.d)


def test_panel_first_coordinate_variance_matches_single_period():
    cs = CrossSectionSpec(n=200_000)
    p = generate_panel(ProcessSpec.ar1(0.5), cs, 3, 100, seed=2)
    q1 = p.aggregate("coord1")
    assert np.var(q1) == pytest.approx(conditional_moments(cs, p.nu_head[0])[1], rel=0.02)
    assert panel_conditional_variance(cs, p.nu_head, "coord1") == 4.0


def test_panel_mean_aggregation_variance():
    for cs in (CrossSectionSpec(n=200_000), CrossSectionSpec(n=200_000, upsilon="ScaledShock")):
        p = generate_panel(ProcessSpec.ar1(0.5), cs, 3, 100, seed=6, head=[0.5, -1.0, 2.0])
        assert np.mean(p.aggregate("mean") ** 2) == pytest.approx(
            panel_conditional_variance(cs, p.nu_head, "mean"), rel=0.02
        )


def test_dataset_round_trip(tmp_path):
    s = generate_joint(AR, CrossSectionSpec(n=30), 25, seed=1)
    write_dataset(s, tmp_path)
    z, y, d, meta = read_dataset(tmp_path)
    assert z.tobytes() == s.z.tobytes()
    assert y.tobytes() == s.y_tilde.tobytes()
    assert np.array_equal(d, s.d)
    assert float(meta["sample"]["nu1"]) == s.nu1
    raw = (tmp_path / "timeseries.csv").read_bytes()
    assert raw.startswith(b"s,z\n") and b"\r" not in raw


def test_dataset_parse_errors(tmp_path):
    s = generate_joint(AR, CrossSectionSpec(n=5), 5, seed=1)
    write_dataset(s, tmp_path)
    path = tmp_path / "cross_section.csv"
    lines = path.read_text().splitlines()
    lines[3] = "3,notanumber,1"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetParseError, match=r"cross_section.csv:4"):
        read_dataset(tmp_path)
    path.write_text("i,y_tilde\n1,0.5\n")
    with pytest.raises(DatasetParseError, match="missing column"):
        read_dataset(tmp_path)
