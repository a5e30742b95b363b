import numpy as np
import pytest

from leohap.kinematics import (
    HapState,
    KinematicsConfig,
    SatelliteConstellation,
    project_acceleration,
    propagate_constellation,
    step_hap,
    window_candidates,
    wrap,
)

CE = 40_030e3


def hap(v=(0.0, 0.0), xy=(0.0, 0.0)):
    return HapState(np.array([*xy, 50e3]), np.array(v), 50e3)


@pytest.mark.parametrize(
    "v, a, v_new, disp",
    [
        ((10, 0), (1, 0), (20, 0), (150, 0)),
        ((0, 0), (0, 0), (0, 0), (0, 0)),
        ((0, 5), (0, -0.5), (0, 0), (0, 25)),
    ],
)
def test_step_hap_examples(v, a, v_new, disp):
    h2 = step_hap(hap(v), np.array(a, float), KinematicsConfig(dt=10.0))
    np.testing.assert_allclose(h2.velocity, v_new, atol=1e-12)
    np.testing.assert_allclose(h2.position[:2], disp, atol=1e-12)
    assert h2.position[2] == 50e3


def test_step_hap_rejects_nan():
    with pytest.raises(ValueError):
        step_hap(hap(), np.array([np.nan, 0.0]), KinematicsConfig())


def test_hap_state_is_read_only():
    h = hap()
    with pytest.raises(ValueError):
        h.position[0] = 1.0


@pytest.mark.parametrize("a, out", [((3, 4), (3, 4)), ((6, 8), (3, 4)), ((0, 0), (0, 0))])
def test_project_acceleration(a, out):
    np.testing.assert_allclose(project_acceleration(np.array(a, float), 5.0), out, rtol=1e-15)


def test_project_never_exceeds_bound():
    rng = np.random.default_rng(1)
    for a in rng.normal(scale=100, size=(2000, 2)):
        assert np.linalg.norm(project_acceleration(a, 5.0)) <= 5.0


def test_wrap_edge_cases():
    assert wrap(-1e-20, 10.0) == 0.0
    assert wrap(10.0, 10.0) == 0.0
    assert wrap(-1.0, 10.0) == 9.0


def one_sat(along):
    return SatelliteConstellation(np.array([along]), 7800.0, CE, 550e3)


def test_propagate_wraps():
    c = propagate_constellation(one_sat(40_029_000.0), 10.0)
    assert c.along[0] == pytest.approx(77_000.0, abs=1e-6)


def test_propagate_additive():
    c0 = SatelliteConstellation.uniform(22, CE, 7800.0, 550e3, phase_offset=1234.5)
    twice = propagate_constellation(propagate_constellation(c0, 5.0), 5.0)
    once = propagate_constellation(c0, 10.0)
    np.testing.assert_allclose(twice.along, once.along, atol=1e-6)


def test_propagate_rejects_zero_dt():
    with pytest.raises(ValueError):
        propagate_constellation(one_sat(0.0), 0.0)


def test_window_default_count_and_range():
    c = SatelliteConstellation.uniform(22, CE, 7800.0, 550e3)
    cands = window_candidates(c, KinematicsConfig(), np.zeros(3))
    assert len(cands) == 2
    for _, p in cands:
        assert 0.0 <= p[1] < 4e6
    assert c.spacing == pytest.approx(1819.5e3, rel=1e-3)


def test_window_degenerate_is_orbital_order():
    c = SatelliteConstellation.uniform(22, CE, 7800.0, 550e3, phase_offset=5e3)
    cfg = KinematicsConfig(window_length=CE, candidate_count=22)
    cands = window_candidates(c, cfg, np.zeros(3))
    assert [i for i, _ in cands] == list(range(22))


def test_window_order_matches_brute_force():
    # satellites at 100 km and 1919.5 km ahead of Src, plus the rest
    c = SatelliteConstellation.uniform(22, CE, 7800.0, 550e3, phase_offset=100e3)
    cands = window_candidates(c, KinematicsConfig(), np.zeros(3))
    np.testing.assert_allclose([p[1] for _, p in cands], [100e3, 100e3 + CE / 22])
    # brute force: forward offsets of all satellites, two smallest, sorted by wrapped coord
    off = np.mod(c.along, CE)
    best = sorted(np.argsort(off, kind="stable")[:2], key=lambda i: (np.mod(off[i], 4e6), i))
    assert [i for i, _ in cands] == best


def test_constellation_rejects_vertical_axis():
    with pytest.raises(ValueError):
        SatelliteConstellation(np.zeros(1), 1.0, CE, 1.0, orbit_axis=np.array([0.0, 0.0, 1.0]))
