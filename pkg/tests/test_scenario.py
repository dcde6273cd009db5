import numpy as np
import pytest
from hypothesis import given, strategies as st

from tilecast.errors import ConfigError
from tilecast.scenario import (
    CellConfig,
    generate_users,
    large_scale_fading,
    noise_psd_watts,
    normalize_powers,
    psi_array,
    users_by_viewport,
    write_users_csv,
)


def test_psi_reference_value():
    # psi = 10^-3.5 / 40^3.76, computed independently before the build
    assert large_scale_fading(40.0, 10.0**-3.5, 3.76) == pytest.approx(
        2.9940181766155846e-10, rel=1e-12
    )


@given(
    st.floats(min_value=1.0, max_value=500.0),
    st.floats(min_value=1.0, max_value=500.0),
)
def test_psi_strictly_decreasing_in_distance(t1, t2):
    if t1 == t2:
        return
    lo, hi = min(t1, t2), max(t1, t2)
    assert large_scale_fading(lo, 1e-3, 3.76) > large_scale_fading(hi, 1e-3, 3.76)


def test_noise_psd_conversion():
    assert noise_psd_watts(-174.0) == pytest.approx(10.0**-20.4, rel=1e-12)
    assert noise_psd_watts(30.0) == 1.0  # 30 dBm = 1 W


def test_normalize_powers_table1_operating_point():
    q_u, P = normalize_powers(CellConfig())
    assert q_u == pytest.approx(251188643150.95718, rel=1e-9)
    assert P == pytest.approx(25118864315095.72, rel=1e-9)
    assert P / q_u == pytest.approx(100.0, rel=1e-12)  # P_d/P_u exactly


def test_normalize_powers_equal_powers():
    cfg = CellConfig(P_u=10.0, P_d=10.0)
    q_u, P = normalize_powers(cfg)
    assert q_u == P


def test_normalize_powers_bandwidth_linearity():
    base = normalize_powers(CellConfig())
    doubled = normalize_powers(
        CellConfig(W=200e6, C_B=200e3, C_T=1e-3, T=200)
    )
    assert doubled[0] == pytest.approx(base[0] / 2)
    assert doubled[1] == pytest.approx(base[1] / 2)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(r1=45.0, r2=40.0),
        dict(r1=0.0),
        dict(K=0),
        dict(P_u=0.0),
        dict(W=-1.0),
        dict(T=150),  # C_B*C_T = 200
    ],
)
def test_invalid_cell_config_rejected(kwargs):
    with pytest.raises(ConfigError):
        CellConfig(**kwargs)


def test_generate_users_single_viewport():
    users = generate_users(CellConfig(), L=1, seed=0)
    assert {u.viewport for u in users} == {1}


def test_generate_users_every_viewport_nonempty():
    users = generate_users(CellConfig(), L=7, seed=3)
    assert {u.viewport for u in users} == set(range(1, 8))


def test_generate_users_deterministic():
    a = generate_users(CellConfig(), L=4, seed=123)
    b = generate_users(CellConfig(), L=4, seed=123)
    assert a == b
    c = generate_users(CellConfig(), L=4, seed=124)
    assert a != c


def test_generate_users_bounds_and_psi_consistency():
    cfg = CellConfig()
    users = generate_users(cfg, L=5, seed=9)
    lo = cfg.c / cfg.r2**cfg.kappa
    hi = cfg.c / cfg.r1**cfg.kappa
    for u in users:
        assert cfg.r1 <= u.tau <= cfg.r2
        assert lo <= u.psi <= hi
        assert u.psi == pytest.approx(cfg.c / u.tau**cfg.kappa, rel=1e-12)


def test_generate_users_rejects_too_many_viewports():
    with pytest.raises(ConfigError):
        generate_users(CellConfig(K=10), L=11, seed=0)


def test_psi_array_and_viewport_map():
    users = generate_users(CellConfig(K=20), L=3, seed=1)
    psi = psi_array(users)
    assert psi.shape == (20,)
    assert psi[users[7].id] == users[7].psi
    by_vp = users_by_viewport(users)
    assert sorted(by_vp) == [1, 2, 3]
    assert sum(len(v) for v in by_vp.values()) == 20


def test_users_csv_dump(tmp_path):
    users = generate_users(CellConfig(K=5), L=2, seed=4)
    path = tmp_path / "users.csv"
    write_users_csv(users, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "id,tau,psi,viewport"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert float(first[1]) == users[0].tau
