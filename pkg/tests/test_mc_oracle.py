import csv

import numpy as np
import pytest

from levyfwd import fourier_pricing as fp
from levyfwd import mc_oracle as mo
from levyfwd import scenarios as sc
from levyfwd.tenor_curves import initial_spread
from levyfwd.model_core import simulate_period_state, with_drift_scale

FAST = dict(steps_per_year=50, block_size=50_000)


def test_config_validation():
    with pytest.raises(ValueError):
        mo.McConfig(paths=1)
    with pytest.raises(ValueError):
        mo.McConfig(paths=11, antithetic=True)


def test_zero_vol_prices_are_exact(zero_a, zero_b):
    for m in (zero_a, zero_b):
        Ts, Ks = [0.5, 1.5, 2.5], [-0.005, 0.0, 0.005]
        mean, se = mo.mc_price_grid(Ts, Ks, m, mo.McConfig(paths=1000, **FAST))
        want = [[fp.deterministic_price(fp.CapletSpec.for_model(m, T, K), m) for K in Ks]
                for T in Ts]
        assert np.allclose(mean, want, rtol=0, atol=1e-14)
        assert np.all(se < 1e-14)


def test_zero_vol_report_is_exact(zero_a):
    rows = mo.martingale_report(zero_a, mo.McConfig(paths=1000, **FAST))
    assert len(rows) == 3 * len(zero_a.grid.periods("6m"))
    assert all(r.z_score == 0.0 for r in rows)


def test_weak_estimator_matches_fourier(model_a):
    Ts, Ks = [0.5, 1.5, 2.5], [-0.0025, 0.0, 0.0025]
    mean, se = mo.mc_price_grid(Ts, Ks, model_a, mo.McConfig(paths=200_000, seed=3, **FAST),
                                method="weak")
    four = np.array([fp.price_maturity(T, Ks, model_a).prices for T in Ts])
    assert np.all(np.abs(mean - four) <= 4 * se)


def test_strong_estimator_matches_fourier_variant_b(model_b):
    Ks = [-0.0025, 0.0, 0.0025]
    mean, se = mo.mc_price_grid([1.5], Ks, model_b, mo.McConfig(paths=200_000, seed=4, **FAST))
    four = fp.price_maturity(1.5, Ks, model_b).prices
    assert np.all(np.abs(mean[0] - four) <= 4 * se[0])


def test_standard_error_scaling(model_a):
    spec = fp.CapletSpec.for_model(model_a, 1.5, 0.0)
    e1 = mo.mc_price_weak(spec, model_a, mo.McConfig(paths=100_000, seed=5, **FAST))
    e2 = mo.mc_price_weak(spec, model_a, mo.McConfig(paths=200_000, seed=6, **FAST))
    assert e2.std_error / e1.std_error == pytest.approx(1 / np.sqrt(2), rel=0.15)


def test_reproducible_per_seed(model_a):
    spec = fp.CapletSpec.for_model(model_a, 1.0, 0.0)
    cfg = mo.McConfig(paths=20_000, seed=11, **FAST)
    a = mo.mc_price_strong(spec, model_a, cfg)
    b = mo.mc_price_strong(spec, model_a, cfg)
    c = mo.mc_price_strong(spec, model_a, mo.McConfig(paths=20_000, seed=12, **FAST))
    assert a == b and a.mean != c.mean


def test_antithetic_mean_consistent(model_a):
    spec = fp.CapletSpec.for_model(model_a, 1.5, 0.0)
    plain = mo.mc_price_weak(spec, model_a, mo.McConfig(paths=200_000, seed=7, **FAST))
    anti = mo.mc_price_weak(spec, model_a,
                            mo.McConfig(paths=200_000, seed=8, antithetic=True, **FAST))
    assert abs(plain.mean - anti.mean) <= 4 * np.hypot(plain.std_error, anti.std_error)
    assert anti.paths_used == 200_000


def test_near_degenerate_spread_variant_b(grid):
    # S^l(0) - 1 of order 1e-6: the spread barely moves, so the caplet is the
    # one with the spread frozen at S^l(0)
    curves = sc.synthetic_curves(grid, spread=lambda T: 2e-6)
    b = sc.reference_model(sc.REF_B, grid, curves)
    frozen = sc.reference_model(dict(sc.REF_B, variant="A", a_l=0.0, a_l_bar=0.0), grid, curves)
    Ks = [-0.0025, 0.0, 0.0025]
    pb = fp.price_maturity(1.5, Ks, b).prices
    pf = fp.price_maturity(1.5, Ks, frozen).prices
    # |S - S(0)| = (S(0) - 1)|e - 1| <= (S(0) - 1)(1 + e) and E[Z F e] is one
    # period forward, so the two caplets differ by at most about 2 delta (S(0) - 1)
    s0 = initial_spread(curves, "6m", 4)
    assert np.all(np.abs(pb - pf) <= 2 * 0.5 * (s0 - 1.0) * 1.01)
    mean, se = mo.mc_price_grid([1.5], Ks, b, mo.McConfig(paths=100_000, seed=9, **FAST))
    assert np.all(np.abs(mean[0] - pf) <= 4 * se[0])


def test_variant_b_spread_floor(model_b):
    T = 2.5
    st = simulate_period_state(T, T + 0.5, model_b, 100_000, 13, 50)
    assert np.min(st["S_l"]) > 1.0


def test_report_rows_and_csv(model_a, tmp_path):
    rows = mo.martingale_report(model_a, mo.McConfig(paths=50_000, seed=2, **FAST))
    assert {r.check for r in rows} == {"E[Z]", "E[Z*F]", "E[Z'*S]"}
    assert not mo.any_flagged(rows)
    path = tmp_path / "report.csv"
    mo.write_report_csv(path, rows)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["check", "period", "estimate", "target", "z_score"]
    assert len(got) == len(rows) + 1


def test_mutated_drift_is_flagged():
    # strongly skewed driver and large vols make a 1% drift error visible
    spec = dict(alpha=50.0, beta=-45.0, delta_nig=5.0, a=0.0, a_d=0.2, a_l=0.01,
                variant="A", em_bound_M=4.0, em_eps=0.1)
    m = with_drift_scale(sc.reference_model(spec), 1.01)
    rows = mo.martingale_report(m, mo.McConfig(paths=400_000, seed=1, **FAST))
    assert max(abs(r.z_score) for r in rows) > 2.5
