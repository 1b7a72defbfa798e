import numpy as np
import pytest
from hypothesis import given, strategies as st

from levyfwd import tenor_curves as tc
from levyfwd.errors import DateNotOnGridError, MalformedFileError, MissingPillarError, NonPositiveDiscountError


def write_files(tmp_path, times, dfs, fra_rows):
    d = tmp_path / "disc.csv"
    f = tmp_path / "fra6m.csv"
    tc.write_discount_csv(d, times, dfs)
    tc.write_fra_csv(f, [(a, b) for a, b, _ in fra_rows], [r for _, _, r in fra_rows])
    return d, f


def test_grid_nesting_and_indices():
    g = tc.TenorGrid.equidistant(0.25, 8, {"3m": 0.25, "6m": 0.5, "1y": 1.0})
    assert g.sub_dates("6m") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert list(g.J(0.5, 1.0)) == [3, 4]
    assert g.sub_delta("1y") == 1.0
    with pytest.raises(DateNotOnGridError):
        g.index(0.3)


def test_grid_rejects_non_multiple_tenor():
    with pytest.raises(ValueError):
        tc.TenorGrid.equidistant(0.25, 8, {"x": 0.3})
    with pytest.raises(ValueError):
        tc.TenorGrid((0.0, 0.5, 1.2))
    with pytest.raises(ValueError):
        tc.TenorGrid((0.0, 0.5, 1.0, 1.5), {"a": (0, 2, 3), "b": (0, 1, 3)})


def test_flat_unit_curve(tmp_path):
    g = tc.TenorGrid.equidistant(0.5, 4, {"6m": 0.5})
    d, f = write_files(tmp_path, g.dates, [1.0] * 5,
                       [(a, b, 0.0) for a, b in g.periods("6m")])
    cs = tc.load_curves(d, [("6m", f)], g)
    for a, b in g.periods("6m"):
        assert tc.initial_forward_price(cs, a, b) == 1.0
        assert tc.additive_spread(cs, "6m", g.periods("6m").index((a, b)) + 1) == 0.0


def test_negative_rate_forward_price(tmp_path):
    g = tc.TenorGrid.equidistant(0.5, 2, {"6m": 0.5})
    d, f = write_files(tmp_path, [0.5, 1.0], [1.001, 1.0015],
                       [(a, b, -0.001) for a, b in g.periods("6m")])
    cs = tc.load_curves(d, [("6m", f)], g)
    assert cs.discount(0.0) == 1.0
    F = tc.initial_forward_price(cs, 0.5, 1.0)
    assert F == pytest.approx(1.001 / 1.0015, rel=1e-15)
    assert F == pytest.approx(0.999501, abs=5e-7)
    assert F < 1.0


def test_missing_pillar(tmp_path):
    g = tc.TenorGrid.equidistant(0.5, 4, {"6m": 0.5})
    rows = [(a, b, 0.001) for a, b in g.periods("6m") if b != 2.0]
    d, f = write_files(tmp_path, g.dates, np.linspace(1, 0.99, 5), rows)
    with pytest.raises(MissingPillarError):
        tc.load_curves(d, [("6m", f)], g)
    d2, _ = write_files(tmp_path, g.dates[:-1], np.linspace(1, 0.99, 4), rows)
    with pytest.raises(MissingPillarError):
        tc.load_curves(d2, [("6m", f)], g)


def test_malformed_and_nonpositive(tmp_path):
    g = tc.TenorGrid.equidistant(0.5, 2, {"6m": 0.5})
    bad = tmp_path / "bad.csv"
    bad.write_text("maturity_years,discount_factor,extra\n0.5,1,1\n")
    with pytest.raises(MalformedFileError):
        tc.load_curves(bad, [], g)
    bad.write_text("maturity_years,discount_factor\n1.0,0.99\n0.5,0.995\n")
    with pytest.raises(MalformedFileError):
        tc.load_curves(bad, [], g)
    bad.write_text("maturity_years,discount_factor\n0.5,0.99\n1.0,-0.1\n")
    with pytest.raises(NonPositiveDiscountError):
        tc.load_curves(bad, [], g)
    with pytest.raises(MalformedFileError):
        tc.load_curves(tmp_path / "nope.csv", [], g)


def test_loglinear_interpolation(curves):
    t0, t1 = 0.5, 1.0
    b0, b1 = curves.discount(t0), curves.discount(t1)
    assert curves.discount(0.75) == pytest.approx(np.sqrt(b0 * b1), rel=1e-14)


def test_forward_price_identities(curves):
    assert tc.initial_forward_price(curves, 1.0, 1.0) == 1.0
    prod = tc.initial_forward_price(curves, 0.5, 1.0) * tc.initial_forward_price(curves, 1.0, 2.5)
    direct = curves.discount(0.5) / curves.discount(2.5)
    assert prod == pytest.approx(direct, rel=1e-14)


def test_flat_two_percent_curve():
    g = tc.TenorGrid.equidistant(0.5, 4)
    cs = tc.CurveSet.from_functions(g, lambda T: np.exp(-0.02 * T))
    assert tc.initial_forward_price(cs, 1.0, 1.5) == pytest.approx(np.exp(0.01), rel=1e-14)


def test_initial_spread_examples():
    g = tc.TenorGrid.equidistant(0.5, 2, {"6m": 0.5})
    ld = lambda a, b: (np.exp(0.001 * (b - a)) - 1) / (b - a)
    cs = tc.CurveSet.from_functions(g, lambda T: np.exp(-0.001 * T), {"6m": ld})
    assert tc.initial_spread(cs, "6m", 2) == pytest.approx(1.0, rel=1e-14)
    # (1 + 0.5 * 0.001) / 0.9995
    g2 = tc.TenorGrid.equidistant(0.5, 1, {"6m": 0.5})
    cs2 = tc.CurveSet(g2, np.array([0.0, 0.5]), np.array([1.0, 1 / 0.9995]), {"6m": {(0, 1): 0.001}})
    assert tc.initial_spread(cs2, "6m", 1) == pytest.approx(1.0005 / 0.9995, rel=1e-14)
    assert tc.initial_spread(cs2, "6m", 1) == pytest.approx(1.001001, abs=5e-7)


def test_fra_round_trip(curves, grid):
    for k, (a, b) in enumerate(grid.periods("6m"), start=1):
        S = tc.initial_spread(curves, "6m", k)
        F = tc.initial_forward_price(curves, a, b)
        rebuilt = (S * F - 1.0) / (b - a)
        assert rebuilt == pytest.approx(curves.fra_rate("6m", a, b), abs=1e-12)
        assert S > 1.0


def test_csv_round_trip(tmp_path, grid, curves):
    d = tmp_path / "d.csv"
    f = tmp_path / "f.csv"
    tc.write_discount_csv(d, grid.dates, [curves.discount(t) for t in grid.dates])
    per = grid.periods("6m")
    tc.write_fra_csv(f, per, [curves.fra_rate("6m", a, b) for a, b in per])
    cs = tc.load_curves(d, [("6m", f)], grid)
    for t in grid.dates:
        assert cs.discount(t) == curves.discount(t)


@given(st.lists(st.floats(0.9, 1.1), min_size=4, max_size=4))
def test_telescoping_property(dfs):
    g = tc.TenorGrid.equidistant(1.0, 4)
    cs = tc.CurveSet(g, np.array(g.dates), np.array([1.0] + dfs), {})
    prod = np.prod([tc.initial_forward_price(cs, i, i + 1.0) for i in range(4)])
    assert prod == pytest.approx(1.0 / dfs[-1], rel=1e-13)
