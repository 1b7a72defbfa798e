"""The ten primary acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) before
asserting.  Monte Carlo seeds are fixed, so the outcomes are reproducible.
"""

import time

import numpy as np
import pytest

from levyfwd import calibration as cal
from levyfwd import fourier_pricing as fp
from levyfwd import levy_driver as ld
from levyfwd import market_quotes as mq
from levyfwd import mc_oracle as mo
from levyfwd import model_core as mc
from levyfwd import scenarios as sc
from levyfwd.tenor_curves import initial_spread

import oracles

PATHS = 1_000_000
STEPS = 250
TS, KS = list(sc.MATURITIES), list(sc.STRIKES)


@pytest.fixture(scope="module", params=["A", "B"])
def variant_runs(request, model_a, model_b):
    m = model_a if request.param == "A" else model_b
    four = np.array([fp.price_maturity(T, KS, m).prices for T in TS])
    strong = mo.mc_price_grid(TS, KS, m, mo.McConfig(PATHS, STEPS, seed=1), "strong")
    weak = mo.mc_price_grid(TS, KS, m, mo.McConfig(PATHS, STEPS, seed=2), "weak")
    return request.param, four, strong, weak


def test_fourier_vs_strong_mc(variant_runs, acceptance):
    v, four, (mean, se), _ = variant_runs
    z = (mean - four) / se
    ok = bool(np.all(np.abs(z) <= 3.0))
    acceptance(1, "Fourier vs strong MC (%s)" % v, ok, "max |z| = %.2f over 3x5 grid" % np.max(np.abs(z)))
    assert ok


def test_weak_vs_strong_mc(variant_runs, acceptance):
    v, _, (ms, ss), (mw, sw) = variant_runs
    z = (ms - mw) / np.hypot(ss, sw)
    ok = bool(np.all(np.abs(z) <= 3.0))
    acceptance(2, "weak vs strong MC (%s)" % v, ok, "max |z| = %.2f" % np.max(np.abs(z)))
    assert ok


MUTATION_SPEC = dict(alpha=50.0, beta=-45.0, delta_nig=5.0, a=0.0, a_d=0.2, a_l=0.01,
                     variant="A", em_bound_M=4.0, em_eps=0.1)


def test_martingale_suite_and_mutation(model_a, model_b, acceptance):
    worst = {}
    for name, m in (("A", model_a), ("B", model_b)):
        rows = mo.martingale_report(m, mo.McConfig(PATHS, STEPS, seed=3))
        worst[name] = max(abs(r.z_score) for r in rows)
    # the reference parameters are too close to Gaussian for a 1% drift error
    # to clear four standard errors; this skewed instance makes it visible
    base = sc.reference_model(MUTATION_SPEC)
    cfg = mo.McConfig(4 * PATHS, 50, seed=5)
    clean = max(abs(r.z_score) for r in mo.martingale_report(base, cfg))
    mutated = max(abs(r.z_score) for r in mo.martingale_report(mc.with_drift_scale(base, 1.01), cfg))
    ok = max(worst.values()) <= 4.0 and clean <= 4.0 and mutated > 4.0
    acceptance(3, "martingale suite", ok,
               "max |z| A %.2f, B %.2f, mutation base %.2f, mutated %.2f"
               % (worst["A"], worst["B"], clean, mutated))
    assert ok


def test_analytic_identities(model_a, model_b, rng, acceptance):
    worst_psi = worst_w = worst_fd = worst_add = 0.0
    drivers = [model_a.p, model_b.p]
    for i in range(20):
        p = drivers[i % 2]
        lo, hi = p.strip.lower, p.strip.upper
        h = rng.uniform(0.5 * lo, 0.5 * hi)
        u = rng.uniform(0.5 * lo - h, 0.5 * hi - h)
        got = ld.tilted_exponent(u, h, p)
        ref = oracles.psi_by_quadrature(u, h, p)
        worst_psi = max(worst_psi, abs(got / ref - 1))
    for i in range(20):
        m = (model_a, model_b)[i % 2]
        d = m.grid.dates
        a, b = sorted(rng.choice(np.arange(1, len(d)), 2, replace=False))
        T, S = d[a], d[b]
        s = float(rng.uniform(0.0, T))
        lam_sum = float(m.vol.lam(s)) * m.exponent_sum(T, S)
        got = mc.w_term(s, T, S, m)
        ref = oracles.w_by_quadrature(lam_sum, mc.tilt_exponent_h(s, T, m), m.p)
        worst_w = max(worst_w, abs(got / ref - 1))
    for m in (model_a, model_b):
        d = m.grid.dates
        s = np.linspace(0.0, d[1], 9)
        chain = [d[1], d[2], d[4], d[6]]
        parts = sum(m.w(s, x, y) for x, y in zip(chain, chain[1:]))
        worst_add = max(worst_add, np.max(np.abs(m.w(s, chain[0], chain[-1]) - parts)))
        for i in range(1, len(d)):
            for k in range(i, len(d)):
                lhs = m.h(s, d[i]) - m.vol.lam(s) * m.exponent_sum(d[i], d[k])
                worst_add = max(worst_add, np.max(np.abs(lhs - m.h(s, d[k]))))
        for z in np.linspace(0.5 * m.p.strip.lower, 0.5 * m.p.strip.upper, 15):
            e = 1e-5
            fd = (ld.cumulant(z + e, m.p).real - ld.cumulant(z - e, m.p).real) / (2 * e)
            worst_fd = max(worst_fd, abs(ld.cumulant_deriv(z, m.p).real - fd))
    ok = worst_psi < 1e-6 and worst_w < 1e-6 and worst_add <= 1e-14 and worst_fd < 1e-8
    acceptance(4, "analytic identities", ok,
               "psi rel %.1e, w rel %.1e, additivity %.1e, theta' fd %.1e"
               % (worst_psi, worst_w, worst_add, worst_fd))
    assert ok


def test_characteristic_function(model_a, acceptance):
    T = 2.5
    X = np.concatenate([x[:, 0] for x, _ in ld.simulate_weighted_integral(
        model_a.p, model_a.vol.a, [T], PATHS, 7, STEPS)])
    worst = 0.0
    for u in (1.0, 5.0, 10.0):
        e = np.exp(1j * u * X)
        ref = ld.phi_XT(u, T, model_a.vol.a, model_a.p)
        n = X.size
        z_re = (e.real.mean() - ref.real) / (e.real.std(ddof=1) / np.sqrt(n))
        z_im = (e.imag.mean() - ref.imag) / (e.imag.std(ddof=1) / np.sqrt(n))
        worst = max(worst, abs(z_re), abs(z_im))
    ok = worst <= 3.0
    acceptance(5, "characteristic function", ok, "max |z| = %.2f at u in {1, 5, 10}" % worst)
    assert ok


def test_degenerate_exactness(zero_a, zero_b, model_a, model_b, acceptance):
    worst_zero = 0.0
    for m in (zero_a, zero_b):
        for T in TS:
            for K in KS:
                spec = fp.CapletSpec.for_model(m, T, K)
                T_k = spec.T_k
                intrinsic = 0.5 * m.curves.discount(T_k) * max(
                    m.curves.fra_rate("6m", T, T_k) - K, 0.0)
                worst_zero = max(worst_zero, abs(fp.price_caplet(spec, m) - intrinsic))
    worst_lim = worst_mc = 0.0
    k_tilde = 1e-8
    K = (k_tilde - 1.0) / 0.5
    for m in (model_a, model_b):
        T = 1.5
        spec = fp.CapletSpec.for_model(m, T, K)
        B = m.curves.discount(spec.T_k)
        limit = B * (1.0 + 0.5 * m.curves.fra_rate("6m", T, spec.T_k))
        price = fp.price_caplet(spec, m)
        worst_lim = max(worst_lim, abs(price + B * k_tilde - limit) / (10 * fp.DEFAULT_TOL))
        est = mo.mc_price_strong(spec, m, mo.McConfig(200_000, STEPS, seed=9))
        worst_mc = max(worst_mc, abs(est.z_score(limit - B * k_tilde)))
    ok = worst_zero <= 1e-10 and worst_lim <= 1.0 and worst_mc <= 3.0
    acceptance(6, "degenerate exactness", ok,
               "zero-vol err %.1e, small-strike err %.2f x 10 tol, MC |z| %.2f"
               % (worst_zero, worst_lim, worst_mc))
    assert ok


def test_variant_b_floor(model_b, acceptance):
    worst = np.inf
    for k, (T, T_k) in enumerate(model_b.grid.periods("6m"), start=1):
        if T == 0:
            continue
        assert initial_spread(model_b.curves, "6m", k) > 1.0
        st = mc.simulate_period_state(T, T_k, model_b, PATHS, 11, STEPS)
        worst = min(worst, float(np.min(st["S_l"])))
    ok = worst > 1.0
    acceptance(7, "variant (b) spread floor", ok, "min simulated S = 1 + %.3e" % (worst - 1.0))
    assert ok


def test_damping_robustness(model_a, model_b, acceptance):
    worst = 0.0
    mono = conv = True
    ladder = np.linspace(-0.01, 0.01, 9)
    for m in (model_a, model_b):
        for T in TS:
            base = fp.price_maturity(T, KS, m)
            pay = fp.payoff_for(fp.CapletSpec.for_model(m, T, 0.0), m)
            for f in (0.9, 1.1):
                R = base.R * f
                if not pay.p_max < R < m.R_max:
                    continue
                alt = fp.price_maturity(T, KS, m, fp.DampingConfig(R=R))
                worst = max(worst, np.max(np.abs(alt.prices - base.prices)) / (10 * fp.DEFAULT_TOL))
            p = fp.price_maturity(T, ladder, m).prices
            mono &= bool(np.all(np.diff(p) <= 0))
            conv &= bool(np.all(p[:-2] - 2 * p[1:-1] + p[2:] >= -2 * fp.DEFAULT_TOL))
    ok = worst <= 1.0 and mono and conv
    acceptance(8, "damping robustness", ok,
               "R +-10%% change %.2f x 10 tol, monotone %s, convex %s" % (worst, mono, conv))
    assert ok


def calibration_problem(spec, grid, curves, seed, restarts, max_evals):
    m = sc.reference_model(spec, grid, curves)
    targets = np.array([fp.price_maturity(T, KS, m).prices for T in TS])
    start = cal.perturbed_start(spec, 0.2)
    return cal.CalibrationProblem(TS, KS, targets, grid, curves, start, spec["variant"],
                                  restarts=restarts, max_evals=max_evals, seed=seed)


def test_self_calibration_round_trip(grid, curves, acceptance):
    t0 = time.time()
    rms = {}
    for name, spec in (("A", sc.REF_A), ("B", sc.REF_B)):
        res = cal.calibrate(calibration_problem(spec, grid, curves, 2016, 4, 4000))
        rms[name] = res.rms_vol_bps
    elapsed = time.time() - t0
    r1 = cal.calibrate(calibration_problem(sc.REF_B, grid, curves, 5, 2, 200))
    r2 = cal.calibrate(calibration_problem(sc.REF_B, grid, curves, 5, 2, 200))
    same = r1.params == r2.params and r1.objective == r2.objective
    ok = max(rms.values()) <= 1.0 and same and elapsed <= 1800
    acceptance(9, "self-calibration", ok,
               "rms A %.3f bp, B %.3f bp, %.0f s, deterministic %s"
               % (rms["A"], rms["B"], elapsed, same))
    assert ok


def test_bachelier_layer(curves, rng, acceptance):
    worst_rt = 0.0
    for _ in range(200):
        F = rng.uniform(-0.01, 0.02)
        K = F + rng.uniform(-0.01, 0.01)
        T = rng.uniform(0.25, 10.0)
        s = rng.uniform(0.001, 0.02)
        p = mq.bachelier_caplet_price(F, K, T, s, 0.97, 0.5)
        if p - 0.5 * 0.97 * max(F - K, 0.0) < 1e-14:
            continue
        worst_rt = max(worst_rt, abs(mq.bachelier_implied_vol(p, F, K, T, 0.97, 0.5) - s))
    vols = {1.0: 40.0, 2.0: 55.0, 3.0: 48.0}
    worst_add = 0.0
    for K in KS:
        caplets = mq.strip_caplets([mq.CapQuote(T, K, v) for T, v in vols.items()], curves)
        for T, v in vols.items():
            total = sum(c.price for c in caplets if c.pay_date <= T + 1e-12)
            worst_add = max(worst_add, abs(total - mq.cap_price(curves, "6m", T, K, v * mq.BP)))
    truth = {0.5: 52.0, 1.0: 47.0, 1.5: 47.0, 2.0: 61.0, 2.5: 61.0}
    sched = mq.cap_schedule(curves, "6m", 3.0)
    worst_strip = 0.0
    for K in KS:
        quotes = []
        for T in (1.0, 2.0, 3.0):
            sig = [truth[a] * mq.BP for a, b, _, _ in sched if b <= T + 1e-12]
            price = mq.cap_price(curves, "6m", T, K, sig)
            quotes.append(mq.CapQuote(T, K, mq.cap_implied_vol(price, curves, "6m", T, K) / mq.BP))
        for c in mq.strip_caplets(quotes, curves):
            worst_strip = max(worst_strip, abs(c.normal_vol_bps - truth[c.expiry]) * mq.BP)
    ok = worst_rt <= 1e-12 and worst_add <= 1e-10 and worst_strip <= 1e-10
    acceptance(10, "Bachelier layer", ok,
               "round trip %.1e, additivity %.1e, strip round trip %.1e"
               % (worst_rt, worst_add, worst_strip))
    assert ok
