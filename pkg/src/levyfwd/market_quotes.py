"""Normal (Bachelier) quotes: caplet price <-> implied vol and cap stripping.

Volatilities are absolute rate vols per sqrt(year) inside the library
(0.005 = 50 bp); CSV files carry them in basis points.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .errors import MalformedFileError, NegativeForwardCapSliceError, PriceOutOfBoundsError

BP = 1e-4
QUOTE_HEADER = ["maturity_years", "strike", "normal_vol_bps"]
STRIPPED_HEADER = ["caplet_expiry", "pay_date", "strike", "price", "normal_vol_bps"]


@dataclass(frozen=True)
class CapQuote:
    maturity: float
    strike: float
    normal_vol_bps: float
    label: str = "6m"

    def __post_init__(self):
        if not self.normal_vol_bps > 0:
            raise ValueError("normal vol must be positive")

    @property
    def sigma(self):
        return self.normal_vol_bps * BP


@dataclass(frozen=True)
class VolSurfacePoint:
    expiry: float
    strike: float
    normal_vol_bps: float


@dataclass(frozen=True)
class StrippedCaplet:
    expiry: float
    pay_date: float
    strike: float
    price: float
    normal_vol_bps: float


def bachelier_caplet_price(F, K, T, sigma_n, df=1.0, delta_l=0.5):
    """delta * df * [(F - K) N(d) + sigma sqrt(T) n(d)],  d = (F - K) / (sigma sqrt(T))."""
    F, K, sigma_n = np.asarray(F, float), np.asarray(K, float), np.asarray(sigma_n, float)
    if np.any(sigma_n < 0):
        raise ValueError("normal vol must be nonnegative")
    s = sigma_n * np.sqrt(T)
    m = F - K
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(s > 0, m / np.where(s > 0, s, 1.0), 0.0)
        val = np.where(s > 0, m * norm.cdf(d) + s * norm.pdf(d), np.maximum(m, 0.0))
    return (delta_l * df * val)[()]


def bachelier_vega(F, K, T, sigma_n, df=1.0, delta_l=0.5):
    s = sigma_n * math.sqrt(T)
    return delta_l * df * math.sqrt(T) * norm.pdf((F - K) / s)


def bachelier_implied_vol(price, F, K, T, df=1.0, delta_l=0.5, tol=1e-14, maxiter=200):
    """Normal vol reproducing ``price``; bracketing plus safeguarded Newton."""
    scale = delta_l * df
    intrinsic = scale * max(F - K, 0.0)
    if price < intrinsic or not math.isfinite(price):
        raise PriceOutOfBoundsError(
            "price %r is below the intrinsic value %r" % (price, intrinsic)
        )
    if price == intrinsic:
        return 0.0

    def g(s):
        return float(bachelier_caplet_price(F, K, T, s, df, delta_l)) - price

    lo, hi = 0.0, max(abs(F - K), 1e-4) / math.sqrt(T)
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi
    # ATM-type starting point, clipped into the bracket
    x = min(max(price / scale * math.sqrt(2.0 * math.pi / T), lo), hi)
    if x <= lo:
        x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        gx = g(x)
        if abs(gx) <= tol * (price - intrinsic):
            return x
        if gx < 0:
            lo = x
        else:
            hi = x
        v = bachelier_vega(F, K, T, x, df, delta_l) if x > 0 else 0.0
        xn = x - gx / v if v > 0 else 0.5 * (lo + hi)
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi or abs(xn - x) <= 1e-15 * x:
            return xn
        x = xn
    return x


# -- caps ------------------------------------------------------------------


def cap_schedule(curves, label, maturity):
    """Caplets of a cap to ``maturity``: ``(expiry, pay, forward, df)``.

    The first caplet fixes at the first sub-grid date after spot.
    """
    grid = curves.grid
    out = []
    for Ta, Tb in grid.periods(label):
        if Ta <= 0 or Tb > maturity + 1e-9:
            continue
        out.append((Ta, Tb, curves.fra_rate(label, Ta, Tb), curves.discount(Tb)))
    return out


def cap_price(curves, label, maturity, strike, sigma_n):
    """Cap price with one flat normal vol, or one vol per caplet."""
    sched = cap_schedule(curves, label, maturity)
    sig = np.broadcast_to(np.asarray(sigma_n, float), (len(sched),))
    return float(sum(
        bachelier_caplet_price(F, strike, Ta, s, df, Tb - Ta)
        for (Ta, Tb, F, df), s in zip(sched, sig)
    ))


def cap_implied_vol(price, curves, label, maturity, strike):
    """Flat normal vol reproducing a cap price."""
    sched = cap_schedule(curves, label, maturity)
    intrinsic = sum((Tb - Ta) * df * max(F - strike, 0.0) for Ta, Tb, F, df in sched)
    if price <= intrinsic:
        raise PriceOutOfBoundsError("cap price does not exceed its intrinsic value")
    hi = 0.01
    while cap_price(curves, label, maturity, strike, hi) < price:
        hi *= 2.0
    return brentq(
        lambda s: cap_price(curves, label, maturity, strike, s) - price,
        0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500,
    )


def strip_caplets(quotes, curves, grid=None, label=None):
    """Caplet prices and vols from cap quotes, piecewise-constant per cap slice.

    For each strike, caps are processed by increasing maturity; the caplets
    added by each longer cap share one normal vol chosen so that the cap
    price is matched exactly.
    """
    grid = grid or curves.grid
    out = []
    by_strike = {}
    for q in quotes:
        by_strike.setdefault((q.label if label is None else label, q.strike), []).append(q)
    for (lab, K), qs in sorted(by_strike.items(), key=lambda kv: kv[0][1]):
        mats = [q.maturity for q in qs]
        if any(b <= a for a, b in zip(mats, mats[1:])):
            raise ValueError("cap quotes must be sorted by maturity per strike")
        done = 0.0
        n_done = 0
        for q in qs:
            sched = cap_schedule(curves, lab, q.maturity)
            target = cap_price(curves, lab, q.maturity, K, q.sigma)
            new = sched[n_done:]
            if not new:
                raise ValueError("cap maturity %g adds no caplet" % q.maturity)
            slice_price = target - done
            floor = sum((Tb - Ta) * df * max(F - K, 0.0) for Ta, Tb, F, df in new)
            if slice_price <= floor:
                raise NegativeForwardCapSliceError(
                    "cap slice to %g at strike %g is worth %.3e, not above its intrinsic %.3e"
                    % (q.maturity, K, slice_price, floor)
                )

            def slice_value(s):
                return sum(
                    float(bachelier_caplet_price(F, K, Ta, s, df, Tb - Ta))
                    for Ta, Tb, F, df in new
                )

            hi = q.sigma
            while slice_value(hi) < slice_price:
                hi *= 2.0
            s = brentq(
                lambda x: slice_value(x) - slice_price, 0.0, hi,
                xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500,
            )
            for Ta, Tb, F, df in new:
                p = float(bachelier_caplet_price(F, K, Ta, s, df, Tb - Ta))
                out.append(StrippedCaplet(Ta, Tb, K, p, s / BP))
                done += p
            n_done = len(sched)
    return out


# -- CSV ---------------------------------------------------------------------


def read_cap_quotes(path, label="6m"):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise MalformedFileError("cannot read %s: %s" % (path, exc))
    if not rows or [c.strip() for c in rows[0]] != QUOTE_HEADER:
        raise MalformedFileError("%s: expected header %s" % (path, ",".join(QUOTE_HEADER)))
    out = []
    for line, r in enumerate(rows[1:], start=2):
        try:
            T, K, v = (float(c) for c in r)
        except ValueError:
            raise MalformedFileError("%s:%d: expected three numeric fields" % (path, line))
        out.append(CapQuote(T, K, v, label))
    out.sort(key=lambda q: (q.strike, q.maturity))
    return out


def write_cap_quotes(path, quotes):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(QUOTE_HEADER)
        for q in quotes:
            w.writerow([repr(q.maturity), repr(q.strike), repr(q.normal_vol_bps)])


def write_stripped_csv(path, caplets):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(STRIPPED_HEADER)
        for c in caplets:
            w.writerow([repr(c.expiry), repr(c.pay_date), repr(c.strike), repr(c.price),
                        repr(c.normal_vol_bps)])
