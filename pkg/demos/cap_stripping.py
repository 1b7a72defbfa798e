"""Strip caplet vols from flat cap vols and check additivity.

Run: python demos/cap_stripping.py
"""

from levyfwd import market_quotes as mq
from levyfwd import scenarios as sc


def main():
    grid = sc.synthetic_grid()
    curves = sc.synthetic_curves(grid)
    quotes = [mq.CapQuote(1.0, 0.0, 42.0), mq.CapQuote(2.0, 0.0, 50.0), mq.CapQuote(3.0, 0.0, 47.0)]
    caplets = mq.strip_caplets(quotes, curves)
    print("expiry  pay    price(bp)  caplet vol(bp)")
    for c in caplets:
        print("%5.1f  %4.1f  %10.4f  %13.4f" % (c.expiry, c.pay_date, c.price / mq.BP, c.normal_vol_bps))
    for q in quotes:
        cap = mq.cap_price(curves, "6m", q.maturity, q.strike, q.sigma)
        total = sum(c.price for c in caplets if c.pay_date <= q.maturity + 1e-12)
        print("cap to %.0fy: quoted %.10f, sum of caplets %.10f" % (q.maturity, cap, total))


if __name__ == "__main__":
    main()
