"""Caplet price and normal-vol surfaces for both spread variants.

Run: python demos/price_surface.py
"""

from levyfwd import fourier_pricing as fp
from levyfwd import market_quotes as mq
from levyfwd import scenarios as sc


def main():
    grid = sc.synthetic_grid()
    curves = sc.synthetic_curves(grid)
    for name, spec in (("variant A", sc.REF_A), ("variant B", sc.REF_B)):
        m = sc.reference_model(spec, grid, curves)
        print("%s  (R_max = %.3f)" % (name, m.R_max))
        print("  expiry  strike(%)    price(bp)   normal vol(bp)")
        for T in sc.MATURITIES:
            res = fp.price_maturity(T, sc.STRIKES, m)
            F = curves.fra_rate("6m", T, T + 0.5)
            df = curves.discount(T + 0.5)
            for K, p in zip(sc.STRIKES, res.prices):
                vol = mq.bachelier_implied_vol(p, F, K, T, df, 0.5) / mq.BP
                print("  %5.1f  %8.2f  %11.4f  %14.2f" % (T, 100 * K, p / mq.BP, vol))
        print()


if __name__ == "__main__":
    main()
