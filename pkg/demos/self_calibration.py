"""Fit the model back to a surface it generated, starting 20% away.

Run: python demos/self_calibration.py   (a couple of minutes)
"""

import numpy as np

from levyfwd import calibration as cal
from levyfwd import fourier_pricing as fp
from levyfwd import scenarios as sc


def main():
    grid = sc.synthetic_grid()
    curves = sc.synthetic_curves(grid)
    truth = sc.REF_A
    m = sc.reference_model(truth, grid, curves)
    Ts, Ks = list(sc.MATURITIES), list(sc.STRIKES)
    targets = np.array([fp.price_maturity(T, Ks, m).prices for T in Ts])
    start = cal.perturbed_start(truth, 0.2)
    prob = cal.CalibrationProblem(Ts, Ks, targets, grid, curves, start, "A",
                                  restarts=2, max_evals=2000, seed=2016)
    res = cal.calibrate(prob)
    print("objective %.3e after %d evaluations (best restart %d)"
          % (res.objective, res.n_evals, res.restart))
    print("normal-vol RMS error %.4f bp" % res.rms_vol_bps)
    for k in ("alpha", "beta", "delta_nig", "a", "a_d", "a_l"):
        print("  %-9s start %11.6f  fit %11.6f  truth %11.6f" % (k, start[k], res.params[k], truth[k]))


if __name__ == "__main__":
    main()
