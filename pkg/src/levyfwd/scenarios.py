"""Reference parameter sets and a synthetic 2016-style curve set.

REF_A and REF_B are calibrated parameter sets for the two spread
variants, used as fixed model inputs.  The curves are synthetic: the
original market quotes are not public, so a curve with negative short OIS
rates and a positive six-month basis stands in for them.
"""

import numpy as np

from .levy_driver import NigParams
from .model_core import VolStructure, assemble_model
from .tenor_curves import CurveSet, TenorGrid

REF_A = dict(
    alpha=53.66666, beta=-47.62499, delta_nig=0.105083,
    a=-3.498342, a_d=-0.009348, a_l=0.000548, variant="A",
    em_bound_M=5.0, em_eps=0.1,
)
REF_B = dict(
    alpha=2.35391, beta=0.87951, delta_nig=14.6241,
    a=-6.003533, a_d=0.002264, a_l_bar=0.001549, variant="B",
    em_bound_M=1.3, em_eps=0.1,
)

# acceptance grid: 6m fine tenor up to three years
DELTA = 0.5
N_PERIODS = 6
MATURITIES = (0.5, 1.5, 2.5)
STRIKES = (-0.005, -0.0025, 0.0, 0.0025, 0.005)


def ois_zero_rate(T):
    """Continuously compounded OIS zero rate, negative at the short end."""
    return -0.0035 + 0.0012 * T


def basis(T):
    """Six-month FRA over OIS-implied forward (simple, annualised)."""
    return 0.0030 + 0.0002 * T


def ois_discount(T):
    return float(np.exp(-ois_zero_rate(T) * T))


def synthetic_grid(delta=DELTA, n=N_PERIODS, tenors=None):
    tenors = {"6m": 0.5} if tenors is None else tenors
    return TenorGrid.equidistant(delta, n, tenors)


def synthetic_curves(grid, spread=basis):
    """Discount factors from :func:`ois_zero_rate` and FRAs at OIS forward + ``spread``."""

    def fra(Ta, Tb):
        ois_fwd = (ois_discount(Ta) / ois_discount(Tb) - 1.0) / (Tb - Ta)
        return ois_fwd + spread(Ta)

    return CurveSet.from_functions(grid, ois_discount, {lab: fra for lab in grid.sub_grids})


def split_params(spec):
    """Split a flat parameter dict into ``(NigParams, VolStructure)``."""
    p = NigParams(
        spec["alpha"], spec["beta"], spec["delta_nig"],
        em_bound_M=spec.get("em_bound_M"), em_eps=spec.get("em_eps", 0.05),
    )
    vol = VolStructure(
        spec["a"], spec["a_d"], spec.get("a_l", 0.0), spec.get("a_l_bar", 0.0),
        spec.get("variant", "A"),
    )
    return p, vol


def reference_model(spec, grid=None, curves=None, label="6m", **kw):
    grid = grid or synthetic_grid()
    curves = curves or synthetic_curves(grid)
    p, vol = split_params(spec)
    return assemble_model(p, vol, grid, curves, label, **kw)
