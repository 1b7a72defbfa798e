"""Forward prices, multiplicative spreads and forward-measure changes.

Everything is written relative to the terminal forward measure.  With a scalar
driver and factorised volatilities ``lambda^d(t, T) = lambda_1^d(T) lambda(t)``
the change to the ``T``-forward measure tilts the Levy measure by
``exp(h_T(t) x)`` where

    h_T(t) = lambda(t) * sum_{j in J(T, T*)} lambda_1^d(T_{j-1}).

Drifts and measure-change couplings follow from the driver cumulant:

    b^d(t, T_{j-1}, T_j) = -psi(lambda^d(t, T_{j-1}); h_{T_j}(t))
    w(s, T, S)          = theta'(h_S(s)) - theta'(h_T(s))

with ``psi(u; h) = theta(u + h) - theta(h) - u theta'(h)``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import levy_driver as ld
from .errors import ParameterError, SpreadNotAboveOneError, VariantMismatchError
from .quadrature import integrate_smooth
from .tenor_curves import initial_forward_price, initial_spread

INTEGRAL_RTOL = 1e-10
INTEGRAL_ATOL = 1e-15


def _variant(v):
    v = str(v).upper()
    if v not in ("A", "B"):
        raise ParameterError("variant must be 'a' or 'b', got %r" % v)
    return v


@dataclass(frozen=True)
class VolStructure:
    """Factorised volatilities.

    ``lambda(t) = exp(a t)``, ``lambda_1^d(T) = sqrt(|a_d| T)`` and the spread
    loading ``sqrt(|a_l| T)`` (variant A) or ``sqrt(|a_l_bar| T)`` (variant B).
    """

    a: float
    a_d: float
    a_l: float = 0.0
    a_l_bar: float = 0.0
    variant: str = "A"

    def __post_init__(self):
        object.__setattr__(self, "variant", _variant(self.variant))

    def lam(self, t):
        return np.exp(self.a * np.asarray(t, dtype=float))

    def lam1_d(self, T):
        return np.sqrt(abs(self.a_d) * np.asarray(T, dtype=float))

    def gam1(self, T):
        coef = self.a_l if self.variant == "A" else self.a_l_bar
        return np.sqrt(abs(coef) * np.asarray(T, dtype=float))

    def m_prime(self, T_star):
        """sup of |lambda| over [0, T*]."""
        return max(1.0, float(np.exp(self.a * T_star)))

    @property
    def is_degenerate(self):
        return self.a_d == 0 and self.gam1(1.0) == 0


@dataclass(frozen=True)
class PeriodFactors:
    """Deterministic factors of one caplet period ``(T, T_k)`` (logs).

    Variant A fills ``log_D_hat``, ``log_C_hat``; variant B fills
    ``log_D_d``, ``log_D_l``, ``log_C_d``, ``log_C_l``.  ``log_A`` is shared.
    """

    T: float
    T_k: float
    log_A: float
    log_D_hat: float = None
    log_C_hat: float = None
    log_D_d: float = None
    log_D_l: float = None
    log_C_d: float = None
    log_C_l: float = None
    exp_top: float = 0.0   # Lambda(T, T*) incl. spread loading
    exp_basic: float = 0.0  # sum of lambda_1^d over J(T, T*)
    exp_z: float = 0.0     # sum of lambda_1^d over J(T_k, T*)


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """An assembled model for one risky tenor ``label``.

    Build through :func:`assemble_model`, which validates the admissibility
    conditions and fills the factor cache eagerly.  ``bd_scale`` multiplies
    every basic-curve drift and exists only to build corrupted models for
    negative-control tests.
    """

    p: ld.NigParams
    vol: VolStructure
    grid: object
    curves: object
    label: str
    bd_scale: float = 1.0
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def variant(self):
        return self.vol.variant

    @property
    def delta_l(self):
        return self.grid.sub_delta(self.label)

    @property
    def T_star(self):
        return self.grid.T_star

    @property
    def M_prime(self):
        return self.vol.m_prime(self.T_star)

    @property
    def R_max(self):
        """Largest damping allowed by the exponential-moment bound."""
        mp = self.M_prime
        return 1.0 + (self.p.em_bound_M - mp) / mp

    # -- deterministic building blocks, vectorised over s ------------------

    def lam_d(self, s, T_prev):
        """lambda^d(s, T_prev), zero once s passes T_prev."""
        s = np.asarray(s, dtype=float)
        return np.where(s <= T_prev + 1e-12, self.vol.lam(s) * self.vol.lam1_d(T_prev), 0.0)

    def gam(self, s, T):
        s = np.asarray(s, dtype=float)
        return np.where(s <= T + 1e-12, self.vol.lam(s) * self.vol.gam1(T), 0.0)

    def h(self, s, T):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        d = self.grid.dates
        for j in self.grid.J(T, self.T_star):
            out = out + self.lam_d(s, d[j - 1])
        return out

    def b_d(self, s, j):
        """Drift of the fine forward price ``F^d(., T_{j-1}, T_j)``."""
        d = self.grid.dates
        u = self.lam_d(s, d[j - 1])
        return -self.bd_scale * ld.tilted_exponent(u, self.h(s, d[j]), self.p)

    def b_l(self, s, T):
        """Spread drift (b^l in variant A, b-bar^l in variant B)."""
        return -ld.tilted_exponent(self.gam(s, T), self.h(s, T), self.p)

    def w(self, s, T, S):
        return ld.cumulant_deriv(self.h(s, S), self.p) - ld.cumulant_deriv(self.h(s, T), self.p)

    def fwd_drift(self, s, T_a, T_b):
        """Integrand of the deterministic part of ``log F^d(t, T_a, T_b)``."""
        d = self.grid.dates
        out = np.zeros_like(np.asarray(s, dtype=float))
        for j in self.grid.J(T_a, T_b):
            out = out + self.lam_d(s, d[j - 1]) * self.w(s, d[j], T_b) + self.b_d(s, j)
        return out

    def z_drift(self, s, T_k):
        """Integrand of the deterministic part of ``log Z_T^k``."""
        d = self.grid.dates
        T_star = self.T_star
        out = np.zeros_like(np.asarray(s, dtype=float))
        for j in self.grid.J(T_k, T_star):
            out = out + self.b_d(s, j)
            if d[j] < T_star:
                out = out + self.lam_d(s, d[j - 1]) * self.w(s, d[j], T_star)
        return out

    def basic_load(self, s, T_a, T_b):
        """sum of lambda^d(s, T_{j-1}) over J(T_a, T_b)."""
        d = self.grid.dates
        out = np.zeros_like(np.asarray(s, dtype=float))
        for j in self.grid.J(T_a, T_b):
            out = out + self.lam_d(s, d[j - 1])
        return out

    def exponent_sum(self, T_a, T_b):
        d = self.grid.dates
        return float(sum(self.vol.lam1_d(d[j - 1]) for j in self.grid.J(T_a, T_b)))

    # -- time integrals -----------------------------------------------------

    def integrate(self, integrands, t, rtol=INTEGRAL_RTOL, order=16):
        """int_0^t of a stack of integrands (callables of s)."""
        if t <= 0:
            return np.zeros(len(integrands))
        return integrate_smooth(
            lambda s: np.stack([np.broadcast_to(f(s), s.shape) for f in integrands]),
            0.0,
            t,
            order=order,
            rtol=rtol,
            atol=INTEGRAL_ATOL,
        )

    def compute_factors(self, T, rtol=INTEGRAL_RTOL, order=16):
        """Deterministic factors for the caplet fixing at ``T``, paying ``T + delta_l``."""
        T_k = self.grid.dates[self.grid.index(T + self.delta_l)]
        T_star = self.T_star
        cs = self.curves
        F0 = initial_forward_price(cs, T, T_k)
        one_plus = 1.0 + self.delta_l * cs.fra_rate(self.label, T, T_k)

        def coupling(s):
            return self.w(s, T_k, T_star)

        if self.variant == "A":
            fs = [
                lambda s: self.z_drift(s, T_k),
                lambda s: self.b_l(s, T)
                + self.gam(s, T) * self.w(s, T, T_k)
                + self.fwd_drift(s, T, T_k),
                lambda s: (self.basic_load(s, T, T_k) + self.gam(s, T)) * coupling(s),
            ]
            log_A, i_D, i_C = self.integrate(fs, T, rtol=rtol, order=order)
            fac = dict(log_D_hat=np.log(one_plus) + i_D, log_C_hat=i_C)
        else:
            S0 = one_plus / F0
            if not S0 > 1.0:
                raise SpreadNotAboveOneError(
                    "variant b needs S(0) > 1; period (%g, %g) has %.12g" % (T, T_k, S0)
                )
            fs = [
                lambda s: self.z_drift(s, T_k),
                lambda s: self.fwd_drift(s, T, T_k),
                lambda s: self.fwd_drift(s, T, T_k)
                + self.b_l(s, T)
                + self.gam(s, T) * self.w(s, T, T_k),
                lambda s: self.basic_load(s, T, T_k) * coupling(s),
                lambda s: (self.basic_load(s, T, T_k) + self.gam(s, T)) * coupling(s),
            ]
            log_A, i_Dd, i_Dl, i_Cd, i_Cl = self.integrate(fs, T, rtol=rtol, order=order)
            fac = dict(
                log_D_d=np.log(F0) + i_Dd,
                log_D_l=np.log(F0 * (S0 - 1.0)) + i_Dl,
                log_C_d=i_Cd,
                log_C_l=i_Cl,
            )
        basic = self.exponent_sum(T, T_star)
        return PeriodFactors(
            T=float(T),
            T_k=float(T_k),
            log_A=float(log_A),
            exp_top=basic + float(self.vol.gam1(T)),
            exp_basic=basic,
            exp_z=self.exponent_sum(T_k, T_star),
            **{k: float(v) for k, v in fac.items()},
        )

    def factors(self, T):
        key = round(float(T), 9)
        if key not in self.cache:
            self.cache[key] = self.compute_factors(T)
        return self.cache[key]


# -- admissibility -----------------------------------------------------------


def admissibility_margins(p, vol, grid, label=None):
    """Admissibility conditions as ``(description, lhs, rhs)`` with ``lhs < rhs`` required.

    Sum bounds are checked at ``t = 0`` and at every grid date, which covers
    the maximum of ``lambda(t)`` times the still-live loadings.
    """
    out = []
    T_star = grid.T_star
    M = p.em_bound_M
    mp = vol.m_prime(T_star)
    out.append(("M' = sup|lambda| below M", mp, M))
    R = 1.0 + (M - mp) / mp
    dates = np.asarray(grid.dates)
    lam1 = vol.lam1_d(dates)
    probe = np.concatenate([[0.0], dates])

    def load_sum(indices, with_spread):
        worst = 0.0
        for t in probe:
            live = [i for i in indices if dates[i] >= t - 1e-12]
            tot = sum(lam1[i] + (vol.gam1(dates[i]) if with_spread else 0.0) for i in live)
            worst = max(worst, float(vol.lam(t)) * tot)
        return worst

    # the sum bounds are non-strict; nudge rhs so that lhs < rhs encodes <=
    out.append(("basic volatility sum at most M", load_sum(range(grid.n), False), np.nextafter(M, np.inf)))
    labels = [label] if label is not None else list(grid.sub_grids)
    for lab in labels:
        idx = grid.sub_grids[lab][:-1]
        out.append((
            "tenor %s: basic + spread volatility sum at most M" % lab,
            load_sum(idx, True),
            np.nextafter(M, np.inf),
        ))
    for i, T in enumerate(dates):
        big = float(lam1[i:-1].sum() + vol.gam1(T))
        out.append(("payoff exponent at T=%g below R" % T, big, R))
    return out


def admissibility_violations(p, vol, grid, curves=None, label=None):
    """Human-readable list of violated admissibility conditions (empty if none)."""
    out = []
    for desc, lhs, rhs in admissibility_margins(p, vol, grid, label):
        if not lhs < rhs:
            out.append("%s: %.6g vs %.6g" % (desc, lhs, rhs))
    labels = [label] if label is not None else list(grid.sub_grids)
    if vol.variant == "B" and curves is not None:
        for lab in labels:
            for k in range(1, len(grid.periods(lab)) + 1):
                s0 = initial_spread(curves, lab, k)
                if not s0 > 1.0:
                    Ta, Tb = grid.periods(lab)[k - 1]
                    out.append(
                        "SpreadNotAboveOne: variant b needs S(0) > 1, tenor %s period "
                        "(%g, %g) has %.12g" % (lab, Ta, Tb, s0)
                    )
    return out


def assemble_model(p, vol, grid, curves, label, bd_scale=1.0, precompute=True):
    """Validate and build a :class:`ModelInstance` for tenor ``label``."""
    if label not in grid.sub_grids:
        raise ParameterError("unknown tenor label %r" % label)
    problems = admissibility_violations(p, vol, grid, curves, label)
    spread = [m for m in problems if m.startswith("SpreadNotAboveOne")]
    if spread:
        raise SpreadNotAboveOneError("; ".join(spread))
    if problems:
        raise ParameterError("; ".join(problems))
    m = ModelInstance(p, vol, grid, curves, label, bd_scale)
    if precompute:
        for T, _ in grid.periods(label):
            m.factors(T)
    return m


def with_drift_scale(m, scale):
    """Copy of ``m`` whose basic-curve drifts are multiplied by ``scale``."""
    return replace(m, bd_scale=scale, cache={})


# -- single quantities ---------------------------------------------------------


def tilt_exponent_h(t, T, m):
    return float(m.h(np.asarray([t]), T)[0])


def drift_bd(t, k, m):
    """b^d(t, T_{k-1}, T_k) on the fine grid."""
    return float(m.b_d(np.asarray([t]), k)[0])


def w_term(s, T, S, m):
    return float(m.w(np.asarray([s]), T, S)[0])


def log_forward_price_deterministic(k, label, t, m):
    """Deterministic part of ``log F^d(t, T^i_{k-1}, T^i_k) / F^d(0, ...)``.

    The stochastic part is ``sum lambda_1^d(T_{j-1}) * int_0^t lambda dL^{T^i_k}``.
    """
    Ta, Tb = m.grid.periods(label)[k - 1]
    if t > Ta + 1e-12:
        raise ValueError("t must not exceed the fixing date %g" % Ta)
    return float(m.integrate([lambda s: m.fwd_drift(s, Ta, Tb)], t)[0])


def spread_factors_a(T, m):
    """Variant A factors ``{D_hat, A, C_hat, D_bar}`` for the caplet fixing at ``T``."""
    if m.variant != "A":
        raise VariantMismatchError("spread_factors_a needs a variant A model")
    f = m.factors(T)
    D_hat, A, C_hat = np.exp([f.log_D_hat, f.log_A, f.log_C_hat])
    return {"D_hat": D_hat, "A": A, "C_hat": C_hat, "D_bar": D_hat * A * C_hat}


def spread_factors_b(T, m):
    """Variant B factors ``{D_d, D_l, A, C_d, C_l}`` for the caplet fixing at ``T``."""
    if m.variant != "B":
        raise VariantMismatchError("spread_factors_b needs a variant B model")
    f = m.factors(T)
    vals = np.exp([f.log_D_d, f.log_D_l, f.log_A, f.log_C_d, f.log_C_l])
    return dict(zip(["D_d", "D_l", "A", "C_d", "C_l"], vals))


# -- path construction -----------------------------------------------------


@dataclass
class PathDrifts:
    """Midpoint Riemann sums of the deterministic integrands on a simulation grid.

    Independent of the Gauss-Legendre factor cache, so that simulated states
    are assembled from the forward-price and spread representations directly.
    """

    m: ModelInstance
    edges: np.ndarray

    def __post_init__(self):
        self.mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        self.dt = np.diff(self.edges)

    def riemann(self, f, t):
        sel = self.edges[1:] <= t + 1e-12
        return float(np.sum(f(self.mid[sel]) * self.dt[sel]))

    def fine_log_ratio_parts(self, T, j):
        """(weight, shift) so ``log F^d(T,T_{j-1},T_j)/F^d(0) = weight*X_T + shift``.

        The driver of that forward price is ``L^{T_j} = L^{T*} + int w(., T_j, T*)``.
        """
        m = self.m
        d = m.grid.dates
        wgt = float(m.vol.lam1_d(d[j - 1]))
        shift = self.riemann(
            lambda s: m.lam_d(s, d[j - 1]) * m.w(s, d[j], m.T_star) + m.b_d(s, j), T
        )
        return wgt, shift

    def spread_log_parts(self, T):
        """(weight, shift) for ``log`` of the spread's exponential factor at ``T``.

        The spread over ``(T, T + delta_l)`` is driven by ``L^T = L^{T*} + int w(., T, T*)``.
        """
        m = self.m
        wgt = float(m.vol.gam1(T))
        shift = self.riemann(lambda s: m.gam(s, T) * m.w(s, T, m.T_star) + m.b_l(s, T), T)
        return wgt, shift


def period_state(m, T, X_T, drifts):
    """Per-path ``ln Z_T^k``, ``F^d(T,T,T_k)`` and ``S^l(T,T,T_k)`` from ``X_T``."""
    grid = m.grid
    T_k = grid.dates[grid.index(T + m.delta_l)]
    X_T = np.asarray(X_T, dtype=float)
    log_z = np.zeros_like(X_T)
    for j in grid.J(T_k, m.T_star):
        wgt, shift = drifts.fine_log_ratio_parts(T, j)
        log_z += wgt * X_T + shift
    log_f = np.zeros_like(X_T)
    for j in grid.J(T, T_k):
        wgt, shift = drifts.fine_log_ratio_parts(T, j)
        log_f += wgt * X_T + shift
    F0 = initial_forward_price(m.curves, T, T_k)
    S0 = (1.0 + m.delta_l * m.curves.fra_rate(m.label, T, T_k)) / F0
    g, shift = drifts.spread_log_parts(T)
    e = np.exp(g * X_T + shift)
    S = S0 * e if m.variant == "A" else 1.0 + (S0 - 1.0) * e
    return {"X_T": X_T, "ln_Z": log_z, "F_d": F0 * np.exp(log_f), "S_l": S}


def simulate_period_state(T, T_k, m, paths, seed, steps_per_year=250, antithetic=False):
    """Simulate the state of the caplet period ``(T, T_k)`` on ``paths`` paths."""
    if abs(T_k - (T + m.delta_l)) > 1e-9:
        raise ValueError("T_k must equal T + delta_l")
    chunks = []
    edges = None
    for X, edges in ld.simulate_weighted_integral(
        m.p, m.vol.a, [T], paths, seed, steps_per_year, antithetic
    ):
        chunks.append(X[:, 0])
    X_T = np.concatenate(chunks) if chunks else np.zeros(0)
    if edges is None:
        edges = ld.simulation_grid([T], steps_per_year)[0]
    return period_state(m, T, X_T, PathDrifts(m, edges))
