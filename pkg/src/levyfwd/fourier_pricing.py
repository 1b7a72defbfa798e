"""Caplet prices by Fourier inversion under the terminal forward measure.

Both model variants lead to a payoff of ``X_T`` of the form

    f(x) = (sum_m c_m exp(p_m x) - kappa exp(q x))^+,   c_m, kappa > 0, p_m >= q,

so a single implementation covers variant A (one exponential term) and
variant B (two terms), including the terminal period where ``kappa = K~`` and
``q = 0``.  The caplet price is

    B_0(T_k) / pi * int_0^inf Re(phi_X(u - iR) f^(iR - u)) du

with ``f^`` known in closed form once the payoff root is found.
"""

from dataclasses import dataclass, field

import numpy as np

from . import levy_driver as ld
from .errors import (
    DegenerateVolatilityError,
    ParameterError,
    QuadratureNotConvergedError,
    StripViolationError,
)
from .quadrature import adaptive_panels

DEFAULT_TOL = 1e-10
# log-size advantage needed before a strike is priced on the put side
PARITY_SWITCH = 2.0


@dataclass(frozen=True)
class CapletSpec:
    """Caplet fixing at ``T`` on ``1 + delta_l L(T, T, T + delta_l)`` struck at ``K``."""

    T: float
    K: float
    delta_l: float = 0.5
    label: str = "6m"

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError("caplet maturity must be positive")
        if not self.K_tilde > 0:
            raise ParameterError("strike below -1/delta_l has no positive K~")

    @property
    def T_k(self):
        return self.T + self.delta_l

    @property
    def K_tilde(self):
        return 1.0 + self.delta_l * self.K

    @classmethod
    def for_model(cls, m, T, K):
        return cls(float(T), float(K), m.delta_l, m.label)


@dataclass(frozen=True)
class DampingConfig:
    """``R=None`` picks the damping automatically, ``u_max=None`` searches
    the truncation point; ``tol`` is an absolute tolerance on the price."""

    R: float = None
    u_max: float = None
    tol: float = DEFAULT_TOL


@dataclass(frozen=True)
class ExpPayoff:
    coefs: tuple
    exps: tuple
    kappa: float
    q: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        top = sum(c * np.exp(p * x) for c, p in zip(self.coefs, self.exps))
        return np.maximum(top - self.kappa * np.exp(self.q * x), 0.0)

    @property
    def p_max(self):
        return max(self.exps)

    @property
    def is_degenerate(self):
        return max(abs(p - self.q) for p in self.exps) == 0 and self.q == 0

    def h(self, x):
        """Root function ``sum c_m e^{(p_m - q) x} - kappa``."""
        x = np.asarray(x, dtype=float)
        return sum(c * np.exp((p - self.q) * x) for c, p in zip(self.coefs, self.exps)) - self.kappa

    def h_floor(self):
        """inf of ``h`` over the real line."""
        return sum(c for c, p in zip(self.coefs, self.exps) if p == self.q) - self.kappa


def payoff_for(spec, m):
    """The payoff ``f_K`` of the caplet as a function of ``X_T``."""
    f = m.factors(spec.T)
    Kt = spec.K_tilde
    A = np.exp(f.log_A)
    if m.variant == "A":
        D_bar = np.exp(f.log_D_hat + f.log_A + f.log_C_hat)
        return ExpPayoff((D_bar,), (f.exp_top,), Kt * A, f.exp_z)
    Dd = np.exp(f.log_D_d + f.log_A + f.log_C_d)
    Dl = np.exp(f.log_D_l + f.log_A + f.log_C_l)
    return ExpPayoff((Dd, Dl), (f.exp_basic, f.exp_top), Kt * A, f.exp_z)


def _root_log(payoff, x0=0.0, tol=1e-15, maxiter=200):
    """Safeguarded Newton on ``log(sum c e^{d x}) - log kappa`` (convex, increasing)."""
    ds = np.array([p - payoff.q for p in payoff.exps])
    cs = np.array(payoff.coefs)
    lk = np.log(payoff.kappa)

    def g(x):
        t = np.log(cs) + ds * x
        mx = t.max()
        e = np.exp(t - mx)
        return mx + np.log(e.sum()) - lk, float((ds * e).sum() / e.sum())

    lo, hi = _bracket(payoff)
    x = min(max(x0, lo), hi)
    for _ in range(maxiter):
        gx, dg = g(x)
        if gx < 0:
            lo = x
        else:
            hi = x
        step = gx / dg if dg > 0 else np.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def _bracket(payoff):
    lo, hi = -1.0, 1.0
    while payoff.h(lo) >= 0:
        lo *= 2.0
        if lo < -1e12:
            raise DegenerateVolatilityError("payoff root function has no sign change")
    while payoff.h(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise DegenerateVolatilityError("payoff root function has no sign change")
    return lo, hi


def _root_bisect(payoff, tol=1e-15):
    lo, hi = _bracket(payoff)
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if payoff.h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def payoff_root(spec, m, method="newton"):
    """Root of the strictly increasing ``h`` behind the caplet payoff.

    Raises :class:`DegenerateVolatilityError` when ``h`` is constant or never
    changes sign (then the price has a closed form, see :func:`price_caplet`).
    """
    return root_of(payoff_for(spec, m), method=method)


def root_of(payoff, method="newton"):
    if all(p == payoff.q for p in payoff.exps):
        raise DegenerateVolatilityError("all payoff exponents coincide")
    if payoff.h_floor() >= 0:
        raise DegenerateVolatilityError("payoff is positive everywhere (no root)")
    if method == "newton":
        return _root_log(payoff)
    if method == "bisect":
        return _root_bisect(payoff)
    raise ValueError("unknown method %r" % method)


def transform_terms(payoff, z, x_root, side="call"):
    """The exponential-term part and the strike part of :func:`transform`.

    On the call side ``Im z > p_max`` is required.  The same expression,
    evaluated at ``Im z < q``, is minus the transform of the put payoff
    ``(kappa e^{qx} - sum c e^{px})^+``; ``side="put"`` allows that line.
    """
    z = np.asarray(z, dtype=complex)
    if side == "call" and np.any(np.imag(z) <= payoff.p_max):
        raise StripViolationError(
            "Im(z) must exceed the payoff exponent %g" % payoff.p_max
        )
    if side == "put" and np.any(np.imag(z) >= payoff.q):
        raise StripViolationError("put side needs Im(z) below the strike exponent %g" % payoff.q)
    iz = 1j * z
    e = np.exp(iz * x_root)
    rate = 0.0
    for c, p in zip(payoff.coefs, payoff.exps):
        rate = rate - c * np.exp(p * x_root) / (p + iz)
    strike = payoff.kappa * np.exp(payoff.q * x_root) / (payoff.q + iz)
    return e * rate, e * strike


def transform(payoff, z, x_root, side="call"):
    """Closed-form extended Fourier transform ``int e^{izx} f(x) dx``; needs Im z > p_max."""
    rate, strike = transform_terms(payoff, z, x_root, side)
    return rate + strike


def payoff_transform(spec, z, x_root, m):
    return transform(payoff_for(spec, m), z, x_root)


def choose_damping(p_max, m):
    """Damping between the payoff growth ``p_max`` and the admissible bound."""
    r_max = m.R_max
    R = min(r_max, max(1.25 * p_max, p_max + 0.5))
    if not R > p_max:
        raise StripViolationError(
            "no admissible damping: payoff exponent %g vs bound %g" % (p_max, r_max)
        )
    return R


def choose_put_damping(payoff, m):
    """Damping below the strike exponent, for the put side of the parity."""
    return max(payoff.q - max(0.25 * payoff.p_max, 0.5), -0.999 * m.R_max)


def _check_damping(R, payoff, m, side="call"):
    if side == "call":
        if not payoff.p_max < R:
            raise StripViolationError(
                "damping R=%g must exceed payoff exponent %g" % (R, payoff.p_max)
            )
        if R * m.M_prime >= m.p.strip.upper:
            raise StripViolationError("damping R=%g leaves the cumulant strip" % R)
    else:
        if not R < payoff.q:
            raise StripViolationError(
                "put-side damping R=%g must stay below strike exponent %g" % (R, payoff.q)
            )
        if R * m.M_prime <= m.p.strip.lower or R < -m.R_max:
            raise StripViolationError("damping R=%g leaves the cumulant strip" % R)


def _log_scale(R, x, T, m):
    """log of e^{-R x} E[e^{R X_T}], the size of the damped integrand near u = 0."""
    return -R * x + float(np.real(ld.integrated_cumulant(R, T, m.vol.a, m.p)))


def _log_phi(u, T, R, m):
    """log phi_X(u - iR) = int_0^T theta((R + iu) lambda(s)) ds."""
    return ld.integrated_cumulant(R + 1j * np.asarray(u), T, m.vol.a, m.p)


def fourier_integrand(u, payoffs, roots, R, T, m):
    """Re(phi_X(u - iR) f^(iR - u)) for each payoff; shape ``(n_payoffs, len(u))``."""
    u = np.asarray(u, dtype=float)
    lphi = _log_phi(u, T, R, m)
    w = R + 1j * u  # -i z at z = iR - u
    out = np.empty((len(payoffs), u.size))
    for i, (pay, x) in enumerate(zip(payoffs, roots)):
        acc = pay.kappa * np.exp(pay.q * x) / (pay.q - w)
        for c, p in zip(pay.coefs, pay.exps):
            acc = acc - c * np.exp(p * x) / (p - w)
        out[i] = (np.exp(lphi - w * x) * acc).real
    return out


def _envelope(u, payoffs, roots, R, T, m):
    lphi = _log_phi(np.atleast_1d(u), T, R, m)
    w = R + 1j * np.atleast_1d(u)
    worst = np.zeros(np.size(u))
    for pay, x in zip(payoffs, roots):
        b = pay.kappa * np.exp(pay.q * x) / np.abs(pay.q - w)
        for c, p in zip(pay.coefs, pay.exps):
            b = b + c * np.exp(p * x) / np.abs(p - w)
        worst = np.maximum(worst, np.exp(lphi.real - R * x) * b)
    return worst


def _truncation(payoffs, roots, R, T, m, tol):
    """Doubling search for ``u_max`` where the analytic tail bound drops below ``tol/10``."""
    u = 16.0
    for _ in range(40):
        e1, e2 = _envelope(np.array([u, 2 * u]), payoffs, roots, R, T, m)
        rate = np.log(e1 / e2) / u if e2 > 0 else np.inf
        # tail of an envelope decaying at least like exp(-rate u) and like 1/u
        tail = e2 / rate if rate > 0 else np.inf
        if e2 < tol / 10 and tail < tol / 10:
            return 2 * u
        u *= 2
    raise QuadratureNotConvergedError("no truncation point found", u_max=u)


@dataclass
class MaturityPrices:
    prices: np.ndarray
    converged: np.ndarray
    error: np.ndarray
    R: float = None
    u_max: float = None
    roots: list = field(default_factory=list)
    sides: list = field(default_factory=list)


def _mgf(c, T, m):
    if c == 0:
        return 1.0
    return float(np.exp(ld.integrated_cumulant(c, T, m.vol.a, m.p)).real)


def _forward_value(pay, T, m):
    """E[sum c e^{pX} - kappa e^{qX}] without the positive part."""
    return sum(c * _mgf(p, T, m) for c, p in zip(pay.coefs, pay.exps)) - pay.kappa * _mgf(pay.q, T, m)


def _expectation_closed_form(pay, T, m):
    """E[f(X_T)] when the positive part never bites (or all exponents vanish)."""
    if pay.h_floor() >= 0:
        return _forward_value(pay, T, m)
    # h < 0 everywhere is impossible for increasing h unless all exponents coincide
    return 0.0


def _side_for(cfg, payoff, x, T, m, R_call, R_put):
    if cfg.R is not None:
        return "call" if cfg.R > payoff.p_max else "put"
    # parity switch only when the put side is clearly better scaled
    gain = _log_scale(R_call, x, T, m) - _log_scale(R_put, x, T, m)
    return "put" if gain > PARITY_SWITCH else "call"


def price_maturity(T, strikes, m, cfg=None):
    """Caplet prices for one fixing date ``T`` and several strikes.

    Strikes far in the money are priced through put-call parity: closed-form
    forward value minus a put integral damped below the strike exponent.
    """
    cfg = cfg or DampingConfig()
    specs = [CapletSpec.for_model(m, T, K) for K in np.atleast_1d(strikes)]
    df = m.curves.discount(specs[0].T_k)
    n = len(specs)
    prices = np.zeros(n)
    conv = np.ones(n, dtype=bool)
    err = np.zeros(n)
    payoffs = [payoff_for(s, m) for s in specs]
    roots = [None] * n
    side = [None] * n
    fourier = []
    for i, pay in enumerate(payoffs):
        try:
            roots[i] = root_of(pay)
            fourier.append(i)
        except DegenerateVolatilityError:
            prices[i] = df * _expectation_closed_form(pay, T, m)
    out = MaturityPrices(prices, conv, err, roots=roots)
    if not fourier:
        return out
    ref = payoffs[fourier[0]]
    R_call = cfg.R if cfg.R is not None else choose_damping(ref.p_max, m)
    R_put = cfg.R if cfg.R is not None else choose_put_damping(ref, m)
    for i in fourier:
        side[i] = _side_for(cfg, payoffs[i], roots[i], T, m, R_call, R_put)
    itol = cfg.tol * np.pi / df
    for which, R in (("call", R_call), ("put", R_put)):
        idx = [i for i in fourier if side[i] == which]
        if not idx:
            continue
        for i in idx:
            _check_damping(R, payoffs[i], m, which)
        pays = [payoffs[i] for i in idx]
        rts = [roots[i] for i in idx]
        u_max = cfg.u_max if cfg.u_max is not None else _truncation(pays, rts, R, T, m, itol)
        val, e, ok = adaptive_panels(
            lambda u: fourier_integrand(u, pays, rts, R, T, m), 0.0, u_max, itol
        )
        vals = df / np.pi * val
        if which == "put":
            fwd = np.array([_forward_value(p, T, m) for p in pays])
            vals = df * fwd - vals
        prices[idx] = np.maximum(vals, 0.0)
        err[idx] = df / np.pi * e
        conv[idx] = ok
        if which == "call" or out.R is None:
            out.R, out.u_max = R, u_max
    out.sides = side
    return out


def price_caplet(spec, m, cfg=None):
    """Time-0 caplet price; raises :class:`QuadratureNotConvergedError` on failure."""
    if abs(spec.delta_l - m.delta_l) > 1e-12 or spec.label != m.label:
        raise ParameterError("caplet tenor does not match the model's risky curve")
    res = price_maturity(spec.T, [spec.K], m, cfg)
    if not res.converged[0]:
        raise QuadratureNotConvergedError(
            "Fourier quadrature did not reach tol", achieved_error=res.error[0], u_max=res.u_max
        )
    return float(res.prices[0])


@dataclass
class PriceSurface:
    maturities: np.ndarray
    strikes: np.ndarray
    prices: np.ndarray
    converged: np.ndarray
    errors: dict = field(default_factory=dict)


def price_surface(maturities, strikes, m, cfg=None):
    """Prices on a (maturity x strike) grid; per-cell failures are flagged, not raised."""
    T = np.asarray(maturities, dtype=float)
    K = np.asarray(strikes, dtype=float)
    prices = np.full((T.size, K.size), np.nan)
    conv = np.zeros((T.size, K.size), dtype=bool)
    errors = {}
    for i, t in enumerate(T):
        try:
            res = price_maturity(t, K, m, cfg)
            prices[i] = res.prices
            conv[i] = res.converged
        except Exception as exc:  # noqa: BLE001 - reported per cell
            errors[i] = "%s: %s" % (type(exc).__name__, exc)
    return PriceSurface(T, K, prices, conv, errors)


def deterministic_price(spec, m):
    """Discounted intrinsic value ``B_0(T_k) (1 + delta L(0) - K~)^+``."""
    L0 = m.curves.fra_rate(m.label, spec.T, spec.T_k)
    df = m.curves.discount(spec.T_k)
    return df * max(1.0 + spec.delta_l * L0 - spec.K_tilde, 0.0)
