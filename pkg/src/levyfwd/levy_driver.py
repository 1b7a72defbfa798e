"""Normal inverse Gaussian driver.

The driving process is a one-dimensional, centred NIG Levy process.  Its law
is fixed by the cumulant

    theta(z) = mu z + delta (sqrt(alpha^2 - beta^2) - sqrt(alpha^2 - (beta + z)^2)),

which is analytic on the strip ``-alpha - beta < Re z < alpha - beta``.  The
location ``mu`` is pinned so that ``E[L_1] = 0``.  Measure changes along the
tenor structure act on the Levy measure as exponential tilts ``e^{hx} F(dx)``;
all compensator integrals against tilted measures are expressed through
``theta`` and ``theta'`` so no singular Levy-density integration is needed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError
from .quadrature import integrate_smooth

_STRIP_EPS = 0.0


@dataclass(frozen=True)
class NigParams:
    """NIG parameters plus the exponential-moment bound ``M`` and margin ``eps``.

    ``mu`` is derived from the zero-mean rule unless given explicitly, in
    which case it must agree with it.  Without an explicit ``em_bound_M`` half
    of the admissible range ``(alpha - |beta|) / (1 + eps)`` is used.
    """

    alpha: float
    beta: float
    delta_nig: float
    em_bound_M: float = None
    em_eps: float = 0.05
    mu: float = field(default=None)

    def __post_init__(self):
        a, b, d = float(self.alpha), float(self.beta), float(self.delta_nig)
        if not (a > 0 and abs(b) < a):
            raise ParameterError("need 0 <= |beta| < alpha, got alpha=%r beta=%r" % (a, b))
        if not d > 0:
            raise ParameterError("need delta_nig > 0, got %r" % d)
        if self.em_bound_M is None:
            object.__setattr__(
                self, "em_bound_M", 0.5 * (a - abs(b)) / (1.0 + self.em_eps)
            )
        if not (self.em_bound_M > 0 and self.em_eps > 0):
            raise ParameterError("em_bound_M and em_eps must be positive")
        if (1.0 + self.em_eps) * self.em_bound_M >= a - abs(b):
            raise ParameterError(
                "exponential moments: (1+eps)*M = %.6g must stay below alpha-|beta| = %.6g"
                % ((1.0 + self.em_eps) * self.em_bound_M, a - abs(b))
            )
        mu0 = -d * b / np.sqrt(a * a - b * b)
        if self.mu is None:
            object.__setattr__(self, "mu", mu0)
        elif abs(self.mu - mu0) > 1e-12 * max(1.0, abs(mu0)):
            raise ParameterError("mu must follow the zero-mean rule (expected %r)" % mu0)

    @property
    def gamma(self):
        return float(np.sqrt(self.alpha ** 2 - self.beta ** 2))

    @property
    def strip(self):
        return CumulantStrip(-(self.alpha + self.beta), self.alpha - self.beta)

    def cumulants(self):
        """First four cumulants of ``L_1``."""
        a, b, d, g = self.alpha, self.beta, self.delta_nig, self.gamma
        return (
            self.mu + d * b / g,
            d * a * a / g ** 3,
            3.0 * d * a * a * b / g ** 5,
            3.0 * d * a * a * (a * a + 4.0 * b * b) / g ** 7,
        )


@dataclass(frozen=True)
class CumulantStrip:
    lower: float
    upper: float

    def contains(self, re_z):
        re_z = np.asarray(re_z, dtype=float)
        return (re_z > self.lower + _STRIP_EPS) & (re_z < self.upper - _STRIP_EPS)


def _check_strip(z, p):
    if not np.all(p.strip.contains(np.real(z))):
        bad = np.real(z)[~p.strip.contains(np.real(z))] if np.ndim(z) else np.real(z)
        raise DomainError(
            "Re(z) outside the cumulant strip (%g, %g): %r"
            % (p.strip.lower, p.strip.upper, np.ravel(bad)[:3])
        )


def _root(z, p):
    w = p.beta + z
    # alpha^2 - w^2 has positive real part inside the strip, so the principal
    # branch is continuous there
    return np.sqrt(p.alpha ** 2 - w * w + 0j)


def _core(z, p):
    """Shared factor ``gamma + beta (2 beta + z) / (gamma + r)`` and the root ``r``.

    Rationalising ``gamma - r = z (2 beta + z) / (gamma + r)`` and folding in
    the zero-mean location removes the cancellation of the textbook form
    near ``z = 0``.
    """
    r = _root(z, p)
    g = p.gamma
    return g + p.beta * (2.0 * p.beta + z) / (g + r), r


def cumulant(z, p, check=True):
    """theta(z); real for real ``z``, complex otherwise."""
    if check:
        _check_strip(z, p)
    c, r = _core(z, p)
    out = p.delta_nig * z * z * c / (p.gamma * (p.gamma + r))
    return out.real if np.isrealobj(z) else out


def cumulant_deriv(z, p, check=True):
    if check:
        _check_strip(z, p)
    c, r = _core(z, p)
    out = p.delta_nig * z * c / (r * p.gamma)
    return out.real if np.isrealobj(z) else out


def cumulant_deriv2(z, p, check=True):
    if check:
        _check_strip(z, p)
    out = p.delta_nig * p.alpha ** 2 / _root(z, p) ** 3
    return out.real if np.isrealobj(z) else out


def tilted_exponent(u, h, p, check=True):
    """Compensator of ``e^{ux} - 1 - ux`` against the tilted measure ``e^{hx}F(dx)``.

    Equals ``theta(u+h) - theta(h) - u theta'(h)``; nonnegative for real ``u``.
    """
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    if check:
        _check_strip(u + h, p)
        _check_strip(h, p)
    return (
        cumulant(u + h, p, check=False)
        - cumulant(h, p, check=False)
        - u * cumulant_deriv(h, p, check=False)
    )


def vol_path(s, a):
    """lambda(s) = exp(a s)."""
    return np.exp(a * np.asarray(s, dtype=float))


def _lambda_range(T, a):
    end = np.exp(a * T)
    return min(1.0, end), max(1.0, end)


def integrated_cumulant(z, T, a, p, rtol=1e-12):
    """int_0^T theta(z lambda(s)) ds for complex ``z`` (array or scalar)."""
    z = np.asarray(z, dtype=complex)
    lo, hi = _lambda_range(T, a)
    _check_strip(np.real(z) * lo, p)
    _check_strip(np.real(z) * hi, p)
    if T == 0:
        return np.zeros(z.shape, dtype=complex)[()]
    zf = z.reshape(-1)

    def integrand(s):
        return cumulant(zf[:, None] * vol_path(s, a)[None, :], p, check=False)

    out = integrate_smooth(integrand, 0.0, T, rtol=rtol, atol=1e-300)
    return out.reshape(z.shape)[()]


def phi_XT(z, T, a, p):
    """Extended characteristic function of ``X_T = int_0^T lambda(s) dL_s``."""
    return np.exp(integrated_cumulant(1j * np.asarray(z, dtype=complex), T, a, p))


def nig_increments(dt, p, size, rng, antithetic=False):
    """NIG(alpha, beta, delta*dt, mu*dt) draws by inverse-Gaussian subordination.

    With ``antithetic`` the second half of the sample reuses the first half's
    subordinator with the Gaussian factor negated; ``size`` must then be even.
    """
    d = p.delta_nig * dt
    if antithetic:
        if size % 2:
            raise ValueError("antithetic sampling needs an even sample size")
        half = size // 2
        v = rng.wald(d / p.gamma, d * d, half)
        n = rng.standard_normal(half)
        core = p.mu * dt + p.beta * v
        sv = np.sqrt(v) * n
        return np.concatenate([core + sv, core - sv])
    v = rng.wald(d / p.gamma, d * d, size)
    return p.mu * dt + p.beta * v + np.sqrt(v) * rng.standard_normal(size)


def sample_increments(grid, p, seed, paths=1, antithetic=False):
    """Driver increments over ``grid`` (strictly increasing, starting at 0).

    Returns an array of shape ``(paths, len(grid) - 1)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must start at 0 and be strictly increasing")
    rng = np.random.default_rng(seed)
    dts = np.diff(grid)
    out = np.empty((paths, dts.size))
    for i, dt in enumerate(dts):
        out[:, i] = nig_increments(dt, p, paths, rng, antithetic=antithetic)
    return out


def simulation_grid(dates, steps_per_year):
    """Time steps hitting every date in ``dates`` exactly.

    Each interval between consecutive dates (starting from 0) is split into
    ``ceil(length * steps_per_year)`` equal steps.  Returns ``(edges, marks)``
    where ``edges[marks[i]] == dates[i]``.
    """
    dates = np.asarray(sorted(set(float(d) for d in dates if d > 0)))
    edges = [0.0]
    marks = []
    prev = 0.0
    for d in dates:
        m = max(1, int(np.ceil((d - prev) * steps_per_year - 1e-9)))
        edges.extend(prev + (d - prev) * np.arange(1, m + 1) / m)
        edges[-1] = d
        marks.append(len(edges) - 1)
        prev = d
    return np.asarray(edges), dict(zip(dates.tolist(), marks))


def simulate_weighted_integral(
    p, a, dates, paths, seed, steps_per_year=250, antithetic=False, block_size=100_000
):
    """Simulate ``X_t = int_0^t lambda(s) dL_s`` at ``dates``, block by block.

    Each step's increment is exact in law and weighted by ``lambda`` at the
    step midpoint.  Yields ``(X, edges)`` with ``X`` of shape
    ``(block, len(dates))``; blocks use independent streams spawned from
    ``seed`` so results do not depend on anything but the arguments.
    """
    dates = [float(d) for d in dates]
    edges, marks = simulation_grid(dates, steps_per_year)
    dts = np.diff(edges)
    weights = vol_path(0.5 * (edges[1:] + edges[:-1]), a)
    n_blocks = -(-paths // block_size)
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    for b, ss in enumerate(streams):
        size = min(block_size, paths - b * block_size)
        rng = np.random.default_rng(ss)
        x = np.zeros(size)
        out = np.zeros((size, len(dates)))
        col = {}
        for i, d in enumerate(dates):
            col.setdefault(marks.get(d, 0), []).append(i)
        for i, (dt, wgt) in enumerate(zip(dts, weights), start=1):
            x += wgt * nig_increments(dt, p, size, rng, antithetic=antithetic)
            for c in col.get(i, ()):
                out[:, c] = x
        yield out, edges
