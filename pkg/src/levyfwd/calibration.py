"""Least-squares calibration of the driver and volatility parameters.

The objective is the sum of squared relative caplet price errors.  The
search runs scipy's Powell method from several random starts in a box, each
start with its own random orthogonal set of initial directions.  Parameters
are searched in transformed, box-normalised coordinates:

    log(alpha - |beta|), beta, log(delta_nig), a, a_d, a_l (or a_l_bar)

The exponential-moment bound ``M`` is not searched: each candidate uses the
largest value its ``alpha - |beta|`` allows, shrunk by a small margin.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import ortho_group

from .errors import (
    LevyFwdError,
    MalformedFileError,
    NoFeasibleStartError,
    PriceOutOfBoundsError,
)
from .fourier_pricing import DampingConfig, price_maturity
from .levy_driver import NigParams
from .market_quotes import bachelier_implied_vol
from .model_core import (
    ModelInstance,
    VolStructure,
    admissibility_margins,
    admissibility_violations,
)

PARAM_NAMES = ("log_gap", "beta", "log_delta", "a", "a_d", "a_l")
INFEASIBLE_BASE = 1e6
PENALTY_WEIGHT = 1e6


@dataclass
class CalibrationProblem:
    """Target caplet prices on ``maturities x strikes`` plus search settings.

    ``center`` is a flat parameter dict (the keys of the model JSON); the
    random starts are drawn uniformly in ``center +- box`` in transformed
    coordinates, with the first restart at the center itself.
    """

    maturities: tuple
    strikes: tuple
    targets: np.ndarray
    grid: object
    curves: object
    center: dict
    variant: str = "A"
    label: str = "6m"
    box: dict = None
    free: tuple = PARAM_NAMES
    em_eps: float = 0.1
    margin: float = 1e-3
    restarts: int = 8
    max_evals: int = 4000
    xtol: float = 1e-6
    ftol: float = 1e-12
    seed: int = 0
    tol: float = 1e-10

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=float)
        self.maturities = tuple(float(t) for t in self.maturities)
        self.strikes = tuple(float(k) for k in self.strikes)
        self.variant = str(self.variant).upper()
        if self.targets.shape != (len(self.maturities), len(self.strikes)):
            raise ValueError("targets must have shape (maturities, strikes)")
        if not np.all(self.targets > 0):
            raise ValueError("every target price must be positive")
        unknown = set(self.free) - set(PARAM_NAMES)
        if unknown:
            raise ValueError("unknown free parameters %s" % sorted(unknown))
        if self.box is None:
            self.box = default_box(to_vector(self.center, self.variant))

    @property
    def x_center(self):
        return to_vector(self.center, self.variant)

    @property
    def free_mask(self):
        return np.array([n in self.free for n in PARAM_NAMES])

    @property
    def scale(self):
        return np.array([self.box[n] for n in PARAM_NAMES])


@dataclass
class CalibrationResult:
    params: dict
    objective: float
    rel_errors: np.ndarray
    model_prices: np.ndarray
    vol_diff_bps: np.ndarray
    n_evals: int
    restart: int
    trace: list = field(default_factory=list)
    restart_objectives: list = field(default_factory=list)

    @property
    def rms_vol_bps(self):
        d = self.vol_diff_bps[np.isfinite(self.vol_diff_bps)]
        return float(np.sqrt(np.mean(d * d))) if d.size else float("nan")


# -- parameter transforms ---------------------------------------------------


def to_vector(spec, variant="A"):
    gap = spec["alpha"] - abs(spec["beta"])
    spread = spec.get("a_l", 0.0) if str(variant).upper() == "A" else spec.get("a_l_bar", 0.0)
    return np.array([
        math.log(gap), spec["beta"], math.log(spec["delta_nig"]), spec["a"], spec["a_d"], spread,
    ])


def from_vector(x, variant="A", em_eps=0.1, margin=1e-3):
    """Flat parameter dict for the transformed vector ``x``."""
    gap = math.exp(x[0])
    beta = float(x[1])
    out = dict(
        alpha=abs(beta) + gap,
        beta=beta,
        delta_nig=math.exp(x[2]),
        a=float(x[3]),
        a_d=float(x[4]),
        variant=str(variant).upper(),
        em_eps=em_eps,
        em_bound_M=gap / (1.0 + em_eps) * (1.0 - margin),
    )
    out["a_l" if out["variant"] == "A" else "a_l_bar"] = float(x[5])
    return out


PERTURB_SIGNS = (1, -1, 1, -1, 1, -1)


def perturbed_start(spec, frac=0.2, signs=PERTURB_SIGNS):
    """Scale ``alpha - |beta|``, beta, delta, a, a_d and the spread vol by ``1 +- frac``."""
    variant = str(spec.get("variant", "A")).upper()
    key = "a_l" if variant == "A" else "a_l_bar"
    gap = spec["alpha"] - abs(spec["beta"])
    f = [1.0 + sg * frac for sg in signs]
    out = dict(spec)
    out.update(
        beta=spec["beta"] * f[1],
        delta_nig=spec["delta_nig"] * f[2],
        a=spec["a"] * f[3],
        a_d=spec["a_d"] * f[4],
    )
    out[key] = spec.get(key, 0.0) * f[5]
    out["alpha"] = abs(out["beta"]) + gap * f[0]
    return out


def default_box(x):
    return {
        "log_gap": 0.5,
        "beta": 0.25 * abs(x[1]) + 0.5,
        "log_delta": 0.5,
        "a": 0.25 * abs(x[3]) + 0.1,
        "a_d": 0.5 * abs(x[4]) + 1e-4,
        "a_l": 0.5 * abs(x[5]) + 1e-4,
    }


def build(spec, prob):
    """Unvalidated model for ``spec`` (constraints are handled by the caller)."""
    p = NigParams(spec["alpha"], spec["beta"], spec["delta_nig"],
                  em_bound_M=spec["em_bound_M"], em_eps=spec["em_eps"])
    vol = VolStructure(spec["a"], spec["a_d"], spec.get("a_l", 0.0), spec.get("a_l_bar", 0.0),
                       spec["variant"])
    return p, vol


def violation(spec, prob):
    """Sum of squared relative constraint violations (0 inside the feasible set)."""
    p, vol = build(spec, prob)
    tot = 0.0
    for _, lhs, rhs in admissibility_margins(p, vol, prob.grid, prob.label):
        if not lhs < rhs:
            tot += ((lhs - rhs) / max(abs(rhs), 1e-12) + 1e-9) ** 2
    return tot


def model_prices(spec, prob):
    p, vol = build(spec, prob)
    m = ModelInstance(p, vol, prob.grid, prob.curves, prob.label)
    cfg = DampingConfig(tol=prob.tol)
    out = np.empty((len(prob.maturities), len(prob.strikes)))
    for i, T in enumerate(prob.maturities):
        res = price_maturity(T, prob.strikes, m, cfg)
        out[i] = res.prices
    return out


def objective(spec, prob):
    """Squared relative errors; constraint violations add a quadratic penalty."""
    v = violation(spec, prob)
    if v > 0:
        return INFEASIBLE_BASE + PENALTY_WEIGHT * v
    try:
        prices = model_prices(spec, prob)
    except LevyFwdError:
        return INFEASIBLE_BASE * 10
    if not np.all(np.isfinite(prices)):
        return INFEASIBLE_BASE * 10
    rel = (prices - prob.targets) / prob.targets
    return float(np.sum(rel * rel))


def is_feasible(spec, prob):
    """Post-hoc check through the model's own validation, independent of the penalty."""
    try:
        p, vol = build(spec, prob)
    except LevyFwdError:
        return False
    return not admissibility_violations(p, vol, prob.grid, prob.curves, prob.label)


# -- search --------------------------------------------------------------------


def _run_restart(prob, x0, direc, budget):
    mask = prob.free_mask
    scale = prob.scale[mask]
    base = x0.copy()
    evals = [0]
    trace = []

    def full(u):
        x = base.copy()
        x[mask] = base[mask] + scale * u
        return x

    seen = {}

    def f(u):
        key = u.tobytes()
        if key not in seen:
            evals[0] += 1
            seen[key] = objective(from_vector(full(u), prob.variant, prob.em_eps, prob.margin), prob)
        return seen[key]

    def cb(u):
        trace.append(f(np.asarray(u, dtype=float)))

    res = minimize(
        f, np.zeros(mask.sum()), method="Powell", callback=cb,
        options=dict(direc=direc, xtol=prob.xtol, ftol=prob.ftol, maxfev=budget),
    )
    return full(res.x), float(res.fun), evals[0], trace


def calibrate(prob):
    """Best of ``prob.restarts`` randomised Powell runs; deterministic per seed."""
    rng = np.random.default_rng(prob.seed)
    mask = prob.free_mask
    nfree = int(mask.sum())
    x_c = prob.x_center
    starts = []
    for r in range(prob.restarts):
        x0 = x_c.copy()
        if r > 0:
            x0[mask] = x_c[mask] + prob.scale[mask] * rng.uniform(-1.0, 1.0, nfree)
        direc = ortho_group.rvs(nfree, random_state=rng) if nfree > 1 else np.eye(1)
        starts.append((x0, direc))

    best = None
    total = 0
    objs = []
    budget = max(prob.max_evals // max(prob.restarts, 1), 50)
    for r, (x0, direc) in enumerate(starts):
        x, fun, n, trace = _run_restart(prob, x0, direc, budget)
        total += n
        objs.append(fun)
        spec = from_vector(x, prob.variant, prob.em_eps, prob.margin)
        feasible = fun < INFEASIBLE_BASE and is_feasible(spec, prob)
        if feasible and (best is None or fun < best[1]):
            best = (spec, fun, r, trace)
    if best is None:
        raise NoFeasibleStartError("no restart reached a feasible point")
    spec, fun, r, trace = best
    prices = model_prices(spec, prob)
    rel = (prices - prob.targets) / prob.targets
    res = CalibrationResult(
        params=spec,
        objective=float(np.sum(rel * rel)),
        rel_errors=rel,
        model_prices=prices,
        vol_diff_bps=np.full(prices.shape, np.nan),
        n_evals=total,
        restart=r,
        trace=trace,
        restart_objectives=objs,
    )
    res.vol_diff_bps, _ = implied_vol_report(res, prob)
    return res


def implied_vol_report(result, prob):
    """Model minus market normal implied vol in bp; per-cell failure flags."""
    diff = np.full(result.model_prices.shape, np.nan)
    ok = np.zeros(diff.shape, dtype=bool)
    for i, T in enumerate(prob.maturities):
        T_k = T + prob.grid.sub_delta(prob.label)
        F = prob.curves.fra_rate(prob.label, T, T_k)
        df = prob.curves.discount(T_k)
        d = T_k - T
        for j, K in enumerate(prob.strikes):
            try:
                vm = bachelier_implied_vol(result.model_prices[i, j], F, K, T, df, d)
                vq = bachelier_implied_vol(prob.targets[i, j], F, K, T, df, d)
            except PriceOutOfBoundsError:
                continue
            diff[i, j] = (vm - vq) * 1e4
            ok[i, j] = True
    return diff, ok


def surface_from_params(spec, prob):
    """Model prices on the problem's grid for an arbitrary parameter dict."""
    return model_prices(spec, prob)


# -- files ---------------------------------------------------------------------


def read_target_csv(path):
    """Target surface from ``expiry,strike,price[,...]`` rows."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise MalformedFileError("cannot read %s: %s" % (path, exc))
    if not rows or not {"expiry", "strike", "price"} <= set(rows[0]):
        raise MalformedFileError("%s: need expiry,strike,price columns" % path)
    try:
        cells = [(float(r["expiry"]), float(r["strike"]), float(r["price"])) for r in rows]
    except (TypeError, ValueError):
        raise MalformedFileError("%s: non-numeric field" % path)
    Ts = sorted({c[0] for c in cells})
    Ks = sorted({c[1] for c in cells})
    tgt = np.full((len(Ts), len(Ks)), np.nan)
    for T, K, p in cells:
        tgt[Ts.index(T), Ks.index(K)] = p
    if np.any(np.isnan(tgt)):
        raise MalformedFileError("%s: target surface is not a full grid" % path)
    return Ts, Ks, tgt


def result_to_json(result, prob):
    return {
        "params": result.params,
        "objective": result.objective,
        "n_evals": result.n_evals,
        "restart": result.restart,
        "restart_objectives": result.restart_objectives,
        "rms_vol_bps": result.rms_vol_bps,
        "seed": prob.seed,
        "maturities": list(prob.maturities),
        "strikes": list(prob.strikes),
        "rel_errors": result.rel_errors.tolist(),
        "vol_diff_bps": [[None if not np.isfinite(v) else v for v in row]
                         for row in result.vol_diff_bps],
    }


def write_error_csv(path, result, prob):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["expiry", "strike", "market_price", "model_price", "rel_error", "vol_diff_bps"])
        for i, T in enumerate(prob.maturities):
            for j, K in enumerate(prob.strikes):
                w.writerow([repr(T), repr(K), repr(float(prob.targets[i, j])),
                            repr(float(result.model_prices[i, j])),
                            repr(float(result.rel_errors[i, j])),
                            repr(float(result.vol_diff_bps[i, j]))])


def problem_settings(prob):
    """JSON-able summary of a problem's search settings."""
    keep = ("variant", "label", "free", "em_eps", "margin", "restarts", "max_evals",
            "xtol", "ftol", "seed", "tol", "center", "box")
    d = {k: v for k, v in asdict(prob).items() if k in keep}
    d["free"] = list(d["free"])
    return json.loads(json.dumps(d))
