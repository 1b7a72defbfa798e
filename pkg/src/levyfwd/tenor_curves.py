"""Tenor structures and the already-bootstrapped initial curves.

Discount factors live on the fine (basic) grid; each risky curve lives on a
coarser sub-grid whose dates are a subset of the fine ones.  Curves are read
from strict CSV files:

* discount: ``maturity_years,discount_factor``
* FRA, one file per tenor: ``start_years,end_years,fra_rate``
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DateNotOnGridError,
    MalformedFileError,
    MissingPillarError,
    NonPositiveDiscountError,
)

DATE_TOL = 1e-9

DISCOUNT_HEADER = ["maturity_years", "discount_factor"]
FRA_HEADER = ["start_years", "end_years", "fra_rate"]


@dataclass(frozen=True)
class TenorGrid:
    """Equidistant fine grid ``T_0 < ... < T_n = T*`` plus nested coarse sub-grids.

    ``sub_grids`` maps a tenor label (e.g. ``"6m"``) to the indices of the fine
    dates that make up that curve's tenor structure.
    """

    dates: tuple
    sub_grids: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.dates, dtype=float)
        object.__setattr__(self, "dates", tuple(float(x) for x in d))
        if d.size < 2 or np.any(np.diff(d) <= 0):
            raise ValueError("tenor dates must be strictly increasing with n >= 1")
        steps = np.diff(d)
        if np.max(np.abs(steps - steps[0])) > DATE_TOL:
            raise ValueError("fine tenor grid must be equidistant")
        n = d.size - 1
        subs = {}
        for label, idx in self.sub_grids.items():
            idx = tuple(int(i) for i in idx)
            if idx[0] != 0 or idx[-1] != n or any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("sub-grid %r must start at T_0, end at T_n and increase" % label)
            gaps = np.diff(idx)
            if np.any(gaps != gaps[0]):
                raise ValueError("sub-grid %r must be equidistant" % label)
            subs[label] = idx
        # nesting: ordered by coarseness, each coarser grid inside the finer one
        ordered = sorted(subs.values(), key=len)
        for coarse, fine in zip(ordered, ordered[1:]):
            if not set(coarse) <= set(fine):
                raise ValueError("risky sub-grids must be nested")
        object.__setattr__(self, "sub_grids", subs)

    @classmethod
    def equidistant(cls, delta, n, sub_tenors=None, start=0.0):
        """Fine grid ``start + k*delta``; ``sub_tenors`` maps label -> year fraction."""
        dates = [start + k * delta for k in range(n + 1)]
        subs = {}
        for label, d_i in (sub_tenors or {}).items():
            ratio = d_i / delta
            step = int(round(ratio))
            if abs(ratio - step) > 1e-9 or step < 1 or n % step:
                raise ValueError(
                    "tenor %r (%g) must be an integer multiple of delta dividing the grid"
                    % (label, d_i)
                )
            subs[label] = tuple(range(0, n + 1, step))
        return cls(tuple(dates), subs)

    @property
    def n(self):
        return len(self.dates) - 1

    @property
    def delta(self):
        return self.dates[1] - self.dates[0]

    @property
    def T_star(self):
        return self.dates[-1]

    def index(self, T):
        k = int(round((T - self.dates[0]) / self.delta))
        if k < 0 or k > self.n or abs(self.dates[k] - T) > DATE_TOL:
            raise DateNotOnGridError(T)
        return k

    def J(self, T, S):
        """Fine indices h with ``T < T_h <= S``."""
        return range(self.index(T) + 1, self.index(S) + 1)

    def sub_dates(self, label):
        return [self.dates[i] for i in self.sub_grids[label]]

    def sub_delta(self, label):
        idx = self.sub_grids[label]
        return self.dates[idx[1]] - self.dates[idx[0]]

    def periods(self, label):
        """Coarse periods ``(T^i_{k-1}, T^i_k)`` for ``k = 1..n_i``."""
        d = self.sub_dates(label)
        return list(zip(d[:-1], d[1:]))


@dataclass(frozen=True, eq=False)
class CurveSet:
    """Initial discount factors and FRA rates.

    ``discount`` is a pair of arrays (maturities, factors); ``fra`` maps a
    tenor label to a dict keyed by fine-grid index pairs.
    """

    grid: TenorGrid
    discount_times: np.ndarray
    discount_factors: np.ndarray
    fra: dict

    def __post_init__(self):
        if np.any(np.asarray(self.discount_factors) <= 0):
            raise NonPositiveDiscountError("discount factors must be positive")

    @classmethod
    def from_functions(cls, grid, discount, fra=None):
        """Build from callables: ``discount(T)`` and ``fra[label](Ta, Tb)``."""
        t = np.asarray(grid.dates)
        b = np.array([discount(x) for x in t], dtype=float)
        if t[0] > 0:
            t, b = np.concatenate([[0.0], t]), np.concatenate([[1.0], b])
        rates = {}
        for label, fn in (fra or {}).items():
            idx = grid.sub_grids[label]
            rates[label] = {
                (i, j): float(fn(grid.dates[i], grid.dates[j])) for i, j in zip(idx, idx[1:])
            }
        return cls(grid, t, b, rates)

    def discount(self, T):
        """B_0(T), log-linear between pillars, flat log-slope extrapolation."""
        t, b = self.discount_times, self.discount_factors
        return float(np.exp(np.interp(T, t, np.log(b))))

    def fra_rate(self, label, Ta, Tb):
        key = (self.grid.index(Ta), self.grid.index(Tb))
        try:
            return self.fra[label][key]
        except KeyError:
            raise MissingPillarError("no FRA rate for %s period (%g, %g)" % (label, Ta, Tb))


def initial_forward_price(cs, T_a, T_b):
    """F(0, T_a, T_b) as the product of fine-period forward prices."""
    ia, ib = cs.grid.index(T_a), cs.grid.index(T_b)
    if ib < ia:
        raise ValueError("need T_a <= T_b")
    out = 1.0
    for j in range(ia + 1, ib + 1):
        out *= cs.discount(cs.grid.dates[j - 1]) / cs.discount(cs.grid.dates[j])
    return out


def initial_spread(cs, label, k):
    """Multiplicative spread S^i(0) of coarse period ``k`` (1-based)."""
    Ta, Tb = cs.grid.periods(label)[k - 1]
    d_i = Tb - Ta
    return (1.0 + d_i * cs.fra_rate(label, Ta, Tb)) / initial_forward_price(cs, Ta, Tb)


def additive_spread(cs, label, k):
    """s^i(0) = L^i(0) - L^d(0) over the same coarse period."""
    Ta, Tb = cs.grid.periods(label)[k - 1]
    d_i = Tb - Ta
    l_d = (initial_forward_price(cs, Ta, Tb) - 1.0) / d_i
    return cs.fra_rate(label, Ta, Tb) - l_d


def _read_rows(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MalformedFileError("cannot read %s: %s" % (path, exc))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != header:
        raise MalformedFileError("%s: expected header %s" % (path, ",".join(header)))
    out = []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise MalformedFileError("%s:%d: expected %d columns" % (path, line, len(header)))
        try:
            vals = [float(c) for c in r]
        except ValueError:
            raise MalformedFileError("%s:%d: non-numeric field" % (path, line))
        if not all(math.isfinite(v) for v in vals):
            raise MalformedFileError("%s:%d: non-finite field" % (path, line))
        out.append(vals)
    return np.array(out, dtype=float).reshape(-1, len(header))


def _find(times, T):
    k = int(np.argmin(np.abs(times - T))) if times.size else -1
    return k if k >= 0 and abs(times[k] - T) <= DATE_TOL else None


def load_curves(discount_file, fra_files, grid):
    """Read the discount CSV and one FRA CSV per ``(label, path)``.

    Every fine-grid date needs a discount pillar (``T = 0`` defaults to 1) and
    every coarse period of each labelled sub-grid needs an FRA row.
    """
    data = _read_rows(discount_file, DISCOUNT_HEADER)
    t, b = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise MalformedFileError("%s: maturities must be strictly increasing" % discount_file)
    if np.any(b <= 0):
        raise NonPositiveDiscountError("%s: discount factors must be positive" % discount_file)
    if _find(t, 0.0) is None:
        t, b = np.concatenate([[0.0], t]), np.concatenate([[1.0], b])
        order = np.argsort(t, kind="stable")
        t, b = t[order], b[order]
    for T in grid.dates:
        if _find(t, T) is None:
            raise MissingPillarError("discount curve has no pillar at T=%g" % T)

    rates = {}
    for label, path in fra_files:
        if label not in grid.sub_grids:
            raise MalformedFileError("unknown tenor label %r" % label)
        rows = _read_rows(path, FRA_HEADER)
        if np.any(np.diff(rows[:, 0]) < 0) or np.any(rows[:, 1] <= rows[:, 0]):
            raise MalformedFileError("%s: rows must be sorted with start < end" % path)
        table = {}
        for Ta, Tb in grid.periods(label):
            hit = np.nonzero(
                (np.abs(rows[:, 0] - Ta) <= DATE_TOL) & (np.abs(rows[:, 1] - Tb) <= DATE_TOL)
            )[0]
            if hit.size == 0:
                raise MissingPillarError("%s: no FRA row for (%g, %g)" % (path, Ta, Tb))
            table[(grid.index(Ta), grid.index(Tb))] = float(rows[hit[0], 2])
        rates[label] = table
    return CurveSet(grid, t, b, rates)


def write_discount_csv(path, times, factors):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(DISCOUNT_HEADER)
        for T, B in zip(times, factors):
            w.writerow([repr(float(T)), repr(float(B))])


def write_fra_csv(path, periods, rates):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FRA_HEADER)
        for (Ta, Tb), r in zip(periods, rates):
            w.writerow([repr(float(Ta)), repr(float(Tb)), repr(float(r))])
