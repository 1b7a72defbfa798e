"""Vectorised Gauss-Legendre helpers used by the deterministic integrals
and by the Fourier inversion."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


def panel_nodes(a, b, panels, order):
    """Nodes and weights of a composite rule with ``panels`` equal panels."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_smooth(f, a, b, order=16, rtol=1e-10, atol=1e-300, max_panels=1024):
    """Composite Gauss-Legendre with panel doubling.

    ``f`` takes a 1-D array of nodes and returns values whose last axis runs
    over the nodes.  Panels are doubled until two successive estimates agree
    elementwise to ``rtol`` (plus ``atol``).
    """
    if b == a:
        nodes, _ = panel_nodes(0.0, 1.0, 1, order)
        return np.zeros(np.shape(f(nodes))[:-1])[()]
    panels = 1
    nodes, weights = panel_nodes(a, b, panels, order)
    prev = f(nodes) @ weights
    while True:
        panels *= 2
        nodes, weights = panel_nodes(a, b, panels, order)
        cur = f(nodes) @ weights
        if np.all(np.abs(cur - prev) <= rtol * np.abs(cur) + atol):
            return cur
        if panels >= max_panels:
            raise RuntimeError(
                "Gauss-Legendre panel doubling did not converge on [%g, %g]" % (a, b)
            )
        prev = cur


def adaptive_panels(f, a, b, tol, order=16, initial_panels=16, max_level=30, max_active=1 << 14):
    """Adaptive panel subdivision with a two-halves error estimate.

    ``f`` maps a 1-D node array to values of shape ``(..., n_nodes)``; all
    leading components share the panel refinement.  A panel is accepted once
    the single-panel and split-panel estimates differ by less than its share
    ``tol * width / (b - a)``.  Refinement gives up after ``max_level``
    rounds or when more than ``max_active`` panels would be open.

    Returns ``(integral, error_estimate, converged)``.
    """
    x, w = gauss_legendre(order)
    x2 = np.concatenate([0.5 * (x - 1.0), 0.5 * (x + 1.0)])
    w2 = np.concatenate([0.5 * w, 0.5 * w])
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    total = None
    err = 0.0
    for _ in range(max_level):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        n_pan = lo.size
        coarse_nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        fine_nodes = (mid[:, None] + half[:, None] * x2[None, :]).ravel()
        vals = f(np.concatenate([coarse_nodes, fine_nodes]))
        lead = vals.shape[:-1]
        vc = vals[..., : coarse_nodes.size].reshape(lead + (n_pan, x.size))
        vf = vals[..., coarse_nodes.size :].reshape(lead + (n_pan, x2.size))
        coarse = (vc @ w) * half
        fine = (vf @ w2) * half
        diff = np.abs(fine - coarse)
        if diff.ndim > 1:
            diff = diff.reshape(-1, n_pan).max(axis=0)
        ok = diff <= tol * (hi - lo) / (b - a)
        acc = fine[..., ok].sum(axis=-1)
        total = acc if total is None else total + acc
        err += float(diff[ok].sum())
        if ok.all():
            return total, err, True
        lo_bad, hi_bad = lo[~ok], hi[~ok]
        if 2 * lo_bad.size > max_active:
            break
        mid_bad = 0.5 * (lo_bad + hi_bad)
        lo = np.concatenate([lo_bad, mid_bad])
        hi = np.concatenate([mid_bad, hi_bad])
    rest = (fine[..., ~ok]).sum(axis=-1)
    err += float(diff[~ok].sum())
    return total + rest, err, False
