"""Quadrature over charts and the global functionals built on it.

Periodic axes use the trapezoid rule with equal weights (spectrally
accurate for smooth periodic integrands); box axes use Gauss-Legendre.
Integrals are accumulated with math.fsum over per-point contributions so
the result does not depend on how the grid is chunked.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chart import MetricData
from .extrinsic import Bundle

MAX_POINTS = 2_000_000


@dataclass(frozen=True)
class GridSpec:
    points: tuple          # points per axis

    @classmethod
    def default(cls, chart):
        return cls.uniform(chart, 48 if chart.dim <= 3 else 24)

    @classmethod
    def uniform(cls, chart, n):
        return cls((int(n),) * chart.dim)

    def validate(self, chart):
        if len(self.points) != chart.dim:
            raise ValueError("grid does not match the chart dimension")
        for k, (m, per) in enumerate(zip(self.points, chart.periodic)):
            if per and m < 8:
                raise ValueError(f"periodic axis {k + 1} needs at least 8 points")
            if m < 1:
                raise ValueError("empty grid axis")
        if int(np.prod(self.points)) > MAX_POINTS:
            raise ValueError("grid exceeds the point budget")


def nodes(chart, grid):
    """Tensor-product nodes X (M, d) and coordinate weights w (M,)."""
    grid.validate(chart)
    axes, wts = [], []
    for m, per, period, (lo, hi) in zip(grid.points, chart.periodic, chart.periods, chart.bounds()):
        if per:
            axes.append(np.arange(m) * (period / m))
            wts.append(np.full(m, period / m))
        else:
            x, w = np.polynomial.legendre.leggauss(m)
            axes.append(lo + (hi - lo) * (x + 1) / 2)
            wts.append(w * (hi - lo) / 2)
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([a.ravel() for a in mesh], axis=1)
    W = np.ones(len(X))
    wm = np.meshgrid(*wts, indexing="ij")
    for a in wm:
        W = W * a.ravel()
    return X, W


def _chunks(n, size):
    for s in range(0, n, size):
        yield slice(s, min(n, s + size))


def sweep(model, grid, fns, chunk=2048, bundle_factory=None):
    """Integrate several pointwise functions of the bundle at once.

    ``fns`` maps a name to ``f(bundle) -> (N,) array``; returns the dict of
    integrals of f * dvol.  Non-finite samples raise ValueError.
    """
    X, W = nodes(model.chart, grid)
    make = bundle_factory or (lambda Xs: Bundle(model, Xs))
    parts = {k: [] for k in fns}
    for sl in _chunks(len(X), chunk):
        b = make(X[sl])
        dv = W[sl] * b.density
        for k, f in fns.items():
            v = np.asarray(f(b), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite sample of {k}")
            parts[k].append(v * dv)
    return {k: math.fsum(np.concatenate(v)) for k, v in parts.items()}


def integrate_scalar(model, grid, f, **kw):
    return sweep(model, grid, {"f": f}, **kw)["f"]


def volume(model, grid, **kw):
    return integrate_scalar(model, grid, lambda b: np.ones(len(b.X)), **kw)


# -- pointwise quantities -----------------------------------------------------

def q_form(b):
    return b.top.s_ex() + b.perp.s_ex() + b.top.norm2_T() + b.perp.norm2_T()


def codim1_integrand(b):
    """tau1^2 - tau2 for p = 1 (D spanned by N), or the n = 1 flow form."""
    if b.p == 1:
        if np.max(np.abs(b.top.T)) > 1e-12:
            raise ValueError("codim1 form needs an integrable D~ when p = 1")
        N = b.nor[0]
        A = b.top.A[:, N][:, b.tan][:, :, b.tan]
        t1 = np.einsum("naa->n", A)
        return t1 ** 2 - np.einsum("nab,nba->n", A, A)
    if b.n == 1:
        N = b.tan[0]
        A = b.perp.A[:, N][:, b.nor][:, :, b.nor]
        t1 = np.einsum("naa->n", A)
        return t1 ** 2 - np.einsum("nab,nba->n", A, A) + b.perp.norm2_T()
    raise ValueError("codim1 method needs p = 1 or n = 1")


QUANTITIES = {
    "one": lambda b: np.ones(len(b.X)),
    "S_mix": lambda b: b.s_mix_frame(),
    "Q": q_form,
    "S_ex": lambda b: b.top.s_ex(),
    "S_ex_perp": lambda b: b.perp.s_ex(),
    "T2": lambda b: b.top.norm2_T(),
    "T2_perp": lambda b: b.perp.norm2_T(),
    "div_H": lambda b: b.top.div_H(),
    "div_H_perp": lambda b: b.perp.div_H(),
}


def globals_(model, grid, names=None, **kw):
    names = names or list(QUANTITIES)
    return sweep(model, grid, {k: QUANTITIES[k] for k in names}, **kw)


def j_mix(model, grid, method="direct", **kw):
    if not model.closed:
        raise ValueError("J_mix needs a closed (fully periodic) model")
    f = {"direct": QUANTITIES["S_mix"], "Q-form": q_form, "codim1": codim1_integrand}[method]
    if method == "codim1" and model.p != 1 and model.n != 1:
        raise ValueError("codim1 method needs p = 1 or n = 1")
    return integrate_scalar(model, grid, f, **kw)


def s_star(ints, n, p, side):
    """S*_mix(M,g) from a dict of global integrals (see :func:`globals_`)."""
    vol = ints["one"]
    mean = {k: v / vol for k, v in ints.items()}
    if side == "D":
        return mean["S_mix"] - (2.0 / p) * (mean["S_ex"] + 2 * mean["T2_perp"] - mean["T2"])
    if side == "Dt":
        return mean["S_mix"] - (2.0 / n) * (mean["S_ex_perp"] - mean["T2_perp"] + 2 * mean["T2"])
    raise ValueError(f"unknown side {side!r}")


def mean_and_s_star(model, grid, side="D", **kw):
    if not model.closed:
        raise ValueError("means need a closed model")
    ints = globals_(model, grid, **kw)
    vol = ints["one"]
    return {
        "volume": vol,
        "means": {k: v / vol for k, v in ints.items() if k != "one"},
        "S_star": s_star(ints, model.n, model.p, side),
    }


def mean(model, grid, f, **kw):
    r = sweep(model, grid, {"f": f, "one": QUANTITIES["one"]}, **kw)
    return r["f"] / r["one"]


def divergence_integral(model, grid, field, chunk=2048):
    """Integral of div xi, with ``field(X)`` an order-1 vector jet xi^i (N, d).

    Only the metric is needed here, so no Bundle is built.
    """
    X, W = nodes(model.chart, grid)
    parts = []
    for sl in _chunks(len(X), chunk):
        md = MetricData(model.metric_jet(X[sl], order=2))
        xi = field(X[sl])
        div = np.einsum("nii->n", xi.d1) + np.einsum("nkki,ni->n", md.gamma.v, xi.v)
        parts.append(div * W[sl] * md.density)
    return math.fsum(np.concatenate(parts))
