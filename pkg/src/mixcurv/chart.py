"""Coordinate charts and the Levi-Civita data of a metric on them.

The curvature tensor is built internally in the usual convention
R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y].  The mixed-curvature literature
this package follows uses the opposite sign in the first two slots; the
single conversion lives in :meth:`MetricData.riem` and every consumer goes
through it, so sectional curvature is +1 on the unit sphere.
"""

from dataclasses import dataclass, field

import numpy as np

from . import jets


class ModelError(ValueError):
    """Invalid geometric input: non-finite metric, not positive definite, ..."""


@dataclass(frozen=True)
class Chart:
    dim: int
    periodic: tuple
    periods: tuple
    box: tuple = field(default=())  # (lo, hi) per axis; ignored on periodic axes

    def __post_init__(self):
        if not 2 <= self.dim <= 4:
            raise ModelError(f"chart dimension {self.dim} not supported (2..4)")
        if len(self.periodic) != self.dim or len(self.periods) != self.dim:
            raise ModelError("periodicity data does not match the dimension")
        box = tuple(self.box) if self.box else tuple((0.0, p) for p in self.periods)
        object.__setattr__(self, "box", box)
        for per, flag, (lo, hi) in zip(self.periods, self.periodic, box):
            if flag and not per > 0:
                raise ModelError("periodic axes need a positive period")
            if not flag and not hi > lo:
                raise ModelError("degenerate domain box")

    @classmethod
    def torus(cls, dim, period=2 * np.pi):
        return cls(dim, (True,) * dim, (float(period),) * dim)

    @property
    def closed(self):
        return all(self.periodic)

    def bounds(self):
        return [(0.0, p) if f else b for f, p, b in zip(self.periodic, self.periods, self.box)]

    def sample(self, rng, n):
        lo = np.array([b[0] for b in self.bounds()])
        hi = np.array([b[1] for b in self.bounds()])
        return lo + (hi - lo) * rng.random((n, self.dim))


def coord_jets(X, nvars=None, order=2):
    """Order-``order`` jets of the coordinate functions at points ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    m = d if nvars is None else nvars
    return [jets.Jet.variable(X[:, k], k, m, order) for k in range(d)]


def check_metric(G):
    """Raise ModelError unless every matrix in the batch is finite and SPD."""
    if not np.all(np.isfinite(G)):
        raise ModelError("non-finite metric component")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise ModelError("metric is not positive definite") from None


class MetricData:
    """Inverse metric, Christoffel symbols and curvature from a metric jet.

    ``G`` is an order-2 jet with value shape (N, d, d) whose derivative
    variables are the chart coordinates.
    """

    def __init__(self, G):
        if G.order < 2:
            raise ValueError("curvature needs an order-2 metric jet")
        check_metric(G.v)
        self.G = G
        self.Ginv = jets.inv(G)
        self.density = np.sqrt(np.linalg.det(G.v))
        dG = G.deriv()  # [i, j, l] = d_l g_ij, order 1
        # first kind: G1[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        G1 = (dG.permute(0, 2, 3, 1) + dG.permute(0, 2, 1, 3) - dG.permute(0, 3, 1, 2)) * 0.5
        self.gamma = jets.einsum("nkl,nlij->nkij", self.Ginv.truncate(1), G1)
        self._riemann()

    def _riemann(self):
        Gm = self.gamma.v                 # [l, j, k]
        dGm = self.gamma.d1               # [l, j, k, i] = d_i Gamma^l_jk
        # R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
        dterm = np.einsum("nljki->nlijk", dGm)
        quad = jets.contract("nlim,nmjk->nlijk", Gm, Gm)
        Rup = dterm - dterm.transpose(0, 1, 3, 2, 4) + quad - quad.transpose(0, 1, 3, 2, 4)
        self.Rup = Rup
        # R[i,j,k,l] = g(R(d_i, d_j) d_k, d_l)
        self.Rstd = jets.contract("nlm,nmijk->nijkl", self.G.v, Rup)

    @property
    def gamma_values(self):
        return self.gamma.v

    def riem(self):
        """Paper-sign curvature Rp[i,j,k,l] = g(R'(d_i, d_j) d_k, d_l)."""
        return -self.Rstd

    def ricci(self):
        """Ric(X,Y) = Tr g(R'(X, .)Y, .)."""
        return jets.contract("nikjl,nkl->nij", self.riem(), self.Ginv.v)

    def scalar(self):
        return np.einsum("nij,nij->n", self.ricci(), self.Ginv.v)

    def sectional(self, v, w):
        v = np.broadcast_to(np.asarray(v, dtype=float), self.G.v.shape[:2])
        w = np.broadcast_to(np.asarray(w, dtype=float), self.G.v.shape[:2])
        g = self.G.v
        vv = np.einsum("ni,nij,nj->n", v, g, v)
        ww = np.einsum("ni,nij,nj->n", w, g, w)
        vw = np.einsum("ni,nij,nj->n", v, g, w)
        den = vv * ww - vw ** 2
        if np.any(den <= 1e-14 * np.maximum(vv * ww, 1e-300)):
            raise ValueError("degenerate plane for sectional curvature")
        num = np.einsum("nijkl,ni,nj,nk,nl->n", self.riem(), v, w, v, w)
        return num / den


def metric_at(model, X):
    """Metric matrices and volume densities at points ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = model.metric_jet(X, order=0).v
    check_metric(G)
    return G, np.sqrt(np.linalg.det(G))


def christoffel(model, X):
    """Gamma[n, k, i, j] = Gamma^k_ij at points ``X``."""
    return MetricData(model.metric_jet(np.atleast_2d(X), order=2)).gamma.v


def curvature(model, X):
    return MetricData(model.metric_jet(np.atleast_2d(X), order=2))
