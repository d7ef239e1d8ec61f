"""Built-in almost-product models and the Model container.

Every model is described by expressions in the chart coordinates x1..xd:
metric components g_ij, fields spanning one distribution and optional
parameters.  ``mode='top'`` means the fields span D~ (D is the orthogonal
complement); ``mode='perp'`` means they span D.

Closed-form reference data (hand-derived) is attached as plain callables of
the point array and is consumed by the test-suite only.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import expr as ex
from . import jets
from .chart import Chart, ModelError, coord_jets

TWO_PI = 2 * math.pi


def _as_expr(e, dim, params):
    if isinstance(e, ex.Expr):
        ex.check_names(e, dim, params)
        return e
    if isinstance(e, (int, float)):
        return ex.Const(e)
    return ex.parse(str(e), dim=dim, params=params)


@dataclass(frozen=True)
class Model:
    name: str
    chart: Chart
    metric: tuple            # d x d tuple of Expr (symmetric)
    fields: tuple            # k vectors, each a d-tuple of Expr
    mode: str = "top"
    params: dict = field(default_factory=dict)
    scalar: object = None    # optional Expr u (level-set models)
    reference: dict = field(default_factory=dict, compare=False, repr=False)
    notes: str = ""

    @classmethod
    def build(cls, name, chart, metric, fields, mode="top", params=None,
              scalar=None, reference=None, notes=""):
        params = dict(params or {})
        d = chart.dim
        names = set(params)
        g = [[None] * d for _ in range(d)]
        for i in range(d):
            for j in range(d):
                g[i][j] = _as_expr(metric[i][j], d, names)
        for i in range(d):
            for j in range(i):
                if ex.to_text(g[i][j]) != ex.to_text(g[j][i]):
                    raise ModelError(f"metric is not symmetric in ({i + 1},{j + 1})")
        vs = tuple(tuple(_as_expr(c, d, names) for c in v) for v in fields)
        if any(len(v) != d for v in vs):
            raise ModelError("field component count does not match the dimension")
        if not 1 <= len(vs) <= d - 1:
            raise ModelError("need between 1 and d-1 spanning fields")
        if mode not in ("top", "perp"):
            raise ModelError(f"unknown mode {mode!r}")
        u = None if scalar is None else _as_expr(scalar, d, names)
        return cls(name, chart, tuple(tuple(r) for r in g), vs, mode, params,
                   u, dict(reference or {}), notes)

    # -- shape ---------------------------------------------------------------

    @property
    def dim(self):
        return self.chart.dim

    @property
    def n(self):
        """Rank of D~."""
        k = len(self.fields)
        return k if self.mode == "top" else self.dim - k

    @property
    def p(self):
        return self.dim - self.n

    @property
    def closed(self):
        return self.chart.closed

    def swapped(self):
        """Same geometry with the roles of D~ and D exchanged."""
        mode = "perp" if self.mode == "top" else "top"
        return replace(self, name=self.name + "*", mode=mode, reference={})

    def with_params(self, **kw):
        return build_model(self.name, **{**self.params, **kw})

    # -- evaluation -------------------------------------------------------

    def env(self, X, order=2, nvars=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if order == 0:
            xs = [X[:, k] for k in range(self.dim)]
        else:
            xs = coord_jets(X, nvars, order)
        env = {f"x{k + 1}": x for k, x in enumerate(xs)}
        env.update({k: float(v) for k, v in self.params.items()})
        return env, X.shape[0]

    def _matrix(self, rows, env, n, order, nvars):
        comps = [[ex.evaluate(e, env) for e in r] for r in rows]
        return _assemble(comps, n, order, nvars)

    def metric_jet(self, X, order=2, nvars=None):
        env, n = self.env(X, order, nvars)
        return self._matrix(self.metric, env, n, order, nvars or self.dim)

    def fields_jet(self, X, order=2, nvars=None):
        """Jet with value shape (N, d, k): columns are the spanning fields."""
        env, n = self.env(X, order, nvars)
        cols = [[ex.evaluate(c, env) for c in v] for v in self.fields]
        rows = [[cols[a][i] for a in range(len(cols))] for i in range(self.dim)]
        return _assemble(rows, n, order, nvars or self.dim)

    def scalar_jet(self, X, order=2):
        if self.scalar is None:
            raise ModelError("model carries no scalar field")
        env, n = self.env(X, order)
        return jets.broadcast_scalar(ex.evaluate(self.scalar, env), n, self.dim, order) \
            if order else np.broadcast_to(ex.evaluate(self.scalar, env), (n,))

    def reference_value(self, quantity, X):
        if quantity not in self.reference:
            raise KeyError(f"no closed form for {quantity!r} on {self.name}")
        return self.reference[quantity](np.atleast_2d(np.asarray(X, dtype=float)), self.params)

    def describe(self):
        return {
            "name": self.name,
            "dim": self.dim,
            "n": self.n,
            "p": self.p,
            "closed": self.closed,
            "mode": self.mode,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
        }


def _assemble(rows, n, order, nvars):
    """Stack a nested list of scalars/jets into one jet (or array)."""
    if order == 0:
        return jets.Jet(np.stack([np.stack([np.broadcast_to(jets.value(c), (n,)) for c in r],
                                           axis=1) for r in rows], axis=1))
    line = [jets.stack([jets.broadcast_scalar(c, n, nvars, order) for c in r], axis=1)
            for r in rows]
    return jets.stack(line, axis=1)


# -- builtins ----------------------------------------------------------------

def _diag(entries):
    d = len(entries)
    return [[entries[i] if i == j else "0" for j in range(d)] for i in range(d)]


def _unit(d, k, scale="1"):
    return ["0" if i != k else scale for i in range(d)]


def flat_torus(d=3, n=1):
    d, n = int(d), int(n)
    if not 1 <= n <= d - 1:
        raise ModelError("FlatTorus needs 1 <= n <= d-1")
    zero = lambda X, p: np.zeros(len(X))
    return Model.build(
        "FlatTorus", Chart.torus(d), _diag(["1"] * d),
        [_unit(d, k) for k in range(n)], params={"d": d, "n": n},
        reference={"S_mix": zero, "S_ex": zero, "J_integrand": zero, "K": zero})


def _wt_ref():
    def f1(X, p):
        return -p["a"] * np.sin(X[:, 2])

    def f2(X, p):
        return -p["a"] * np.cos(X[:, 2])

    return {
        "f'": f1,
        "f''": f2,
        "Gamma^x_xz": f1,
        "S_mix": lambda X, p: -2 * (f2(X, p) + f1(X, p) ** 2),
        "S_ex": lambda X, p: 2 * f1(X, p) ** 2,
        "H_z": lambda X, p: -2 * f1(X, p),
        "div_H": lambda X, p: -2 * f2(X, p) - 4 * f1(X, p) ** 2,
        "sectional_zx": lambda X, p: -(f2(X, p) + f1(X, p) ** 2),
        "Ric_zz": lambda X, p: -2 * (f2(X, p) + f1(X, p) ** 2),
        "J_integrand": lambda X, p: 2 * p["a"] ** 2 * np.sin(X[:, 2]) ** 2,
        "density": lambda X, p: np.exp(2 * p["a"] * np.cos(X[:, 2])),
    }


def warped_torus(a=0.3):
    w = "exp(2*a*cos(x3))"
    return Model.build(
        "WT", Chart.torus(3), _diag([w, w, "1"]), [_unit(3, 0), _unit(3, 1)],
        params={"a": float(a)}, reference=_wt_ref(),
        notes="e^{2f}(dx^2+dy^2)+dz^2 with f = a cos z; leaves z = const")


def double_twisted(f1="0.2*cos(x3)", f2="0.1*cos(x1)"):
    """e^{f1}(dx1^2+dx2^2) + e^{f2}(dx3^2+dx4^2) on the 4-torus.

    Koszul's formula gives h = -1/2 (grad_D f1) g~ and h~ = -1/2 (grad_D~ f2) g_perp;
    both families are umbilic.
    """
    e1 = f"exp({f1})"
    e2 = f"exp({f2})"
    return Model.build("DT", Chart.torus(4), _diag([e1, e1, e2, e2]),
                       [_unit(4, 0), _unit(4, 1)], notes=f"f1={f1}; f2={f2}")


def contact_torus(eps=0.5):
    return Model.build(
        "CT", Chart.torus(3), _diag(["1"] * 3),
        [_unit(3, 0), ["0", "1", "eps*cos(x1)"]], params={"eps": float(eps)},
        reference={"T_norm2": _ct_T2})


def _ct_T2(X, p):
    # [dx, dy + eps cos x dz] = -eps sin x dz; T(E1,E2) = 1/2 [E1,E2]^perp
    e, x = p["eps"], X[:, 0]
    u2 = 1 + (e * np.cos(x)) ** 2
    # normal unit vector: (0, -e cos x, 1)/sqrt(u2); bracket/(|E2|) projected
    br_perp = (-e * np.sin(x)) / np.sqrt(u2)       # component on the unit normal
    t = 0.5 * br_perp / np.sqrt(u2)                # E2 has length sqrt(u2)
    return 2 * t ** 2                              # T(E1,E2) and T(E2,E1)


def nonintegrable4(eps=0.5):
    return Model.build(
        "NI4", Chart.torus(4), _diag(["1"] * 4),
        [["0", "-eps*cos(x1)", "1", "0"], _unit(4, 3)], params={"eps": float(eps)},
        notes="D = span(d1, d2 + eps cos x1 d3) is not integrable; D~ is")


def sphere_leaf(delta=0.05):
    chart = Chart(3, (False, True, True), (1.0, TWO_PI, TWO_PI),
                  ((delta, math.pi / 2 - delta), (0.0, TWO_PI), (0.0, TWO_PI)))
    zero = lambda X, p: np.zeros(len(X))
    return Model.build(
        "SphereLeaf", chart, _diag(["1", "sin(x1)^2", "cos(x1)^2"]),
        [_unit(3, 0), _unit(3, 1)], reference={"h": zero},
        notes="unit 3-sphere minus a circle as a warped product with leaves S^2_+")


def half_plane(c=1.0):
    c = float(c)
    if not c > 0:
        raise ModelError("HP needs c > 0")
    chart = Chart(2, (False, False), (1.0, 1.0), ((-1.0, 1.0), (-c / 2 + 0.25, -c / 2 + 3.0)))
    w = "1/(2*x2+c)"
    return Model.build(
        "HP", chart, _diag([w, w]), [_unit(2, 0)], params={"c": c},
        reference={"K": lambda X, p: -2.0 / (2 * X[:, 1] + p["c"])},
        notes="conformally flat half-plane metric")


def level_set(u="x1^2-x2^2", metric=None, box=((0.5, 1.5), (0.5, 1.5)), params=None):
    """D spanned by grad u; D~ are the level sets of u."""
    ue = ex.parse(u, dim=2, params=set(params or {}))
    g = metric or _diag(["1", "1"])
    d = 2
    gm = [[_as_expr(g[i][j], d, set(params or {})) for j in range(d)] for i in range(d)]
    # grad u = g^{-1} du; for a 2x2 metric the inverse is adj/det
    det = gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0]
    du = [ex.diff(ue, "x1"), ex.diff(ue, "x2")]
    grad = [(gm[1][1] * du[0] - gm[0][1] * du[1]) / det,
            (gm[0][0] * du[1] - gm[1][0] * du[0]) / det]
    chart = Chart(2, (False, False), (1.0, 1.0), tuple(tuple(b) for b in box))
    return Model.build("LevelSet", chart, gm, [grad], mode="perp", params=params,
                       scalar=ue, notes="level curves of u")


BUILTINS = {
    "FlatTorus": flat_torus,
    "WT": warped_torus,
    "DT": double_twisted,
    "CT": contact_torus,
    "NI4": nonintegrable4,
    "SphereLeaf": sphere_leaf,
    "HP": half_plane,
    "LevelSet": level_set,
}


def build_model(name, **params):
    if name not in BUILTINS:
        raise ModelError(f"unknown model {name!r}; known: {', '.join(sorted(BUILTINS))}")
    try:
        return BUILTINS[name](**params)
    except TypeError as exc:
        raise ModelError(f"invalid parameters for {name}: {exc}") from None


def closed_form_reference(model, quantity, X):
    return model.reference_value(quantity, X)
