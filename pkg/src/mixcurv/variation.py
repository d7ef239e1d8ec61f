"""One-parameter adapted metric families and checks of the variation lemmas.

A family is g_t = g + t S0 (or any metric callable of (X, t)).  For a
D-variation S0 is D-truncated, S0(X~, .) = 0 for X~ in D~, so D~ and D stay
g_t-orthogonal and only the D-block moves; dually for D~.  S = d/dt g_t is
an order-2 jet in the chart coordinates, so covariant derivatives of S
are exact.

Time derivatives are central differences with one Richardson level on the
steps h and h/2 (defaults 1e-3 and 5e-4).  Frames are rebuilt at each t
by Gram-Schmidt; checked quantities are either coordinate components of
tensors (coordinates do not move with t) or frame-invariant scalars.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import euler_lagrange as EL
from . import expr as ex
from . import integrate as I
from . import jets
from .chart import MetricData
from .extrinsic import Bundle, block, to_frame
from .splitting import projectors

STEP = 1e-3
REL_TOL = 1e-4
ZERO_TOL = 1e-9

SIDES = ("D", "Dt")


class FamilyError(ValueError):
    pass


# -- families ------------------------------------------------------------------

@dataclass(frozen=True)
class MetricFamily:
    """Adapted family through the base metric of ``base``.

    ``tensor(X, G, P, Q)`` returns the coordinate jet S0 (N, d, d) from the
    base metric jet and projectors; or ``metric_exprs`` gives g_ij(t) as
    expressions in x1..xd and t.
    """
    base: object
    side: str                      # 'D', 'Dt' or 'general'
    name: str = "family"
    tensor: object = None
    metric_exprs: tuple = None
    conformal: bool = False
    eps: float = 0.5
    t_range: tuple = None          # overrides (-eps, eps) when given
    info: dict = field(default_factory=dict, compare=False)

    def metric(self, X, t, order=2):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.metric_exprs is not None:
            return self._expr_jet(self.metric_exprs, X, t, order)
        G = self.base.metric_jet(X, order=order)
        if t == 0.0:
            return G
        return G + self.S0(X, order) * float(t)

    def S0(self, X, order=2):
        G = self.base.metric_jet(X, order=order)
        V = self.base.fields_jet(X, order=order)
        P, Q = projectors(G, V, self.base.mode)
        return self.tensor(X, G, P, Q)

    def S(self, X, t=0.0, order=2):
        """S_t = d/dt g_t as a coordinate jet."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.metric_exprs is not None:
            dS = tuple(tuple(ex.diff(e, "t") for e in row) for row in self.metric_exprs)
            return self._expr_jet(dS, X, t, order, check=False)
        return self.S0(X, order)

    def _expr_jet(self, rows, X, t, order, check=True):
        from .models import _assemble
        env, n = self.base.env(X, order)
        env["t"] = float(t)
        comps = [[ex.evaluate(e, env) for e in r] for r in rows]
        return _assemble(comps, n, order, self.base.dim)

    def bundle(self, X, t):
        return Bundle(self.base, X, metric_jet=self.metric(X, t))

    def check_t(self, t):
        lo, hi = self.t_range or (-self.eps, self.eps)
        if not lo < t < hi:
            raise FamilyError(f"t = {t} outside the family range ({lo}, {hi})")


def _lower_proj(M, sigma):
    """(M^T sigma M)_ij = M^k_i sigma_kl M^l_j for jets."""
    a = jets.einsum("nkl,nlj->nkj", sigma, M)
    return jets.einsum("nki,nkj->nij", M, a)


def _perp_metric(G, M):
    """g(M., M.) for a projector M."""
    return _lower_proj(M, G)


def static_family(model):
    return MetricFamily(model, "general", "static",
                        tensor=lambda X, G, P, Q: G * 0.0)


def homothety(model, side="D"):
    """g_t^perp = (1+t) g^perp (or the D~ block for side 'Dt')."""
    def tensor(X, G, P, Q):
        return _perp_metric(G, Q if side == "D" else P)
    return MetricFamily(model, side, "homothety", tensor=tensor, conformal=True, eps=0.99,
                        t_range=(-0.99, 10.0))


def _trig_field(X, modes, order, nvars):
    """sum_m (a_m cos(m.x) + b_m sin(m.x)) + c as a scalar jet."""
    xs = [jets.Jet.variable(X[:, k], k, nvars, order) for k in range(X.shape[1])]
    out = jets.Jet.constant(modes["c"], (len(X),), nvars, order)
    for m, a, b in modes["terms"]:
        arg = jets.Jet.constant(0.0, (len(X),), nvars, order)
        for k, mk in enumerate(m):
            if mk:
                arg = arg + xs[k] * float(mk)
        out = out + jets.cos(arg) * a + jets.sin(arg) * b
    return out


def _random_modes(rng, d, amp, nterms=2):
    terms = []
    for _ in range(nterms):
        m = rng.integers(-1, 2, size=d)
        if not m.any():
            m[rng.integers(d)] = 1
        terms.append((tuple(int(x) for x in m), amp * rng.standard_normal(), amp * rng.standard_normal()))
    return {"c": amp * rng.standard_normal(), "terms": terms}


def random_family(model, side="D", seed=0, kind="general", amp=0.3):
    """Seeded smooth family g + t S0 with S0 truncated to ``side``.

    ``kind='general'``: S0 = M^T sigma M for a random symmetric trig field
    sigma and M the projector onto the varied distribution.
    ``kind='conformal'``: S0 = s g_side with a random trig function s.
    """
    if side not in SIDES:
        raise FamilyError(f"unknown side {side!r}")
    rng = np.random.default_rng(seed)
    d = model.dim
    if kind == "general":
        sig = {(i, j): _random_modes(rng, d, amp) for i in range(d) for j in range(i, d)}
    elif kind == "conformal":
        sig = {"s": _random_modes(rng, d, amp)}
    else:
        raise FamilyError(f"unknown family kind {kind!r}")

    def tensor(X, G, P, Q):
        M = Q if side == "D" else P
        order = G.order
        if kind == "conformal":
            s = _trig_field(X, sig["s"], order, d)
            return _scale(_perp_metric(G, M), s)
        comps = [[None] * d for _ in range(d)]
        for (i, j), modes in sig.items():
            f = _trig_field(X, modes, order, d)
            comps[i][j] = comps[j][i] = f
        rows = [jets.stack(r, axis=1) for r in comps]
        sigma = jets.stack(rows, axis=1)
        return _lower_proj(M, sigma)

    return MetricFamily(model, side, f"random-{kind}-{side}-{seed}", tensor=tensor,
                        conformal=(kind == "conformal"), eps=0.05,
                        info={"seed": seed, "kind": kind})


def _scale(T, s):
    """Multiply a (N, d, d) jet by a scalar jet."""
    return jets.einsum("nij,n->nij", T, s)


def expr_family(model, metric_texts, side="general", eps=0.5, name="expr"):
    """Family from g_ij(t) expressions; 't' is the family parameter."""
    d = model.dim
    params = set(model.params)
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            e = metric_texts[i][j]
            row.append(e if isinstance(e, ex.Expr)
                       else ex.parse(str(e), dim=d, params=params, allow_t=True))
        rows.append(tuple(row))
    return MetricFamily(model, side, name, metric_exprs=tuple(rows), eps=eps)


# -- evaluation at t -----------------------------------------------------------

def check_adapted(family, X, t=0.0, tol=1e-10):
    """Raise FamilyError unless S is adapted (and truncated to the declared side)."""
    b = family.bundle(X, t)
    S = family.S(X, t).v
    Sf = to_frame(b.U, S)
    tan, nor = b.tan, b.nor
    scale = max(1.0, float(np.max(np.abs(Sf))))
    mixed = float(np.max(np.abs(Sf[:, tan][:, :, nor]))) if len(tan) and len(nor) else 0.0
    if mixed > tol * scale:
        raise FamilyError(f"S is not adapted: mixed block {mixed:.3e}")
    if family.side == "D" and float(np.max(np.abs(block(Sf, tan)))) > tol * scale:
        raise FamilyError("declared D-variation moves the D~ block")
    if family.side == "Dt" and float(np.max(np.abs(block(Sf, nor)))) > tol * scale:
        raise FamilyError("declared D~-variation moves the D block")
    return b, S


def family_eval(family, X, t=0.0):
    """(model data at t, S_t) with adaptedness asserted."""
    family.check_t(t)
    b, S = check_adapted(family, X, t)
    return b, S


# -- finite differences ----------------------------------------------------------

def fd_derivative(f, h=STEP):
    """Central difference with one Richardson level; (value, error estimate)."""
    fp, fm = np.asarray(f(h), dtype=float), np.asarray(f(-h), dtype=float)
    gp, gm = np.asarray(f(h / 2), dtype=float), np.asarray(f(-h / 2), dtype=float)
    for a in (fp, fm, gp, gm):
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite evaluation in finite difference")
    d1 = (fp - fm) / (2 * h)
    d2 = (gp - gm) / h
    r = (4 * d2 - d1) / 3
    return r, np.abs(r - d2)


def fd_time_derivative(family, quantity, X=None, grid=None, h=STEP):
    """d/dt at t = 0 of a pointwise quantity (at X) or a global one (on grid).

    ``quantity`` is a name from QUANTITIES (pointwise) or GLOBALS, or a
    callable of a Bundle.
    """
    if grid is not None:
        fn = GLOBALS[quantity] if isinstance(quantity, str) else quantity
        return fd_derivative(lambda t: fn(family, t, grid), h)
    fn = POINTWISE[quantity] if isinstance(quantity, str) else quantity
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return fd_derivative(lambda t: fn(family.bundle(X, t)), h)


POINTWISE = {
    "S_mix": lambda b: b.s_mix_frame(),
    "norm2_h": lambda b: b.top.norm2_h(),
    "norm2_H": lambda b: b.top.norm2_H(),
    "norm2_ht": lambda b: b.perp.norm2_h(),
    "norm2_Ht": lambda b: b.perp.norm2_H(),
    "norm2_T": lambda b: b.top.norm2_T(),
    "norm2_Tt": lambda b: b.perp.norm2_T(),
    "one": lambda b: np.ones(len(b.X)),
}


def volume_at(family, t, grid):
    family.check_t(t)
    X, W = I.nodes(family.base.chart, grid)
    G = family.metric(X, t, order=0).v
    return math.fsum(W * np.sqrt(np.linalg.det(G)))


def j_at(family, t, grid, chunk=2048):
    family.check_t(t)
    fac = lambda Xs: family.bundle(Xs, t)
    return I.integrate_scalar(family.base, grid, I.QUANTITIES["S_mix"],
                              chunk=chunk, bundle_factory=fac)


GLOBALS = {
    "volume": volume_at,
    "J_mix": j_at,
}


# -- lemma residuals -----------------------------------------------------------

def _cov2(S, gamma):
    """Values of nabla_l S_ij; order [l, i, j]."""
    Gm = gamma.v
    out = np.einsum("nijl->nlij", S.d1)
    out = out - np.einsum("nrli,nrj->nlij", Gm, S.v)
    out = out - np.einsum("nrlj,nir->nlij", Gm, S.v)
    return out


def _cmp(fd, formula):
    """Relative error, falling back to an absolute check when both vanish."""
    fd, formula = np.asarray(fd), np.asarray(formula)
    err = float(np.max(np.abs(fd - formula))) if fd.size else 0.0
    scale = max(float(np.max(np.abs(formula))) if fd.size else 0.0,
                float(np.max(np.abs(fd))) if fd.size else 0.0)
    if scale < ZERO_TOL:
        return {"abs": err, "rel": 0.0 if err < ZERO_TOL else math.inf, "scale": scale}
    return {"abs": err, "rel": err / scale, "scale": scale}


def _roles(b, side):
    """(varied Side, fixed Side, projector onto varied, projector onto fixed)."""
    if side == "D":
        return b.perp, b.top, b.Q.v, b.P.v
    return b.top, b.perp, b.P.v, b.Q.v


def lemma_residuals(family, X, h=STEP):
    """FD-vs-formula comparisons of the pointwise variation lemmas at X.

    Keys follow the quantity being differentiated; the "varied" distribution
    is D for a D-variation (its second fundamental form is h~) and D~ for a
    D~-variation (the dual statements).
    """
    side = family.side
    if side not in SIDES:
        raise FamilyError("lemma residuals need a D- or D~-variation")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    b, _ = family_eval(family, X, 0.0)
    Sj = family.S(X, 0.0)
    S = Sj.v
    md = b.md
    Ginv = md.Ginv.v
    Ssh = np.einsum("nik,nkj->nij", Ginv, S)             # S#^i_j
    v, o, Mv, Mo = _roles(b, side)
    dS = _cov2(Sj, md.gamma)                              # [l, i, j]
    k = len(v.tan)                                        # rank of the varied distribution

    # coordinate tensors along the family
    def coords(bt):
        vt, ot, _, _ = _roles(bt, side)
        return {"ht": vt.h_coord, "Ht": vt.H_coord, "h": ot.h_coord, "H": ot.H_coord,
                "T": ot.T_coord, "Tt": vt.T_coord,
                "n_ht": vt.norm2_h(), "n_Ht": vt.norm2_H(), "n_h": ot.norm2_h(),
                "n_H": ot.norm2_H(), "n_T": ot.norm2_T(), "n_Tt": vt.norm2_T()}

    cache = {}

    def at(t):
        if t not in cache:
            cache[t] = coords(family.bundle(X, t))
        return cache[t]

    fd = {}
    for key in at(0.0):
        fd[key], _ = fd_derivative(lambda t, key=key: at(t)[key], h)

    c0 = at(0.0)
    ht, Tt = c0["ht"], c0["Tt"]
    h_, H_ = c0["h"], c0["H"]
    # grad~ of S: Mo^k_m g^{ml} nabla_l S_ab Mv^a_i Mv^b_j
    gradS = np.einsum("nkm,nml,nlab,nai,nbj->nkij", Mo, Ginv, dS, Mv, Mv)
    out = {}
    rhs = 0.5 * (np.einsum("nkmj,nmi->nkij", ht - Tt, Ssh)
                 + np.einsum("nkim,nmj->nkij", ht + Tt, Ssh) - gradS)
    out["d_ht"] = _cmp(fd["ht"], rhs)
    trS = np.einsum("nij,nij->n", Ginv, S)
    dtr = np.einsum("nij,nijl->nl", Ginv, Sj.d1) + np.einsum("nijl,nij->nl", md.Ginv.d1, S)
    grad_tr = np.einsum("nkm,nml,nl->nk", Mo, Ginv, dtr)
    out["d_Ht"] = _cmp(fd["Ht"], -0.5 * grad_tr)
    out["d_h"] = _cmp(fd["h"], -np.einsum("nkm,nmab->nkab", Ssh, h_))
    out["d_H"] = _cmp(fd["H"], -np.einsum("nkm,nm->nk", Ssh, H_))
    out["d_T"] = _cmp(fd["T"], np.zeros_like(c0["T"]))
    out["d_Tt"] = _cmp(fd["Tt"], np.zeros_like(c0["Tt"]))

    Sf = to_frame(b.U, S)
    Svv = block(Sf, v.tan)
    pair = lambda F: np.einsum("nab,nab->n", block(F, v.tan), Svv)
    out["d_norm_h_minus_H"] = _cmp(fd["n_h"] - fd["n_H"], pair(o.phi_h()))
    out["d_norm_Tt"] = _cmp(fd["n_Tt"], 2 * pair(np.swapaxes(v.casorati_T(), 1, 2)))
    out["d_norm_T"] = _cmp(fd["n_T"], -pair(o.phi_T()))

    if family.conformal:
        s = trS / k
        ds = dtr / k
        grad_s = np.einsum("nkm,nml,nl->nk", Mo, Ginv, ds)
        gv = np.einsum("nia,nab,nbj->nij", Mv.transpose(0, 2, 1), md.G.v, Mv)  # g restricted
        s3 = s[:, None, None, None]
        out["conf_d_ht"] = _cmp(fd["ht"], s3 * ht - 0.5 * np.einsum("nk,nij->nkij", grad_s, gv))
        out["conf_d_Ht"] = _cmp(fd["Ht"], -0.5 * k * grad_s)
        out["conf_d_h"] = _cmp(fd["h"], -s3 * h_)
        out["conf_d_H"] = _cmp(fd["H"], -s[:, None] * H_)
        Hs = np.einsum("nk,nk->n", c0["Ht"], np.einsum("nkl,nl->nk", md.G.v, grad_s))
        out["conf_d_norm_ht"] = _cmp(fd["n_ht"], -Hs)
        out["conf_d_norm_Ht"] = _cmp(fd["n_Ht"], -k * Hs)
        out["conf_d_norm_h"] = _cmp(fd["n_h"], -s * c0["n_h"])
        out["conf_d_norm_H"] = _cmp(fd["n_H"], -s * c0["n_H"])
        out["conf_d_norm_Tt"] = _cmp(fd["n_Tt"], -2 * s * c0["n_Tt"])
        out["conf_d_norm_T"] = _cmp(fd["n_T"], s * c0["n_T"])
    return out


def integrated_lemmas(family, grid, h=STEP, kappa_sign=None, chunk=2048):
    """Integrated forms of the norm-derivative lemma (divergence terms drop).

    Returns FD-vs-formula comparisons of int d/dt(...) dvol_g over the grid;
    the integrands are differentiated pointwise and integrated against the
    t = 0 volume form.
    """
    side = family.side
    if side not in SIDES:
        raise FamilyError("integrated lemmas need a D- or D~-variation")
    if not family.base.closed:
        raise FamilyError("integrated lemmas need a closed model")
    kappa_sign = EL.KAPPA_SIGN if kappa_sign is None else kappa_sign
    X, W = I.nodes(family.base.chart, grid)
    names = ("n_ht", "n_Ht", "n_h_minus_H", "n_Tt", "n_T")
    fd_parts = {k: [] for k in names}
    rhs_parts = {k: [] for k in names}
    alt_parts = []

    def scalars(bt):
        vt, ot, _, _ = _roles(bt, side)
        return np.stack([vt.norm2_h(), vt.norm2_H(), ot.norm2_h() - ot.norm2_H(),
                         vt.norm2_T(), ot.norm2_T()], axis=1)

    for sl in I._chunks(len(X), chunk):
        Xs = X[sl]
        b = family.bundle(Xs, 0.0)
        d, _ = fd_derivative(lambda t: scalars(family.bundle(Xs, t)), h)
        dv = W[sl] * b.density
        v, o, _, _ = _roles(b, side)
        S = family.S(Xs, 0.0).v
        Svv = block(to_frame(b.U, S), v.tan)
        pair = lambda F: np.einsum("nab,nab->n", block(F, v.tan), Svv)
        trS = np.einsum("naa->n", Svv)
        kap = pair(np.swapaxes(v.kappa(), 1, 2))
        rhs = np.stack([pair(v.div_h()) + kappa_sign * kap,
                        v.div_H() * trS,
                        pair(o.phi_h()),
                        2 * pair(np.swapaxes(v.casorati_T(), 1, 2)),
                        -pair(o.phi_T())], axis=1)
        for i, k in enumerate(names):
            fd_parts[k].append(d[:, i] * dv)
            rhs_parts[k].append(rhs[:, i] * dv)
        alt_parts.append((pair(v.div_h()) - kappa_sign * kap) * dv)
    out = {}
    for k in names:
        a = math.fsum(np.concatenate(fd_parts[k]))
        r = math.fsum(np.concatenate(rhs_parts[k]))
        out[k] = _cmp(np.array([a]), np.array([r])) | {"fd": a, "formula": r}
    out["n_ht"]["formula_other_sign"] = math.fsum(np.concatenate(alt_parts))
    return out


# -- normalised family -----------------------------------------------------------

@dataclass(frozen=True)
class NormalizedFamily:
    family: MetricFamily
    grid: object
    volume0: float

    @property
    def side(self):
        return self.family.side

    def exponent(self):
        b = self.family.base
        return -2.0 / (b.p if self.side == "D" else b.n)

    def phi(self, t):
        return (volume_at(self.family, t, self.grid) / self.volume0) ** self.exponent()

    def metric(self, X, t, order=2):
        f = self.family
        G = f.metric(X, t, order)
        if t == 0.0:
            return G
        phi = self.phi(t)
        V = f.base.fields_jet(X, order=order)
        P, Q = projectors(G, V, f.base.mode)
        Gb = _perp_metric(G, Q if self.side == "D" else P)
        return G + Gb * (phi - 1.0)

    def bundle(self, X, t):
        return Bundle(self.family.base, X, metric_jet=self.metric(X, t))

    def volume(self, t):
        X, W = I.nodes(self.family.base.chart, self.grid)
        G = self.metric(X, t, order=0).v
        return math.fsum(W * np.sqrt(np.linalg.det(G)))

    def j(self, t, chunk=2048):
        phi = self.phi(t) if t != 0.0 else 1.0
        f = self.family

        def fac(Xs):
            G = f.metric(Xs, t)
            if t != 0.0:
                V = f.base.fields_jet(Xs)
                P, Q = projectors(G, V, f.base.mode)
                G = G + _perp_metric(G, Q if self.side == "D" else P) * (phi - 1.0)
            return Bundle(f.base, Xs, metric_jet=G)

        return I.integrate_scalar(f.base, self.grid, I.QUANTITIES["S_mix"],
                                  chunk=chunk, bundle_factory=fac)


def normalized_family(family, grid):
    if family.side not in SIDES:
        raise FamilyError("normalisation needs a D- or D~-variation")
    if not family.base.closed:
        raise FamilyError("normalisation needs a closed (fully periodic) model")
    return NormalizedFamily(family, grid, volume_at(family, 0.0, grid))


def trace_integral(family, grid, chunk=2048):
    """int Tr_g S dvol_g at t = 0."""
    def f(b):
        S = family.S(b.X, 0.0, order=0).v
        return np.einsum("nij,nij->n", b.md.Ginv.v, S)
    return I.integrate_scalar(family.base, grid, f, chunk=chunk)


def normalization_check(family, grid, ts=(-0.02, 0.01, 0.03), h=STEP, constants=None):
    """Volume preservation and the relation between the two J derivatives."""
    nf = normalized_family(family, grid)
    vols = {t: nf.volume(t) for t in ts}
    vol_err = max(abs(v / nf.volume0 - 1) for v in vols.values())
    dJbar, e1 = fd_derivative(lambda t: nf.j(t), h)
    dJ, e2 = fd_derivative(lambda t: j_at(family, t, grid), h)
    c = constants or EL.global_constants(family.base, grid)
    s_star = c["S_star_D"] if family.side == "D" else c["S_star_Dt"]
    trS = trace_integral(family, grid)
    predicted = float(dJ) - 0.5 * s_star * trS
    return {
        "volume_rel_err": vol_err,
        "dJ_bar": float(dJbar),
        "dJ": float(dJ),
        "predicted_dJ_bar": predicted,
        "S_star": s_star,
        "trace_integral": trS,
        # scaled by |dJ| too, since dJ_bar vanishes for homotheties
        "rel_err": abs(float(dJbar) - predicted) / max(abs(predicted), abs(float(dJbar)),
                                                      abs(float(dJ)), 1e-300),
        "fd_error": float(e1 + e2),
    }


def dj_gradient_pairing(model, family, grid, constants=None, chunk=2048, kappa_sign=None,
                        normalized=False):
    """int <G, S> dvol for the family's S at t = 0.

    Unnormalised (default): the derivative of J along g_t itself, i.e. G with
    S* replaced by 0.  ``normalized=True``: the derivative along the
    volume-normalised family, whose G is minus the Euler-Lagrange residual.
    """
    if family.side not in SIDES:
        raise FamilyError("the gradient pairing needs S truncated to one side")
    kappa_sign = EL.KAPPA_SIGN if kappa_sign is None else kappa_sign
    s_star = 0.0
    if normalized:
        c = constants or EL.global_constants(model, grid, chunk=chunk)
        s_star = c["S_star_D"] if family.side == "D" else c["S_star_Dt"]

    def f(b):
        S = family.S(b.X, 0.0, order=0).v
        return EL.pairing(b, family.side, s_star, S, kappa_sign)

    return I.integrate_scalar(model, grid, f, chunk=chunk)


def gradient_check(family, grid, h=STEP, constants=None, kappa_sign=None):
    """Pairings against FD of J along g_t and along the normalised family.

    Relative errors are scaled by the larger of the two derivatives, since
    the normalised one vanishes for homotheties.
    """
    c = constants or EL.global_constants(family.base, grid)
    base = family.base
    pair = dj_gradient_pairing(base, family, grid, kappa_sign=kappa_sign)
    npair = dj_gradient_pairing(base, family, grid, constants=c, kappa_sign=kappa_sign,
                                normalized=True)
    d, e1 = fd_derivative(lambda t: j_at(family, t, grid), h)
    nf = normalized_family(family, grid)
    nd, e2 = fd_derivative(lambda t: nf.j(t), h)
    d, nd = float(d), float(nd)
    scale = max(abs(pair), abs(d), abs(npair), abs(nd), 1e-300)
    return {"pairing": pair, "fd": d, "normalized_pairing": npair, "normalized_fd": nd,
            "fd_error": float(e1 + e2),
            "rel_err": abs(pair - d) / max(abs(pair), abs(d), 1e-300),
            "normalized_rel_err": abs(npair - nd) / scale}


def homothety_law(model, grid, ts=(-0.5, 0.25, 1.0), h=STEP):
    """J(g_t)/J(g) against (1+t)^(-1/2) for g_t^perp = (1+t) g^perp, p = 1."""
    if model.p != 1:
        raise FamilyError("the scaling law is stated for p = 1")
    f = homothety(model, "D")
    j0 = j_at(f, 0.0, grid)
    rows = []
    for t in ts:
        ratio = j_at(f, t, grid) / j0
        expect = (1 + t) ** -0.5
        rows.append({"t": t, "ratio": ratio, "expected": expect,
                     "rel_err": abs(ratio - expect) / abs(expect)})
    d, e = fd_derivative(lambda t: j_at(f, t, grid), h)
    return {"J": j0, "samples": rows, "dJ": float(d), "fd_error": float(e),
            "dJ_rel_err": abs(float(d) + 0.5 * j0) / abs(0.5 * j0)}
