"""Euler-Lagrange residuals of the mixed action and criticality reports.

All residual tensors are left-minus-right, in adapted-frame components on
the block of the varied distribution: D for D-variations, D~ for
D~-variations.  Global constants (S*_mix and the means it is built from)
are computed once per (model, grid) by :func:`global_constants`.

``gradient`` returns G with d/dt J(g-bar_t) = int <G, S> dvol for an
adapted S truncated to the varied side; the general tensor-form residual
is exactly -G.
"""

import numpy as np

from . import integrate as I
from .extrinsic import Bundle, block

# Coefficient c in d/dt |h~|^2 = <div h~ + c K~flat, S> - div(<h~, S>) for
# K~ = sum_a [T~_a, A~_a]; fixed by finite differences on a model where K~
# does not vanish (see tests/test_variation.py).
KAPPA_SIGN = 1.0

VARIANTS = ("D-general", "Dt-general", "foliated-D", "foliated-TF",
            "unitfield-D", "unitfield-TF", "codim1-D", "codim1-TF",
            "conformal-D", "conformal-Dt", "trace-check")

INTEGRABLE_TOL = 1e-10


class VariantError(ValueError):
    pass


def _sides(b, side):
    """(varied, fixed) Side objects for a D ('D') or D~ ('Dt') variation."""
    if side == "D":
        return b.perp, b.top
    if side == "Dt":
        return b.top, b.perp
    raise ValueError(f"unknown side {side!r}")


def _flat(op):
    return np.swapaxes(op, -1, -2)


def _eye(b, idx):
    return np.broadcast_to(np.eye(len(idx)), (len(b.X), len(idx), len(idx)))


def q_pointwise(b):
    return I.q_form(b)


# -- global constants --------------------------------------------------------

def global_constants(model, grid, **kw):
    if not model.closed:
        raise VariantError("global constants need a closed (fully periodic) model")
    ints = I.globals_(model, grid, **kw)
    vol = ints["one"]
    mean = {k: v / vol for k, v in ints.items() if k != "one"}
    return {
        "volume": vol,
        "means": mean,
        "S_star_D": I.s_star(ints, model.n, model.p, "D"),
        "S_star_Dt": I.s_star(ints, model.n, model.p, "Dt"),
        "J_mix": ints["S_mix"],
    }


# -- general residuals -------------------------------------------------------

def tensor_lhs(b, side, kappa_sign=KAPPA_SIGN):
    """div(h~ - H~ g_perp) - 2 T~flat + Phi_h + Phi_T + K~flat  (D side; dual for 'Dt')."""
    v, o = _sides(b, side)
    t = v.tan
    L = (v.div_h() - v.div_H()[:, None, None] * np.eye(b.d)
         - 2 * _flat(v.casorati_T()) + o.phi_h() + o.phi_T()
         + kappa_sign * _flat(v.kappa()))
    return block(L, t)


def tensor_residual(b, side, s_star, kappa_sign=KAPPA_SIGN):
    v, _ = _sides(b, side)
    rhs = 0.5 * (q_pointwise(b) - s_star)[:, None, None] * _eye(b, v.tan)
    return tensor_lhs(b, side, kappa_sign) - rhs


def ricci_residual(b, side, s_star, kappa_sign=KAPPA_SIGN):
    """Partial-Ricci form of the same equation."""
    v, o = _sides(b, side)
    t = v.tan
    r = b.partial_ricci(v)
    hH = np.einsum("nkab,nk->nab", v.h, v.H)
    L = (r - hH + _flat(v.casorati_A()) - _flat(v.casorati_T())
         + o.phi_h() + o.phi_T() + o.psi() - o.def_H()
         + kappa_sign * _flat(v.kappa()))
    c = b.s_mix_frame() - s_star + v.div_H() - o.div_H()
    return block(L, t) - 0.5 * c[:, None, None] * _eye(b, t)


def gradient(b, side, s_star, kappa_sign=KAPPA_SIGN):
    return -tensor_residual(b, side, s_star, kappa_sign)


def frame_tensor(b, S):
    """Frame components of a covariant 2-tensor given in coordinates."""
    from .extrinsic import to_frame
    return to_frame(b.U, np.asarray(S))


def pairing(b, side, s_star, S_coord, kappa_sign=KAPPA_SIGN):
    """Pointwise <G, S> for S given in coordinates."""
    v, _ = _sides(b, side)
    Sf = block(frame_tensor(b, S_coord), v.tan)
    return np.einsum("nab,nab->n", gradient(b, side, s_star, kappa_sign), Sf)


# -- specialisations -----------------------------------------------------------

def _integrable(side):
    return float(np.max(np.abs(side.T))) < INTEGRABLE_TOL


def _check_rank(b, variant):
    if variant.startswith("foliated") and not _integrable(b.top):
        raise VariantError(f"{variant} needs an integrable D~")
    if variant.startswith("unitfield") and b.n != 1:
        raise VariantError(f"{variant} needs n = 1")
    if variant.startswith("codim1"):
        if b.p != 1:
            raise VariantError(f"{variant} needs p = 1")
        if not _integrable(b.top):
            raise VariantError(f"{variant} needs an integrable D~")


def unitfield_residuals(b, c):
    """n = 1: D~ spanned by a unit field N.  Returns (D tensor, D~ scalar) pairs."""
    N = int(b.tan[0])
    nn = b.nor
    top, perp = b.top, b.perp
    At = block(perp.A[:, N], nn)
    Tt = block(perp.Tsharp[:, N], nn)
    t1 = perp.H[:, N]
    t2 = np.einsum("nab,nba->n", At, At)
    T2t = perp.norm2_T()
    eye = _eye(b, nn)
    # div((h~ - tau1 g_perp) N) = div h~ - div(H~) g_perp
    div_term = block(perp.div_h(), nn) - perp.div_H()[:, None, None] * eye
    comm = np.einsum("nab,nbc->nac", Tt, At) - np.einsum("nab,nbc->nac", At, Tt)
    sD = c["S_star_D"]
    eq1h = (div_term - 2 * _flat(np.einsum("nab,nbc->nac", Tt, Tt))
            + KAPPA_SIGN * _flat(comm)
            - 0.5 * (t1 ** 2 - t2 + T2t - sD)[:, None, None] * eye)
    sT = c["S_star_Dt"]
    eq2h = t1 ** 2 - t2 - 3 * T2t + sT
    # Ricci forms
    RN = block(np.einsum("naxay->nxy", b.Rf[:, [N]][:, :, :, [N]]), nn)
    ricNN = np.einsum("nxx->n", b.partial_ricci(top))
    H = top.H[:, nn]
    h_t = block(perp.h[:, N], nn)
    lhs1i = (RN + np.einsum("nab,nbc->nac", At, At) - np.einsum("nab,nbc->nac", Tt, Tt)
             - t1[:, None, None] * h_t + np.einsum("na,nb->nab", H, H)
             - block(top.def_H(), nn) + KAPPA_SIGN * _flat(comm))
    div_t1N_minus_H = perp.div_H() - top.div_H()
    eq1i = lhs1i - 0.5 * (ricNN - sD + div_t1N_minus_H)[:, None, None] * eye
    eq2i = ricNN + sT - 4 * T2t - (perp.div_H() + top.div_H())
    return {"unitfield-D": eq1h, "unitfield-TF": eq2h,
            "unitfield-D-ricci": eq1i, "unitfield-TF-ricci": eq2i}


def codim1_residuals(b, c):
    """p = 1, integrable D~ with unit normal N spanning D."""
    N = int(b.nor[0])
    t = b.tan
    top, perp = b.top, b.perp
    AN = block(top.A[:, N], t)
    tau1 = top.H[:, N]
    tau2 = np.einsum("nab,nba->n", AN, AN)
    sD, sT = c["S_star_D"], c["S_star_Dt"]
    eye = _eye(b, t)
    h = block(top.h[:, N], t)
    eq0 = tau1 ** 2 - tau2 + sD
    # div((h - tau1 g~) N) = div h - div(H) g~  on D~
    div_term = block(top.div_h(), t) - top.div_H()[:, None, None] * eye
    eq1 = div_term - 0.5 * (tau1 ** 2 - tau2 - sT)[:, None, None] * eye
    ricNN = np.einsum("nxx->n", b.partial_ricci(perp))
    eq_i2 = 2 * ricNN - (ricNN - sD + top.div_H() + perp.div_H())
    RN = block(np.einsum("naxay->nxy", b.Rf[:, [N]][:, :, :, [N]]), t)
    Ht = perp.H[:, t]
    lhs = (RN + np.einsum("nab,nbc->nac", AN, AN) - tau1[:, None, None] * h
           + np.einsum("na,nb->nab", Ht, Ht) - block(perp.def_H(), t))
    eq_ii1 = lhs - 0.5 * (ricNN - c["means"]["S_mix"] + top.div_H()
                          - perp.div_H())[:, None, None] * eye
    # Newton transformation T1(h) = tau1 g~ - h:  -div(T1(h) N) = div h - div(H) g~
    newton = div_term - 0.5 * (tau1 ** 2 - tau2 - c["means"]["S_mix"])[:, None, None] * eye
    return {"codim1-D": eq0, "codim1-TF": eq1, "codim1-D-ricci": eq_i2,
            "codim1-TF-ricci": eq_ii1, "codim1-TF-newton": newton}


def conformal_residual(b, side, c):
    """Trace equation for biconformal variations (scalar, zero iff critical)."""
    top, perp = b.top, b.perp
    Sx, Sxt = top.s_ex(), perp.s_ex()
    T2, T2t = top.norm2_T(), perp.norm2_T()
    if side == "D":
        p = b.p
        return ((p - 2) * Sx + p * Sxt + (p + 2) * T2 + (p - 4) * T2t
                + 2 * (p - 1) * perp.div_H() - p * c["S_star_D"])
    n = b.n
    return ((n - 2) * Sxt + n * Sx + (n + 2) * T2t + (n - 4) * T2
            + 2 * (n - 1) * top.div_H() - n * c["S_star_Dt"])


def trace_integrand(b, c):
    """Integrand of the traced identity with the quoted coefficients.

    R = p S_mix + 4|T|^2 - 2|T~|^2 + 2 S_ex; the integrand is
    (R - R(M)) - 2(1-p) div H~ - p div H, whose integral vanishes on a
    closed manifold whatever the coefficients are.
    """
    p = b.p
    R = p * b.s_mix_frame() + 4 * b.top.norm2_T() - 2 * b.perp.norm2_T() + 2 * b.top.s_ex()
    m = c["means"]
    Rm = p * m["S_mix"] + 4 * m["T2"] - 2 * m["T2_perp"] + 2 * m["S_ex"]
    return (R - Rm) - 2 * (1 - p) * b.perp.div_H() - p * b.top.div_H()


def traced_residual(b, c):
    """Trace over D of the D-general residual, times 2 (pointwise criterion)."""
    E = tensor_residual(b, "D", c["S_star_D"])
    return 2 * np.einsum("naa->n", E)


# -- public API ----------------------------------------------------------------

def _sup(x):
    x = np.asarray(x)
    return float(np.max(np.sqrt(np.sum(x.reshape(x.shape[0], -1) ** 2, axis=1))))


def el_residual(model, grid, variant, constants=None, chunk=2048):
    """Sup-norm and integrated norm of one EL residual over the grid nodes."""
    if variant not in VARIANTS:
        raise VariantError(f"unknown variant {variant!r}; known: {', '.join(VARIANTS)}")
    if not model.closed:
        raise VariantError("EL residuals need a closed model; use the pointwise criteria")
    c = constants or global_constants(model, grid, chunk=chunk)
    X, W = I.nodes(model.chart, grid)
    sup = 0.0
    l2 = []
    form_gap = 0.0
    trace_int = []
    for sl in I._chunks(len(X), chunk):
        b = Bundle(model, X[sl])
        _check_rank(b, variant)
        r, alt = _variant_tensor(b, variant, c)
        norms = np.sqrt(np.sum(r.reshape(len(r), -1) ** 2, axis=1))
        sup = max(sup, float(np.max(norms)))
        l2.append(norms ** 2 * W[sl] * b.density)
        if alt is not None:
            form_gap = max(form_gap, _sup(r - alt))
        if variant == "trace-check":
            trace_int.append(trace_integrand(b, c) * W[sl] * b.density)
    import math
    out = {
        "variant": variant,
        "sup_norm": sup,
        "l2_norm": math.sqrt(math.fsum(np.concatenate(l2))),
        "form_gap": form_gap,
        "constants": {k: c[k] for k in ("S_star_D", "S_star_Dt", "J_mix", "volume")}
                     | {"S_mix_mean": c["means"]["S_mix"], "S_ex_mean": c["means"]["S_ex"]},
    }
    if variant == "trace-check":
        out["integral_identity"] = math.fsum(np.concatenate(trace_int))
    return out


def _variant_tensor(b, variant, c):
    if variant in ("D-general", "foliated-D"):
        return (tensor_residual(b, "D", c["S_star_D"]), ricci_residual(b, "D", c["S_star_D"]))
    if variant in ("Dt-general", "foliated-TF"):
        return (tensor_residual(b, "Dt", c["S_star_Dt"]), ricci_residual(b, "Dt", c["S_star_Dt"]))
    if variant.startswith("unitfield"):
        u = unitfield_residuals(b, c)
        ten, ric = u[variant], u[variant + "-ricci"]
        return _as2(ten), _as2(ric)
    if variant.startswith("codim1"):
        u = codim1_residuals(b, c)
        ten, ric = u[variant], u[variant + "-ricci"]
        return _as2(ten), _as2(ric)
    if variant == "conformal-D":
        return _as2(conformal_residual(b, "D", c)), _as2(-traced_residual(b, c))
    if variant == "conformal-Dt":
        E = tensor_residual(b, "Dt", c["S_star_Dt"])
        return _as2(conformal_residual(b, "Dt", c)), _as2(-2 * np.einsum("naa->n", E))
    if variant == "trace-check":
        return _as2(traced_residual(b, c)), None
    raise VariantError(variant)


def _as2(x):
    x = np.asarray(x)
    return x.reshape(x.shape[0], -1)


# -- classification ------------------------------------------------------------

CRITICAL_TOL = 1e-6


def applicable_variants(model):
    b = Bundle(model, model.chart.sample(np.random.default_rng(0), 4))
    out = []
    for v in VARIANTS:
        try:
            _check_rank(b, v)
        except VariantError:
            continue
        out.append(v)
    return out


def codim1_flow_checks(model, grid, chunk=2048):
    """tau1, the constancy defect of tau1^2 - tau2 and |nabla_N h| for p = 1.

    For d = 3, n = 2 adds the principal curvatures k1 <= k2 of the leaves:
    their ranges over the grid and sup |k1 + k2|.  |nabla_N h| stands in for
    the parallelism of the principal directions along N, which is not
    frame-independent at umbilic points.
    """
    X, _ = I.nodes(model.chart, grid)
    t1, s2, dn, ks = [], [], [], []
    for sl in I._chunks(len(X), chunk):
        b = Bundle(model, X[sl])
        if b.p != 1 or not _integrable(b.top):
            raise VariantError("flow checks need p = 1 and an integrable D~")
        N = int(b.nor[0])
        t = b.tan
        AN = block(b.top.A[:, N], t)
        tau1 = b.top.H[:, N]
        t1.append(tau1)
        s2.append(tau1 ** 2 - np.einsum("nab,nba->n", AN, AN))
        dNh = b.top.dh[:, N, N][:, t][:, :, t]
        dn.append(np.sqrt(np.einsum("nab,nab->n", dNh, dNh)))
        if model.dim == 3 and b.n == 2:
            ks.append(np.linalg.eigvalsh(0.5 * (AN + np.swapaxes(AN, 1, 2))))
    t1, s2, dn = map(np.concatenate, (t1, s2, dn))
    out = {
        "tau1_sup": float(np.max(np.abs(t1))),
        "tau1sq_minus_tau2_range": float(np.ptp(s2)),
        "tau1sq_minus_tau2_max": float(np.max(s2)),
        "nabla_N_h_sup": float(np.max(dn)),
    }
    if ks:
        k = np.concatenate(ks)
        out["k1_range"] = float(np.ptp(k[:, 0]))
        out["k2_range"] = float(np.ptp(k[:, 1]))
        out["k1_plus_k2_sup"] = float(np.max(np.abs(k.sum(axis=1))))
        out["note"] = "|nabla_N h| used for the parallelism of principal directions"
    return out


def criticality_report(model, grid=None, tol=CRITICAL_TOL, samples=50, seed=0, chunk=2048):
    """Evaluate every applicable criterion and classify.

    Closed models: all applicable variants at ``tol`` on the sup-norm.
    Domain models: pointwise criteria at seeded sample points.
    """
    if not model.closed:
        return pointwise_report(model, tol=tol, samples=samples, seed=seed)
    grid = grid or I.GridSpec.default(model.chart)
    c = global_constants(model, grid, chunk=chunk)
    rows = []
    for v in applicable_variants(model):
        r = el_residual(model, grid, v, constants=c, chunk=chunk)
        rows.append({"variant": v, "sup_norm": r["sup_norm"], "form_gap": r["form_gap"],
                     "critical": r["sup_norm"] < tol}
                    | ({"integral_identity": r["integral_identity"]}
                       if "integral_identity" in r else {}))
    out = {"model": model.describe(), "grid": list(grid.points), "tol": tol,
           "constants": {k: c[k] for k in ("S_star_D", "S_star_Dt", "J_mix", "volume")},
           "variants": rows}
    try:
        out["flow"] = codim1_flow_checks(model, grid, chunk=chunk)
    except VariantError:
        pass
    return out


# -- domain models: pointwise criteria --------------------------------------

def _u_data(model, X):
    """u, du, Hess_u (covariant), lambda, grad u, grad(lambda), Laplacian at X."""
    b = Bundle(model, X)
    u = model.scalar_jet(X, order=2)
    du, ddu = u.d1, u.d2
    Ginv = b.md.Ginv
    gam = b.md.gamma.v
    hess = ddu - np.einsum("nkij,nk->nij", gam, du)
    grad = np.einsum("nij,nj->ni", Ginv.v, du)
    lam2 = np.einsum("ni,ni->n", grad, du)
    if np.any(lam2 <= 0):
        raise VariantError("grad u vanishes at a sample point")
    lam = np.sqrt(lam2)
    # d_j lambda = (d_j g^ab u_a u_b + 2 g^ab u_aj u_b) / (2 lambda)
    dlam = (np.einsum("nabj,na,nb->nj", Ginv.d1, du, du)
            + 2 * np.einsum("nab,naj,nb->nj", Ginv.v, ddu, du)) / (2 * lam[:, None])
    lap = np.einsum("nij,nij->n", Ginv.v, hess)
    hess2 = np.einsum("nia,njb,nij,nab->n", Ginv.v, Ginv.v, hess, hess)
    return b, u, du, ddu, hess, grad, lam, dlam, lap, hess2


def level_set_quantities(model, X):
    """Level-set example quantities at X (model with a scalar u, D = R grad u).

    tau1 and tau2 from the Weingarten machinery against closed forms;
    L(u) and the Euclidean criterion when the metric is Euclidean.
    """
    if model.scalar is None:
        raise VariantError("model carries no scalar field u")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    b, u, du, ddu, hess, grad, lam, dlam, lap, hess2 = _u_data(model, X)
    Nvec = grad / lam[:, None]
    G = b.md.G.v
    # engine: tau1 = g(H, N), tau2 = |h|^2 for codimension one
    tau1 = np.einsum("ni,nij,nj->n", b.top.H_coord, G, Nvec)
    tau2 = b.top.norm2_h()
    grad_lam = np.einsum("ni,ni->n", grad, dlam)              # (grad u)(lambda)
    tau1_cf = -lap / lam + grad_lam / lam ** 2
    NNu = np.einsum("ni,nij,nj->n", Nvec, hess, Nvec)
    # leaf block of Hess_u: |Hess|^2 - 2|Hess(N, .)|^2 + Hess(N, N)^2
    HN = np.einsum("nij,nj->ni", hess, Nvec)
    HN2 = np.einsum("ni,nij,nj->n", HN, b.md.Ginv.v, HN)
    tau2_cf = (hess2 - 2 * HN2 + NNu ** 2) / lam ** 2
    tau2_quoted = (hess2 - NNu ** 2) / lam ** 2
    r88 = (lap - grad_lam / lam) ** 2 - hess2 + (grad_lam / lam) ** 2
    out = {
        "u": u.v, "lambda": lam,
        "tau1": tau1, "tau1_closed_form": tau1_cf,
        "tau2": tau2, "tau2_closed_form": tau2_cf,
        "tau2_quoted_form": tau2_quoted,
        "tau1sq_minus_tau2": tau1 ** 2 - tau2,
        "criterion_hessian_form": r88,
    }
    if _is_euclidean(model, X):
        ux, uy = du[:, 0], du[:, 1]
        uxx, uxy = ddu[:, 0, 0], ddu[:, 0, 1]
        L = (ux ** 2 - uy ** 2) * uxx + 2 * ux * uy * uxy
        out["L"] = L
        out["tau1_L_form"] = L / lam ** 3
        out["criterion_euclidean"] = -2 * (uxx ** 2 + uxy ** 2) + L / lam ** 2 + L ** 2 / lam ** 4
    return out


def _is_euclidean(model, X):
    G = model.metric_jet(X, order=1)
    return (model.dim == 2 and np.allclose(G.v, np.eye(2), atol=0, rtol=0)
            and not np.any(G.d1))


def half_plane_checks(model, X):
    """Conformal metric e^phi (dx^2 + dy^2) with D~ = span(dx).

    Reports the Gaussian curvature K = S_mix from the engine, the
    independent form -1/2 e^{-phi} Laplacian(phi), the quoted expression
    -1/2 e^{-phi}(phi_x^2 + phi_y^2/2 + e^phi phi_y) and the residual of the
    first-order equation phi_x^2 + phi_y^2/2 + e^phi phi_y = 0.
    """
    if model.dim != 2 or model.n != 1:
        raise VariantError("half-plane checks need a surface with a line field")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = model.metric_jet(X, order=2)
    g11 = G[:, 0, 0]
    off = max(float(np.max(np.abs(G.v[:, 0, 1]))), float(np.max(np.abs(G.v[:, 0, 0] - G.v[:, 1, 1]))))
    if off > 1e-14:
        raise VariantError("half-plane checks need a conformally flat diagonal metric")
    from . import jets
    phi = jets.log(g11)
    px, py = phi.d1[:, 0], phi.d1[:, 1]
    lap = phi.d2[:, 0, 0] + phi.d2[:, 1, 1]
    e = np.exp(phi.v)
    b = Bundle(model, X)
    K = b.s_mix_frame()
    return {
        "K": K,
        "K_laplacian_form": -0.5 * lap / e,
        "K_quoted_form": -0.5 / e * (px ** 2 + 0.5 * py ** 2 + e * py),
        "pde_residual": px ** 2 + 0.5 * py ** 2 + e * py,
        "phi": phi.v,
    }


def pointwise_report(model, tol=CRITICAL_TOL, samples=50, seed=0):
    """Domain models: K = 0 for surfaces, plus the level-set criteria."""
    X = model.chart.sample(np.random.default_rng(seed), samples)
    out = {"model": model.describe(), "tol": tol, "samples": samples, "seed": seed,
           "criteria": []}
    if model.dim == 2:
        b = Bundle(model, X)
        K = b.s_mix_frame()
        out["criteria"].append({"criterion": "K = 0 (surface, n = p = 1)",
                                "sup_norm": float(np.max(np.abs(K))),
                                "critical": float(np.max(np.abs(K))) < tol})
        try:
            if model.scalar is not None:
                raise VariantError("level-set model")
            hp = half_plane_checks(model, X)
            out["criteria"].append({"criterion": "phi_x^2 + phi_y^2/2 + e^phi phi_y = 0",
                                    "sup_norm": float(np.max(np.abs(hp["pde_residual"]))),
                                    "critical": float(np.max(np.abs(hp["pde_residual"]))) < tol})
        except VariantError:
            pass
    if model.scalar is not None:
        ls = level_set_quantities(model, X)
        for key, label in (("criterion_hessian_form", "Hessian-form level-set criterion"),
                           ("criterion_euclidean", "Euclidean level-set criterion")):
            if key in ls:
                s = float(np.max(np.abs(ls[key])))
                out["criteria"].append({"criterion": label, "sup_norm": s, "critical": s < tol})
    return out
