"""Partial Ricci tensors, mixed scalar curvature and identity residuals.

Each residual is a left-minus-right tensor in adapted-frame components,
restricted to the block where the identity lives; :func:`identity_residuals`
reports the max over a sample of its pointwise Frobenius norm.
"""

import numpy as np

from .extrinsic import Bundle, block


def _flat(op):
    return np.swapaxes(op, -1, -2)


def _norm(t):
    t = np.asarray(t)
    return np.sqrt(np.sum(t.reshape(t.shape[0], -1) ** 2, axis=1))


def partial_ricci(b):
    """(r_D, r_D~) as full frame matrices (each vanishing off its block)."""
    return b.partial_ricci(b.perp), b.partial_ricci(b.top)


def s_mix(b, method="frame-sum"):
    if method == "frame-sum":
        return b.s_mix_frame()
    if method == "trace-rD":
        return np.einsum("naa->n", b.partial_ricci(b.perp))
    if method == "trace-rF":
        return np.einsum("naa->n", b.partial_ricci(b.top))
    if method == "walczak":
        return b.s_mix_walczak()
    raise ValueError(f"unknown method {method!r}")


def extrinsic_scalars(b):
    return {
        "S_ex": b.top.s_ex(),
        "S_ex_perp": b.perp.s_ex(),
        "Ric_ex_trace": np.einsum("naa->n", b.top.ric_ex()),
    }


def riccati_lines(b, side):
    """Both lines of the partial-Ricci identity for r concentrated on ``side.tan``.

    ``side`` is the distribution whose partial Ricci tensor is described
    (for r_D pass ``b.perp``); its second fundamental form and Casorati
    operators enter with the complement's Psi and mean curvature.
    """
    o = side
    s = b.other(side)
    t = o.tan
    r = b.partial_ricci(o)
    sym = (r - o.div_h_normal() + _flat(o.casorati_A()) + _flat(o.casorati_T())
           + s.psi() - s.def_H())
    anti = s.d_H() + o.div_T_normal() - _flat(o.cross())
    return block(sym, t), block(anti, t)


def walczak_ex(b):
    a, c = b.top, b.perp
    rhs = a.s_ex() + c.s_ex() + a.norm2_T() + c.norm2_T() + a.div_H() + c.div_H()
    return b.s_mix_frame() - rhs


def foliated_line(b):
    """Dual identity specialised to integrable D~ (T = 0)."""
    sym, _ = riccati_lines(b, b.top)
    return sym


def codim1_terms(b):
    """Pieces for the p = 1 (D spanned by the unit normal N) specialisations.

    Returns r_D~ restricted to D~, A_N, grad_N h, H~ and Def of H~ on D~.
    """
    if b.p != 1:
        raise ValueError("codimension-one identities need p = 1")
    N = b.nor[0]
    t = b.tan
    top, perp = b.top, b.perp
    AN = block(top.A[:, N], t)
    RN = block(np.einsum("naxay->nxy", b.Rf[:, [N]][:, :, :, [N]]), t)  # g(R'(N,X)N,Y)
    nabla_N_h = block(top.dh[:, N, N], t)
    Ht = perp.H[:, t]
    DefF = block(perp.def_H(), t)
    return RN, AN, nabla_N_h, Ht, DefF


def codim1_jacobi(b):
    """(R_N + A_N^2) - (nabla_N h - H~ (x) H~ + Def H~) on D~."""
    RN, AN, nNh, Ht, DefF = codim1_terms(b)
    lhs = RN + np.einsum("nab,nbc->nac", AN, AN)
    rhs = nNh - np.einsum("na,nb->nab", Ht, Ht) + DefF
    return lhs - rhs


def codim1_ric(b):
    """Ric(N,N) - (div(tau1 N + H~) + tau1^2 - tau2) for integrable D~, p = 1."""
    N = b.nor[0]
    top, perp = b.top, b.perp
    tau1 = top.H[:, N]
    AN = block(top.A[:, N], b.tan)
    tau2 = np.einsum("nab,nba->n", AN, AN)
    ricNN = np.einsum("nxx->n", b.partial_ricci(b.perp)) if b.p == 1 else None
    return ricNN - (top.div_H() + perp.div_H() + tau1 ** 2 - tau2)


def unitfield_ric(b):
    """n = 1 form: Ric(N,N) = div(H + H~) + t1^2 - t2 + ||T~||^2 for N spanning D~.

    Evaluated on the model where D~ is one-dimensional.
    """
    if b.n != 1:
        raise ValueError("the unit-field identity needs n = 1")
    N = b.tan[0]
    top, perp = b.top, b.perp
    At = block(perp.A[:, N], b.nor)
    t1 = perp.H[:, N]
    t2 = np.einsum("nab,nba->n", At, At)
    ricNN = np.einsum("nxx->n", b.partial_ricci(b.top))
    return ricNN - (top.div_H() + perp.div_H() + t1 ** 2 - t2 + perp.norm2_T())


def unitfield_jacobi(b):
    """(R_N + A~_N^2 + (T~_N)^2) - (nabla_N h~ - H (x) H + Def_D H) on D, n = 1."""
    if b.n != 1:
        raise ValueError("the unit-field identity needs n = 1")
    N = b.tan[0]
    nn = b.nor
    top, perp = b.top, b.perp
    At = block(perp.A[:, N], nn)
    Tt = block(perp.Tsharp[:, N], nn)
    RN = block(np.einsum("naxay->nxy", b.Rf[:, [N]][:, :, :, [N]]), nn)
    lhs = RN + np.einsum("nab,nbc->nac", At, At) + np.einsum("nab,nbc->nac", Tt, Tt)
    H = top.H[:, nn]
    rhs = block(perp.dh[:, N, N], nn) - np.einsum("na,nb->nab", H, H) + block(top.def_H(), nn)
    return lhs - rhs


NAMES = ("prop1-sym", "prop1-antisym", "prop1-dual-sym", "prop1-dual-antisym",
         "walczak", "walczak-ex", "trace-rD", "trace-rF")


def residuals_at(b):
    """Pointwise residual norms of every identity applicable to ``b``."""
    out = {}
    sym, anti = riccati_lines(b, b.perp)
    out["prop1-sym"] = _norm(sym)
    out["prop1-antisym"] = _norm(anti)
    sym, anti = riccati_lines(b, b.top)
    out["prop1-dual-sym"] = _norm(sym)
    out["prop1-dual-antisym"] = _norm(anti)
    fr = b.s_mix_frame()
    out["walczak"] = np.abs(fr - b.s_mix_walczak())
    out["walczak-ex"] = np.abs(walczak_ex(b))
    out["trace-rD"] = np.abs(s_mix(b, "trace-rD") - fr)
    out["trace-rF"] = np.abs(s_mix(b, "trace-rF") - fr)
    out["ric-ex-trace"] = np.abs(np.einsum("naa->n", b.top.ric_ex()) - b.top.s_ex())
    out["divN"] = _divN_check(b)
    integrable_top = float(np.max(np.abs(b.top.T))) < 1e-12
    if integrable_top:
        out["foliated"] = _norm(foliated_line(b))
    if b.p == 1 and integrable_top:
        out["codim1-jacobi"] = _norm(codim1_jacobi(b))
        out["codim1-ric"] = np.abs(codim1_ric(b))
    if b.n == 1:
        out["unitfield-ric"] = np.abs(unitfield_ric(b))
        out["unitfield-jacobi"] = _norm(unitfield_jacobi(b))
    return out


def _divN_check(b):
    """D~-divergence minus divergence minus g(H~, X), for X = H~ (a D~ field)."""
    perp = b.perp
    dH = perp.dH
    t = b.tan
    full = np.einsum("nll->n", dH)
    tang = np.einsum("nll->n", dH[:, t][:, :, t])
    return np.abs(tang - full - perp.norm2_H())


def identity_residuals(model, X, chunk=512):
    """Max over the sample of each residual norm."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    acc = {}
    for s in range(0, len(X), chunk):
        b = Bundle(model, X[s:s + chunk])
        for k, v in residuals_at(b).items():
            acc[k] = max(acc.get(k, 0.0), float(np.max(v)))
    return acc
