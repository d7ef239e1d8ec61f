"""Extrinsic geometry of the two distributions at a batch of points.

Second fundamental forms and integrability tensors are built from the
projector-extended coordinate fields: for the distribution with projector P
and complement Q,

    B^k_ij = Q^k_m P^l_i (nabla_l P)^m_j,   h = sym(B),   T = alt(B),

which is a tensor field defined everywhere, so its Levi-Civita derivative
feeds all divergences without frame-derivative terms.  Everything is
finally expressed in the adapted orthonormal frame U (rows E_a then the D
frame), stored as full d-index arrays that vanish off the relevant blocks.

A :class:`Side` holds the tensors of one distribution: ``tan`` are the frame
indices tangent to it, ``nor`` those of its complement (where h and T take
values).  ``Bundle.top`` is D~ and ``Bundle.perp`` is D.
"""

import numpy as np

from . import jets
from .chart import MetricData
from .splitting import adapted_frame, projectors


def _nabla_proj(gamma, P):
    """(nabla_l P)^m_j as an order-1 jet with index order [l, m, j]."""
    dP = P.deriv()                                       # [m, j, l]
    term = dP.permute(0, 3, 1, 2)
    term = term + jets.einsum("nmlr,nrj->nlmj", gamma, P.truncate(1))
    term = term - jets.einsum("nrlj,nmr->nlmj", gamma, P.truncate(1))
    return term


def _cov3(t, gamma):
    """Values of nabla_l t_kij for a covariant 3-tensor jet t; order [l,k,i,j]."""
    G = gamma.v
    out = np.einsum("nkijl->nlkij", t.d1)
    out = out - jets.contract("nrlk,nrij->nlkij", G, t.v)
    out = out - jets.contract("nrli,nkrj->nlkij", G, t.v)
    out = out - jets.contract("nrlj,nkir->nlkij", G, t.v)
    return out


def _cov1(w, gamma):
    """Values of nabla_l w_k for a covector jet w; order [l, k]."""
    return np.einsum("nkl->nlk", w.d1) - jets.contract("nrlk,nr->nlk", gamma.v, w.v)


def to_frame(U, t):
    """Contract every value axis of t (batch first) with the frame U[n, A, i]."""
    for ax in range(1, t.ndim):
        moved = np.moveaxis(t, ax, -1)
        shape = moved.shape
        flat = moved.reshape(shape[0], -1, shape[-1])
        t = np.moveaxis(np.matmul(flat, np.swapaxes(U, 1, 2)).reshape(shape), -1, ax)
    return t


def _frame3(U, t):
    return to_frame(U, t)


def _frame4(U, t):
    return to_frame(U, t)


def _flat(op):
    """Bilinear form X,Y -> g(op X, Y) from a frame operator matrix op[row, col]."""
    return np.swapaxes(op, -1, -2)


class Side:
    """Configuration tensors of one distribution in adapted-frame components."""

    def __init__(self, name, tan, nor, B, G, Ginv, gamma, U):
        self.name = name
        self.tan = np.asarray(tan)
        self.nor = np.asarray(nor)
        gv = G.truncate(1)
        hu = (B + B.permute(0, 1, 3, 2)) * 0.5           # h^k_ij (contravariant k)
        Tu = (B - B.permute(0, 1, 3, 2)) * 0.5
        Hu = jets.einsum("nkij,nij->nk", hu, Ginv.truncate(1))
        self.h_coord, self.T_coord, self.H_coord = hu.v, Tu.v, Hu.v
        hl = jets.einsum("nkm,nmij->nkij", gv, hu)
        Tl = jets.einsum("nkm,nmij->nkij", gv, Tu)
        Hl = jets.einsum("nkm,nm->nk", gv, Hu)
        self.h = _frame3(U, hl.v)
        self.T = _frame3(U, Tl.v)
        self.H = to_frame(U, Hl.v)
        self.dh = _frame4(U, _cov3(hl, gamma))
        self.dT = _frame4(U, _cov3(Tl, gamma))
        self.dH = to_frame(U, _cov1(Hl, gamma))

    # -- first order ------------------------------------------------------

    @property
    def A(self):
        """Weingarten operators A[K] as frame matrices, g(A_K X, Y) = h(X,Y).K."""
        return np.swapaxes(self.h, -1, -2)

    @property
    def Tsharp(self):
        return np.swapaxes(self.T, -1, -2)

    def conullity(self):
        return self.A + self.Tsharp

    def norm2_h(self):
        return np.einsum("nkab,nkab->n", self.h, self.h)

    def norm2_T(self):
        return np.einsum("nkab,nkab->n", self.T, self.T)

    def norm2_H(self):
        return np.einsum("nk,nk->n", self.H, self.H)

    def s_ex(self):
        return self.norm2_H() - self.norm2_h()

    def ric_ex(self):
        """Ric^ex(X,Y) = g(h(X,Y), H) - sum_a g(h(X,E_a), h(Y,E_a))."""
        return (np.einsum("nkxy,nk->nxy", self.h, self.H)
                - np.einsum("nkxa,nkya->nxy", self.h, self.h))

    def umbilicity_defect(self):
        """Norm of h - (1/k) H g~ on the tangent block."""
        k = len(self.tan)
        gt = np.zeros(self.h.shape[-2:])
        gt[self.tan, self.tan] = 1.0
        D = self.h - self.H[:, :, None, None] * gt / k
        return np.sqrt(np.einsum("nkab,nkab->n", D, D))

    # -- quadratic --------------------------------------------------------

    def casorati_A(self):
        A = self.A
        return np.einsum("nkab,nkbc->nac", A, A)

    def casorati_T(self):
        T = self.Tsharp
        return np.einsum("nkab,nkbc->nac", T, T)

    def psi(self):
        """Psi(X,Y) = Tr(A_Y A_X + T_Y T_X) for X, Y in the normal block."""
        A, T = self.A, self.Tsharp
        return np.einsum("nyab,nxba->nxy", A, A) + np.einsum("nyab,nxba->nxy", T, T)

    def phi_h(self):
        return (np.einsum("nx,ny->nxy", self.H, self.H)
                - np.einsum("nxab,nyab->nxy", self.h, self.h))

    def phi_T(self):
        return -np.einsum("nxab,nyab->nxy", self.T, self.T)

    def kappa(self):
        """Sum over normal frame of the commutators [T_K, A_K] (operator)."""
        A, T = self.A, self.Tsharp
        return np.einsum("nkab,nkbc->nac", T, A) - np.einsum("nkab,nkbc->nac", A, T)

    def cross(self):
        A, T = self.A, self.Tsharp
        return np.einsum("nkab,nkbc->nac", A, T) + np.einsum("nkab,nkbc->nac", T, A)

    # -- derivatives ------------------------------------------------------

    def div_h(self):
        return np.einsum("nllab->nab", self.dh)

    def div_h_normal(self):
        nor = self.nor
        return np.einsum("nllab->nab", self.dh[:, nor][:, :, nor])

    def div_T(self):
        return np.einsum("nllab->nab", self.dT)

    def div_T_normal(self):
        nor = self.nor
        return np.einsum("nllab->nab", self.dT[:, nor][:, :, nor])

    def div_H(self):
        return np.einsum("nll->n", self.dH)

    def def_H(self):
        return 0.5 * (self.dH + np.swapaxes(self.dH, 1, 2))

    def d_H(self):
        return 0.5 * (self.dH - np.swapaxes(self.dH, 1, 2))


class Bundle:
    """All pointwise tensors of a model at points ``X``."""

    def __init__(self, model, X, metric_jet=None, fields_jet=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.X = X
        G = metric_jet if metric_jet is not None else model.metric_jet(X, order=2)
        V = fields_jet if fields_jet is not None else model.fields_jet(X, order=2)
        self.mode = model.mode
        self.md = md = MetricData(G)
        d = G.v.shape[-1]
        self.d = d
        P, Q = projectors(G, V, model.mode)
        self.P, self.Q = P, Q
        self.U = U = adapted_frame(G.v, V.v, model.mode, P=P.v)
        k = V.v.shape[-1]
        n = k if model.mode == "top" else d - k
        self.n, self.p = n, d - n
        tan, nor = np.arange(n), np.arange(n, d)
        self.tan, self.nor = tan, nor
        gamma = md.gamma
        nP = _nabla_proj(gamma, P)
        P1, Q1 = P.truncate(1), Q.truncate(1)
        # B^k_ij = Q^k_m P^l_i nablaP[l, m, j]
        QnP = jets.einsum("nkm,nlmj->nlkj", Q1, nP)
        B = jets.einsum("nli,nlkj->nkij", P1, QnP)
        # dual: P^k_m Q^l_i nablaQ[l, m, j], nablaQ = -nablaP
        PnP = jets.einsum("nkm,nlmj->nlkj", P1, nP)
        Bt = -jets.einsum("nli,nlkj->nkij", Q1, PnP)
        self.top = Side("top", tan, nor, B, G, md.Ginv, gamma, U)
        self.perp = Side("perp", nor, tan, Bt, G, md.Ginv, gamma, U)
        self.Rf = to_frame(U, md.riem())

    def side(self, name):
        return self.top if name == "top" else self.perp

    def other(self, side):
        return self.perp if side is self.top else self.top

    @property
    def density(self):
        return self.md.density

    # -- curvature --------------------------------------------------------

    def partial_ricci(self, side):
        """r concentrated on ``side.tan``: sum over the complement frame."""
        nor = side.nor
        Rf = self.Rf
        r = np.einsum("nkxky->nxy", Rf[:, nor][:, :, :, nor])
        out = np.zeros_like(Rf[:, 0, :, 0, :])
        t = side.tan
        out[:, t[:, None], t[None, :]] = r[:, t][:, :, t]
        return out

    def s_mix_frame(self):
        t, nn = self.tan, self.nor
        Rf = self.Rf
        sub = Rf[:, t][:, :, nn][:, :, :, t][:, :, :, :, nn]
        return np.einsum("naiai->n", sub)

    def s_mix_walczak(self):
        a, b = self.top, self.perp
        return (a.norm2_H() - a.norm2_h() + a.norm2_T()
                + b.norm2_H() - b.norm2_h() + b.norm2_T()
                + a.div_H() + b.div_H())

    def divergence_coord(self, xi):
        """div of a vector-field jet xi^i (order >= 1) via d_i xi^i + Gamma^k_ki xi^i."""
        dxi = np.einsum("nii->n", xi.d1)
        return dxi + np.einsum("nkki,ni->n", self.md.gamma.v, xi.v)


def block(M, rows, cols=None):
    cols = rows if cols is None else cols
    return M[:, rows][:, :, cols]
