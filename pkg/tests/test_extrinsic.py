import numpy as np
import pytest

from mixcurv import identities as ID
from mixcurv.extrinsic import Bundle
from mixcurv.models import (contact_torus, double_twisted, flat_torus, nonintegrable4,
                            sphere_leaf, warped_torus)

from conftest import generic3_line, generic3_plane, generic4, sample

MODELS = {
    "FlatTorus": lambda: flat_torus(3, 2),
    "WT": lambda: warped_torus(0.3),
    "DT": double_twisted,
    "CT": lambda: contact_torus(0.5),
    "NI4": lambda: nonintegrable4(0.5),
    "G3-line": generic3_line,
    "G3-plane": generic3_plane,
    "G4": generic4,
}


def bundle(name, n=50, seed=0):
    m = MODELS[name]()
    return m, Bundle(m, sample(m, n, seed))


def test_flat_torus_all_zero():
    _, b = bundle("FlatTorus", 10)
    for s in (b.top, b.perp):
        for t in (s.h, s.T, s.H, s.dh, s.dH):
            assert np.max(np.abs(t)) < 1e-15


def test_warped_torus_tensors():
    m, b = bundle("WT", 30)
    z = b.X[:, 2]
    f1 = -0.3 * np.sin(z)
    h = b.top.h
    for a in range(2):
        for c in range(2):
            np.testing.assert_allclose(h[:, 2, a, c], -f1 * (a == c), atol=1e-14)
    np.testing.assert_allclose(b.top.H[:, 2], -2 * f1, atol=1e-14)
    assert np.max(np.abs(b.top.H[:, :2])) < 1e-15
    for t in (b.perp.h, b.perp.H, b.top.T, b.perp.T):
        assert np.max(np.abs(t)) < 1e-14
    # Psi(dz, dz) = Tr A_z^2 = 2 f'^2 (A_z = -f' Id on a 2-plane)
    np.testing.assert_allclose(b.top.psi()[:, 2, 2], 2 * f1 ** 2, atol=1e-14)
    np.testing.assert_allclose(b.top.div_H(), m.reference_value("div_H", b.X), atol=1e-12)


def test_contact_torus_integrability_tensor():
    m = contact_torus(0.5)
    X = np.array([[0.0, 0.1, 0.2], [1.1, 0.3, 2.0], [2.5, 4.0, 1.0]])
    b = Bundle(m, X)
    np.testing.assert_allclose(b.top.norm2_T(), m.reference_value("T_norm2", X), atol=1e-14)
    assert b.top.norm2_T()[1] > 1e-3


def test_brute_force_bracket_ct():
    # T(X, Y) = 1/2 [X, Y]^perp for the spanning fields X = d1, Y = d2 + eps cos x1 d3
    eps = 0.5
    X = np.array([[0.7, 0.2, 0.4]])
    b = Bundle(contact_torus(eps), X)
    x = X[0, 0]
    br = np.array([0.0, 0.0, -eps * np.sin(x)])     # [X, Y] in coordinates
    nrm = np.array([0.0, -eps * np.cos(x), 1.0])
    nrm /= np.linalg.norm(nrm)
    U = b.U[0]
    # frame components: E1 = X, E2 = Y/|Y|
    want = 0.5 * br.dot(nrm) / np.linalg.norm([0, 1, eps * np.cos(x)])
    K = b.nor[0]
    assert abs(abs(b.top.T[0, K, 0, 1]) - abs(want)) < 1e-14
    assert np.sign(b.top.T[0, K, 0, 1]) == np.sign(want * U[K].dot(nrm))


def test_double_twisted_umbilic_and_s_ex():
    _, b = bundle("DT", 50)
    for s in (b.top, b.perp):
        assert np.max(s.umbilicity_defect()) < 1e-9
        k = len(s.tan)
        np.testing.assert_allclose(s.s_ex(), (k - 1) / k * s.norm2_H(), atol=1e-13)


def test_sphere_leaf_totally_geodesic():
    m = sphere_leaf()
    b = Bundle(m, sample(m, 30, 1))
    assert np.max(np.abs(b.top.h)) < 1e-14
    assert np.max(np.abs(b.perp.h)) > 1e-2


def test_integrable_implies_t_zero():
    _, b = bundle("NI4", 30)
    assert np.max(np.abs(b.top.T)) < 1e-14
    assert np.max(np.abs(b.perp.T)) > 1e-2


@pytest.mark.parametrize("name", sorted(MODELS))
def test_bundle_invariants(name):
    _, b = bundle(name, 50, 3)
    for s in (b.top, b.perp):
        assert np.max(np.abs(s.h - np.swapaxes(s.h, 2, 3))) < 1e-12
        assert np.max(np.abs(s.T + np.swapaxes(s.T, 2, 3))) < 1e-12
        # values live in the complement, arguments in the distribution
        off = np.ones(b.d, bool)
        off[s.nor] = False
        assert np.max(np.abs(s.h[:, off])) < 1e-12
        assert np.max(np.abs(s.T[:, off])) < 1e-12
        assert np.max(np.abs(np.einsum("nkaa->nk", s.h) - s.H)) < 1e-12
        tr = lambda M: np.einsum("naa->n", M)
        assert np.max(np.abs(tr(s.psi()) - (s.norm2_h() - s.norm2_T()))) < 1e-10
        assert np.max(np.abs(tr(s.phi_h()) - s.s_ex())) < 1e-10
        assert np.max(np.abs(tr(s.phi_T()) + s.norm2_T())) < 1e-10
        k = s.kappa()
        assert np.max(np.abs(tr(k))) < 1e-10
        # Casorati operators: frame sums over the complement
        assert np.max(np.abs(tr(s.casorati_A()) - s.norm2_h())) < 1e-10
        assert np.max(np.abs(tr(s.casorati_T()) + s.norm2_T())) < 1e-10
        if np.max(np.abs(s.T)) < 1e-13:
            assert np.max(np.abs(k)) < 1e-13
    res = ID.residuals_at(b)
    assert np.max(res["divN"]) < 1e-9


@pytest.mark.parametrize("name", ["CT", "G3-plane", "G4"])
def test_conullity_against_covariant_derivative(name):
    # g(C_Z X, Y) = g(h(X,Y) + T(X,Y), Z) = -g(Y, nabla_X Z) for Z in D and X, Y in D~
    m, b = bundle(name, 20, 5)
    G = b.md.G.v
    gm = b.md.gamma.v
    Q = b.Q
    U = b.U
    for mm in range(b.d):
        Zc = Q.v[:, :, mm]                  # Z = Q d_mm, a field of D
        dZ = Q.d1[:, :, mm, :]              # [k, l] = d_l Z^k
        for a in b.tan:
            Xv = U[:, a]
            nab = np.einsum("nl,nkl->nk", Xv, dZ) + np.einsum("nkls,nl,ns->nk", gm, Xv, Zc)
            zf = np.einsum("nKi,nij,nj->nK", U, G, Zc)
            for c in b.tan:
                lhs = -np.einsum("ni,nij,nj->n", U[:, c], G, nab)
                rhs = np.einsum("nK,nK->n", b.top.h[:, :, a, c] + b.top.T[:, :, a, c], zf)
                assert np.max(np.abs(lhs - rhs)) < 1e-11
