import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixcurv import integrate as I
from mixcurv import variation as V
from mixcurv.extrinsic import to_frame
from mixcurv.models import contact_torus, double_twisted, nonintegrable4, warped_torus

from conftest import generic3_plane, sample

WT_GRID = I.GridSpec((8, 8, 32))


def wt():
    return warped_torus(0.3)


def test_static_family():
    m = wt()
    f = V.static_family(m)
    X = sample(m, 10, 1)
    b, S = V.family_eval(f, X, 0.0)
    assert np.max(np.abs(S)) == 0.0
    d, err = V.fd_time_derivative(f, "volume", grid=WT_GRID)
    assert abs(d) < 1e-10
    with pytest.raises(V.FamilyError):
        V.lemma_residuals(f, X)


def test_static_lemmas_vanish():
    m = wt()
    f = V.expr_family(m, [[m.metric[i][j] for j in range(3)] for i in range(3)], side="D")
    for k, r in V.lemma_residuals(f, sample(m, 10, 2)).items():
        assert r["abs"] < 1e-12, k


def test_homothety_tensor_is_conformal():
    m = wt()
    f = V.homothety(m, "D")
    X = sample(m, 10, 3)
    for t in (0.0, 0.5, 2.0):
        b, S = V.family_eval(f, X, t)
        np.testing.assert_allclose(S, np.broadcast_to(np.diag([0.0, 0.0, 1.0]), S.shape), atol=1e-14)
        # S = s g_t^perp with s = 1/(1+t)
        gperp = f.metric(X, t, order=0).v[:, 2, 2]
        np.testing.assert_allclose(S[:, 2, 2], gperp / (1 + t), rtol=1e-14)
    with pytest.raises(V.FamilyError):
        f.check_t(-1.0)


def test_dt_expression_family():
    m = wt()
    w = "exp(2*a*cos(x3))*(1+t*sin(x3))"
    rows = [[w, "0", "0"], ["0", w, "0"], ["0", "0", "1"]]
    f = V.expr_family(m, rows, side="Dt", eps=0.5)
    X = sample(m, 10, 4)
    b, S = V.family_eval(f, X, 0.0)
    gt = np.exp(0.6 * np.cos(X[:, 2])) * np.sin(X[:, 2])
    np.testing.assert_allclose(S[:, 0, 0], gt, rtol=1e-14)
    np.testing.assert_allclose(S[:, 1, 1], gt, rtol=1e-14)
    assert np.max(np.abs(S[:, 2])) == 0.0


def test_misdeclared_families_rejected():
    m = wt()
    f = V.homothety(m, "D")
    bad = V.MetricFamily(m, "Dt", "wrong-side", tensor=f.tensor)
    with pytest.raises(V.FamilyError):
        V.family_eval(bad, sample(m, 5))
    mixed = V.expr_family(m, [["exp(2*a*cos(x3))", "0", "t*0.1"], ["0", "exp(2*a*cos(x3))", "0"],
                              ["t*0.1", "0", "1"]], side="general")
    with pytest.raises(V.FamilyError):
        V.family_eval(mixed, sample(m, 5))
    with pytest.raises(V.FamilyError):
        V.random_family(m, "both")
    with pytest.raises(V.FamilyError):
        V.random_family(m, "D", kind="wild")


def test_fd_derivative_accuracy():
    val, err = V.fd_derivative(lambda t: math.exp(3 * t))
    assert abs(val - 3.0) < 1e-9 and err < 1e-5
    val, err = V.fd_derivative(lambda t: 7.0)
    assert val == 0.0


MODELS = {"WT": wt, "DT": double_twisted, "CT": lambda: contact_torus(0.5),
          "NI4": lambda: nonintegrable4(0.5), "G3-plane": generic3_plane}


@pytest.mark.parametrize("name", sorted(MODELS))
@pytest.mark.parametrize("side", V.SIDES)
@pytest.mark.parametrize("kind", ["general", "conformal"])
def test_pointwise_lemmas(name, side, kind):
    m = MODELS[name]()
    f = V.random_family(m, side, seed=3, kind=kind)
    res = V.lemma_residuals(f, sample(m, 30, 5))
    for k, r in res.items():
        assert r["rel"] < 1e-5, (k, r)
    # integrability tensors do not move
    assert res["d_T"]["abs"] < 1e-12 and res["d_Tt"]["abs"] < 1e-12
    if kind == "conformal":
        assert "conf_d_norm_h" in res


def test_homothety_norm_laws():
    m = wt()
    f = V.homothety(m, "D")
    res = V.lemma_residuals(f, sample(m, 20, 6))
    for k in ("conf_d_norm_h", "conf_d_norm_H", "conf_d_h", "conf_d_H"):
        assert res[k]["rel"] < 1e-6, (k, res[k])


@pytest.mark.parametrize("side", V.SIDES)
def test_integrated_lemmas_wt(side):
    m = wt()
    r = V.integrated_lemmas(V.random_family(m, side, seed=1), WT_GRID)
    for k in ("n_ht", "n_Ht", "n_h_minus_H", "n_Tt", "n_T"):
        assert r[k]["rel"] < 1e-4 or r[k]["abs"] < 1e-10, (k, r[k])


def test_integrated_lemma_sign_is_discriminating():
    # on CT the D~-variation of |h|^2 is carried entirely by the commutator term
    m = contact_torus(0.5)
    r = V.integrated_lemmas(V.random_family(m, "Dt", seed=2), I.GridSpec.uniform(m.chart, 16))
    n = r["n_ht"]
    assert n["rel"] < 1e-4
    assert abs(n["formula_other_sign"] - n["fd"]) > 1e-3 * abs(n["fd"])


def test_umbilicity_preserved_by_d_variations():
    m = double_twisted()
    X = sample(m, 30, 7)
    for seed in range(3):
        f = V.random_family(m, "D", seed=seed)
        for t in (-f.eps / 2, f.eps / 2):
            assert np.max(f.bundle(X, t).top.umbilicity_defect()) < 1e-8


def test_d_variation_leaves_top_block():
    m = double_twisted()
    X = sample(m, 10, 8)
    f = V.random_family(m, "D", seed=4)
    b0, b1 = f.bundle(X, 0.0), f.bundle(X, 0.02)
    G0, G1 = f.metric(X, 0.0, order=0).v, f.metric(X, 0.02, order=0).v
    assert np.max(np.abs(G0[:, :2, :2] - G1[:, :2, :2])) < 1e-15
    np.testing.assert_allclose(b0.P.v, b1.P.v, atol=1e-14)


@pytest.mark.parametrize("side", V.SIDES)
def test_frame_ode_step_second_order(side):
    # one Euler step of dE/dt = -1/2 S#(E) keeps g_t-orthonormality to O(dt^2)
    m = generic3_plane()
    X = sample(m, 10, 9)
    f = V.random_family(m, side, seed=5)
    U = f.bundle(X, 0.0).U
    S = f.S(X, 0.0, order=0).v
    Ginv = f.metric(X, 0.0, order=0).v
    Ssh = np.einsum("nik,nkj->nij", np.linalg.inv(Ginv), S)
    errs = []
    for dt in (1e-2, 5e-3):
        E = U - 0.5 * dt * np.einsum("nij,naj->nai", Ssh, U)
        G = f.metric(X, dt, order=0).v
        gram = np.einsum("nai,nij,nbj->nab", E, G, E)
        errs.append(np.max(np.abs(gram - np.eye(3))))
        E0 = np.einsum("nai,nij,nbj->nab", U, G, U)
        assert np.max(np.abs(E0 - np.eye(3))) > 10 * errs[-1]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_normalized_homothety():
    m = wt()
    f = V.homothety(m, "D")
    nf = V.normalized_family(f, WT_GRID)
    for t in (-0.5, 0.25, 1.0):
        assert nf.phi(t) == pytest.approx(1 / (1 + t), rel=1e-12)
        assert abs(nf.volume(t) / nf.volume0 - 1) < 1e-9
    with pytest.raises(V.FamilyError):
        V.normalized_family(V.static_family(m), WT_GRID)


def test_normalization_relation_wt():
    m = wt()
    f = V.expr_family(m, [["exp(2*a*cos(x3))", "0", "0"], ["0", "exp(2*a*cos(x3))", "0"],
                          ["0", "0", "1+t*(0.5+0.4*cos(x3)^2)"]], side="D", eps=0.2)
    r = V.normalization_check(f, WT_GRID)
    assert r["volume_rel_err"] < 1e-9
    assert r["rel_err"] < 1e-5


def test_pairing_examples_wt():
    m = wt()
    grid = I.GridSpec((8, 8, 48))
    assert V.dj_gradient_pairing(m, V.static_family(m).__class__(m, "D", "zero",
                                 tensor=lambda X, G, P, Q: G * 0.0), grid) == 0.0
    hom = V.homothety_law(m, grid)
    f = V.homothety(m, "D")
    pair = V.dj_gradient_pairing(m, f, grid)
    assert abs(pair + 0.5 * hom["J"]) < 1e-6 * abs(hom["J"])
    w = "exp(2*a*cos(x3))*(1+t*sin(x3))"
    fam = V.expr_family(m, [[w, "0", "0"], ["0", w, "0"], ["0", "0", "1"]], side="Dt", eps=0.5)
    # sin z is odd about z = 0 and the integrand is otherwise even: both sides vanish
    r = V.gradient_check(fam, grid)
    assert abs(r["pairing"]) < 1e-10 and abs(r["fd"]) < 1e-10
    w = "exp(2*a*cos(x3))*(1+t*cos(x3))"
    fam = V.expr_family(m, [[w, "0", "0"], ["0", w, "0"], ["0", "0", "1"]], side="Dt", eps=0.5)
    r = V.gradient_check(fam, grid)
    assert abs(r["fd"]) > 1e-2
    assert r["rel_err"] < 1e-4 and r["normalized_rel_err"] < 1e-4


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(V.SIDES))
def test_adaptedness_along_random_families(seed, side):
    m = generic3_plane()
    f = V.random_family(m, side, seed)
    X = sample(m, 8, seed)
    for t in (-f.eps / 2, 0.0, f.eps / 2):
        b = f.bundle(X, t)
        G = f.metric(X, t, order=0).v
        Gf = to_frame(b.U, G)
        assert np.max(np.abs(Gf[:, b.tan][:, :, b.nor])) < 1e-12
        V.check_adapted(f, X, t)
