"""Acceptance criteria 1-10, one PASS/FAIL line each.

Every criterion collects its sub-checks as (name, value, tolerance, ok) and
prints them; the criterion line is PASS only when all sub-checks hold.  The
lines are repeated in the terminal summary, so they show without ``-s``.

Two sub-claims are known not to hold for the models as stated (the
constant-f1 double-twisted torus with f2 varying along the leaves, and the
vanishing curvature of the half-plane family).  Those criteria print FAIL
and are marked xfail(strict=True) on a dedicated exception: any other
failing sub-check raises AssertionError and fails the run, and if the known
sub-claim starts holding the strict xfail turns into a failure too.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mixcurv import euler_lagrange as EL
from mixcurv import identities as ID
from mixcurv import integrate as I
from mixcurv import variation as V
from mixcurv.models import (contact_torus, double_twisted, flat_torus, half_plane, level_set,
                            nonintegrable4, warped_torus)

from conftest import ACCEPTANCE_LINES, random_vector_field, sample

MODELS = {
    "FlatTorus": lambda: flat_torus(3, 1),
    "WT": lambda: warped_torus(0.3),
    "DT": double_twisted,
    "CT": lambda: contact_torus(0.5),
    "NI4": lambda: nonintegrable4(0.5),
}
# grids for integrated checks; 4D models at 8^4 (errors there are set by the FD step)
GRIDS = {"FlatTorus": (8, 8, 8), "WT": (8, 8, 48), "DT": (8,) * 4, "CT": (16,) * 3, "NI4": (8,) * 4}
WT_GRID = I.GridSpec((8, 8, 48))


class KnownDiscrepancy(Exception):
    pass


def _fmt(v):
    return f"{v:.3e}" if isinstance(v, float) else str(v)


def report(k, title, checks, known=()):
    """Print and register the criterion; raise on failure."""
    ok = all(c[3] for c in checks)
    lines = [f"criterion {k}: {'PASS' if ok else 'FAIL'}  {title}"]
    for name, value, tol, good in checks:
        mark = "ok " if good else "NOT MET"
        lines.append(f"    [{mark}] {name}: {_fmt(value)} (want {tol})")
    ACCEPTANCE_LINES[k] = lines
    print("\n".join(lines))
    bad = [c[0] for c in checks if not c[3]]
    unexpected = [b for b in bad if b not in known]
    assert not unexpected, f"criterion {k}: {unexpected}"
    if bad:
        raise KnownDiscrepancy(f"criterion {k}: {bad}")


def below(name, value, tol):
    return (name, float(value), f"< {tol:g}", bool(value < tol))


def above(name, value, tol):
    return (name, float(value), f"> {tol:g}", bool(value > tol))


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


# -- 1-3 identities ---------------------------------------------------------------

_RES = {}


def residuals(name, swapped=False):
    key = (name, swapped)
    if key not in _RES:
        m = MODELS[name]()
        m = m.swapped() if swapped else m
        _RES[key] = ID.identity_residuals(m, sample(m, 100, seed=7))
    return _RES[key]


def test_criterion_1_walczak():
    checks = [below(f"{n} walczak, 100 points", residuals(n)["walczak"], 1e-7) for n in MODELS]
    report(1, "mixed scalar curvature, frame sum against the extrinsic formula", checks)


def test_criterion_2_riccati_identities():
    checks = []
    for n in MODELS:
        r = residuals(n)
        for key in ("prop1-sym", "prop1-antisym", "prop1-dual-sym", "prop1-dual-antisym"):
            checks.append(below(f"{n} {key}", r[key], 1e-6))
    wt = residuals("WT")
    checks.append(below("WT codim1 Jacobi form", wt["codim1-jacobi"], 1e-6))
    checks.append(below("WT codim1 Ricci form", wt["codim1-ric"], 1e-6))
    sw = residuals("WT", swapped=True)
    checks.append(below("WT (swapped, n = 1) unit-field Ricci form", sw["unitfield-ric"], 1e-6))
    checks.append(below("WT (swapped, n = 1) unit-field Jacobi form", sw["unitfield-jacobi"], 1e-6))
    report(2, "partial Ricci identity and its dual, with codimension-one forms", checks)


def test_criterion_3_trace_chain():
    checks = []
    for n in MODELS:
        r = residuals(n)
        checks.append(below(f"{n} Tr r_D - S_mix", r["trace-rD"], 1e-7))
        checks.append(below(f"{n} Tr r_F - S_mix", r["trace-rF"], 1e-7))
        checks.append(below(f"{n} walczak - S_mix", r["walczak"], 1e-7))
        m = MODELS[n]()
        grid = I.GridSpec(GRIDS[n])
        direct = I.j_mix(m, grid, "direct")
        qform = I.j_mix(m, grid, "Q-form")
        err = abs(direct - qform) / max(abs(direct), 1.0)
        checks.append(below(f"{n} integrated, direct vs divergence-free form", err, 1e-7))
    report(3, "trace chain for S_mix", checks)


# -- 4-7 variations ------------------------------------------------------------------

POINTWISE_GENERAL = ("d_ht", "d_Ht", "d_h", "d_H")
INTEGRATED = ("n_ht", "n_Ht", "n_h_minus_H", "n_Tt", "n_T")


def test_criterion_4_variation_lemmas():
    checks = []
    for n, make in MODELS.items():
        m = make()
        X = sample(m, 100, seed=3)
        grid = I.GridSpec(GRIDS[n])
        worst_p, worst_c, worst_i = 0.0, 0.0, 0.0
        for seed, side in ((0, "D"), (1, "Dt"), (2, "D")):
            fam = V.random_family(m, side, seed=seed)
            r = V.lemma_residuals(fam, X)
            worst_p = max([worst_p] + [r[k]["rel"] for k in POINTWISE_GENERAL])
            conf = V.random_family(m, side, seed=seed, kind="conformal")
            r = V.lemma_residuals(conf, X)
            worst_c = max([worst_c] + [v["rel"] for k, v in r.items() if k.startswith("conf_")])
            r = V.integrated_lemmas(fam, grid)
            worst_i = max([worst_i] + [r[k]["rel"] for k in INTEGRATED])
        checks.append(below(f"{n} pointwise h~, H~, h, H derivatives (3 families)", worst_p, 1e-4))
        checks.append(below(f"{n} conformal lines (3 families)", worst_c, 1e-4))
        checks.append(below(f"{n} integrated norm derivatives (3 families)", worst_i, 1e-4))
    report(4, "variation lemmas, FD against formulas", checks)


def test_criterion_5_homothety_law():
    r = V.homothety_law(warped_torus(0.3), WT_GRID)
    checks = [below(f"J(g_t)/J(g) vs (1+t)^(-1/2) at t = {s['t']}", s["rel_err"], 1e-6)
              for s in r["samples"]]
    checks.append(below("dJ/dt at 0 vs -J/2", r["dJ_rel_err"], 1e-6))
    report(5, "homothety scaling law on WT(0.3)", checks)


def _wt_z_family(seed):
    """Random D-variation of WT whose S depends on z, so it pairs with the z-only gradient."""
    rng = np.random.default_rng(seed)
    c = [float(v) for v in 0.3 * rng.standard_normal(4)]
    s = (f"({c[0]!r})+({c[1]!r})*cos(x3)+({c[2]!r})*sin(2*x3)"
         f"+({c[3]!r})*cos(x1+x3)")
    rows = [["exp(2*a*cos(x3))", "0", "0"], ["0", "exp(2*a*cos(x3))", "0"],
            ["0", "0", f"1+t*({s})"]]
    return V.expr_family(warped_torus(0.3), rows, side="D", eps=0.5, name=f"wt-z-{seed}")


def test_criterion_6_volume_normalization():
    checks = []
    wt = warped_torus(0.3)
    dt = double_twisted()
    cases = [("WT z-dependent D", _wt_z_family(0), WT_GRID),
             ("WT random Dt", V.random_family(wt, "Dt", seed=1), WT_GRID),
             ("DT random D", V.random_family(dt, "D", seed=2), I.GridSpec((8,) * 4)),
             ("DT random Dt", V.random_family(dt, "Dt", seed=3), I.GridSpec((8,) * 4))]
    for name, fam, grid in cases:
        r = V.normalization_check(fam, grid)
        checks.append(below(f"{name}: volume of normalized metric", r["volume_rel_err"], 1e-9))
        err = abs(r["dJ_bar"] - r["predicted_dJ_bar"]) / max(abs(r["dJ_bar"]),
                                                             abs(r["predicted_dJ_bar"]))
        checks.append(below(f"{name}: derivative relation", err, 1e-4))
    report(6, "volume-normalized families", checks)


def test_criterion_7_gradient_keystone():
    checks = []
    wt = warped_torus(0.3)
    dt = double_twisted()
    grids = {"WT": I.GridSpec((16, 16, 48)), "DT": I.GridSpec((10,) * 4)}
    fams = {"WT": [V.random_family(wt, "Dt", seed=s) for s in (1, 3, 5)]
            + [_wt_z_family(s) for s in (0, 1)],
            "DT": [V.random_family(dt, side, seed=s)
                   for s, side in enumerate(("D", "Dt", "D", "Dt", "D"))]}
    for n, model in (("WT", wt), ("DT", dt)):
        c = EL.global_constants(model, grids[n])
        for fam in fams[n]:
            r = V.gradient_check(fam, grids[n], constants=c)
            a, b = r["normalized_pairing"], r["normalized_fd"]
            nondegenerate = min(abs(a), abs(b)) > 1e-6
            checks.append(below(f"{n} {fam.name}: pairing {a:.6g} vs FD {b:.6g}",
                                rel(a, b) if nondegenerate else math.inf, 1e-4))
    report(7, "Euler-Lagrange residual is the gradient of J along normalized families", checks)


# -- 8-10 criticality and integral identities -------------------------------------------

@pytest.mark.xfail(raises=KnownDiscrepancy, strict=True,
                   reason="constant f1 is not critical when f2 varies along the leaves")
def test_criterion_8_criticality():
    checks = []
    for m in (flat_torus(3, 1), flat_torus(3, 2), flat_torus(4, 2)):
        rep = EL.criticality_report(m, I.GridSpec.uniform(m.chart, 8))
        worst = max(row["sup_norm"] for row in rep["variants"])
        checks.append(below(f"flat {m.dim}-torus, n = {m.n}, worst of "
                            f"{len(rep['variants'])} variants", worst, 1e-8))
    a = 0.3
    wt = warped_torus(a)
    r = EL.el_residual(wt, WT_GRID, "codim1-D")
    w = lambda z: math.exp(2 * a * math.cos(z))
    c0 = (quad(lambda z: 2 * a * a * math.sin(z) ** 2 * w(z), 0, 2 * math.pi, epsabs=1e-14)[0]
          / quad(w, 0, 2 * math.pi, epsabs=1e-14)[0])
    X, _ = I.nodes(wt.chart, WT_GRID)
    want = float(np.max(np.abs(2 * a * a * np.sin(X[:, 2]) ** 2 - c0)))
    checks.append(below("WT(0.3) codim1-D sup-norm vs closed form", abs(r["sup_norm"] - want), 1e-6))
    checks.append(above("WT(0.3) codim1-D sup-norm", r["sup_norm"], 0.0))
    grid = I.GridSpec((10,) * 4)
    const = EL.el_residual(double_twisted(f1="0.2"), grid, "foliated-D")
    checks.append(below("DT f1 = 0.2 (f2 = 0.1 cos x1) foliated-D sup-norm", const["sup_norm"], 1e-6))
    varying = EL.el_residual(double_twisted(f1="0.2*cos(x3)"), grid, "foliated-D")
    checks.append(above("DT f1 = 0.2 cos x3 foliated-D sup-norm", varying["sup_norm"], 1e-2))
    report(8, "criticality classifications", checks,
           known=("DT f1 = 0.2 (f2 = 0.1 cos x1) foliated-D sup-norm",))


@pytest.mark.xfail(raises=KnownDiscrepancy, strict=True,
                   reason="the half-plane family has Gaussian curvature -2/(2y+c), not 0")
def test_criterion_9_domain_examples():
    checks = []
    m = half_plane(1.0)
    X = sample(m, 50, seed=9)
    r = EL.half_plane_checks(m, X)
    checks.append(below("HP(1) Gaussian curvature, 50 points", np.max(np.abs(r["K"])), 1e-8))
    checks.append(below("HP(1) PDE residual for phi = -log(2y+c)",
                        np.max(np.abs(r["pde_residual"])), 1e-10))
    ls = level_set()
    Y = sample(ls, 50, seed=10)
    q = EL.level_set_quantities(ls, Y)
    u = Y[:, 0] ** 2 - Y[:, 1] ** 2
    checks.append(below("LevelSet L(u) - 8u, 50 points", np.max(np.abs(q["L"] - 8 * u)), 1e-10))
    c = EL.level_set_quantities(ls, np.array([[1.0, 1.0]]))["criterion_euclidean"][0]
    checks.append(below("LevelSet criterion at (1,1) + 8", abs(c + 8.0), 1e-8))
    report(9, "domain examples", checks, known=("HP(1) Gaussian curvature, 50 points",))


def test_criterion_10_integral_identities():
    checks = []
    div_grids = {"FlatTorus": 12, "WT": 24, "DT": 12, "CT": 24, "NI4": 12}
    for n, k in div_grids.items():
        m = MODELS[n]()
        grid = I.GridSpec.uniform(m.chart, k)
        worst = max(abs(I.divergence_integral(m, grid, random_vector_field(s, m.dim)))
                    for s in range(5))
        checks.append(below(f"{n} divergence integral, 5 fields", worst, 1e-9))
    for n, grid in (("WT", WT_GRID), ("DT", I.GridSpec((12,) * 4)), ("CT", I.GridSpec((24,) * 3))):
        r = EL.el_residual(MODELS[n](), grid, "trace-check")
        checks.append(below(f"{n} traced integral identity", abs(r["integral_identity"]), 1e-8))
    report(10, "divergence theorem and traced integral identity", checks)
