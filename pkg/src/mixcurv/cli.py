"""Command-line driver producing verification reports.

    mixcurv evaluate WT --at 0.1,0.2,0.3 --quantity S_mix
    mixcurv check-identities CT --samples 200 --seed 1
    mixcurv integrate WT --grid 48 --functional jmix
    mixcurv variation-check WT --family homothety
    mixcurv el-residual WT --variant codim1-D --grid 48 --param a=0.3
    mixcurv report DT

A model is a builtin name or the path of a model file.  Every check is a
record (name, anchor, value, tol, pass); the exit status is 0 iff all
executed checks pass, 1 otherwise and 2 on usage errors.  ``--json PATH``
writes the report as JSON (``-`` for standard output); the output is
byte-identical for identical arguments apart from the ``timing`` field.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import config
from . import euler_lagrange as EL
from . import identities as ID
from . import integrate as I
from . import variation as V
from .chart import ModelError
from .extrinsic import Bundle
from .models import BUILTINS, build_model
from .splitting import FrameError

SCHEMA = "mixcurv-report/1"

IDENTITY_ANCHORS = {
    "prop1-sym": "partial Ricci tensor of D, symmetric part",
    "prop1-antisym": "partial Ricci tensor of D, antisymmetric part",
    "prop1-dual-sym": "partial Ricci tensor of D~, symmetric part",
    "prop1-dual-antisym": "partial Ricci tensor of D~, antisymmetric part",
    "walczak": "S_mix = S_ex + S~_ex + |T|^2 + |T~|^2 + div(H + H~)",
    "walczak-ex": "S_mix - div(H + H~) from Weingarten and integrability operators",
    "trace-rD": "Tr r_D = S_mix",
    "trace-rF": "Tr r_D~ = S_mix",
    "ric-ex-trace": "Tr Ric_ex = S_ex",
    "divN": "tilde divergence against full divergence of H~",
    "foliated": "partial Ricci identity for an integrable D~",
    "codim1-jacobi": "Jacobi operator form, p = 1",
    "codim1-ric": "Ric(N,N) = div(tau1 N + H~) + tau1^2 - tau2, p = 1",
    "unitfield-ric": "Ric(N,N) for a unit field N spanning D~",
    "unitfield-jacobi": "Jacobi operator form, n = 1",
}

VARIANT_ANCHORS = {
    "D-general": "Euler-Lagrange equation for D-variations",
    "Dt-general": "Euler-Lagrange equation for D~-variations",
    "foliated-D": "Euler-Lagrange equation for D-variations, integrable D~",
    "foliated-TF": "Euler-Lagrange equation for D~-variations, integrable D~",
    "unitfield-D": "D-variations, D~ spanned by a unit field",
    "unitfield-TF": "D~-variations, D~ spanned by a unit field",
    "codim1-D": "tau1^2 - tau2 = -S*_mix(M,g)",
    "codim1-TF": "D~-variations, p = 1",
    "conformal-D": "trace equation for biconformal D-variations",
    "conformal-Dt": "trace equation for biconformal D~-variations",
    "trace-check": "integral of the traced equation",
}

QUANTITIES = {
    "S_mix": lambda b: b.s_mix_frame(),
    "S_mix_walczak": lambda b: b.s_mix_walczak(),
    "S_ex": lambda b: b.top.s_ex(),
    "S_ex_perp": lambda b: b.perp.s_ex(),
    "h": lambda b: b.top.h,
    "H": lambda b: b.top.H,
    "T": lambda b: b.top.T,
    "h_perp": lambda b: b.perp.h,
    "H_perp": lambda b: b.perp.H,
    "T_perp": lambda b: b.perp.T,
    "norm2_h": lambda b: b.top.norm2_h(),
    "norm2_H": lambda b: b.top.norm2_H(),
    "norm2_T": lambda b: b.top.norm2_T(),
    "norm2_h_perp": lambda b: b.perp.norm2_h(),
    "norm2_H_perp": lambda b: b.perp.norm2_H(),
    "norm2_T_perp": lambda b: b.perp.norm2_T(),
    "div_H": lambda b: b.top.div_H(),
    "div_H_perp": lambda b: b.perp.div_H(),
    "r_D": lambda b: b.partial_ricci(b.perp),
    "r_Dt": lambda b: b.partial_ricci(b.top),
    "metric": lambda b: b.md.G.v,
    "christoffel": lambda b: b.md.gamma.v,
    "ricci": lambda b: b.md.ricci(),
    "scalar": lambda b: b.md.scalar(),
    "density": lambda b: b.density,
    "frame": lambda b: b.U,
}

FAMILIES = ("static", "homothety", "random-D", "random-Dt",
            "random-conformal-D", "random-conformal-Dt")

DEFAULT_TOL = {"identities": 1e-6, "fd": 1e-4, "critical": EL.CRITICAL_TOL}


class UsageError(Exception):
    pass


# -- report ----------------------------------------------------------------

class Report:
    def __init__(self, command, model, args):
        self.data = {
            "schema": SCHEMA,
            "engine": __version__,
            "command": command,
            "model": model.describe() if model is not None else None,
            "seed": args.seed,
            "checks": [],
            "constants": {},
            "results": {},
            "timing": {},
        }
        self._t0 = time.perf_counter()

    def check(self, name, anchor, value, tol, ok=None, **extra):
        value = _clean(value)
        passed = bool(value <= tol) if ok is None else bool(ok)
        rec = {"name": name, "anchor": anchor, "value": value, "tol": tol, "pass": passed}
        rec.update({k: _clean(v) for k, v in extra.items()})
        self.data["checks"].append(rec)
        return passed

    @property
    def ok(self):
        return all(c["pass"] for c in self.data["checks"])

    def finish(self):
        self.data["timing"] = {"seconds": round(time.perf_counter() - self._t0, 3)}
        self.data["passed"] = self.ok
        return self.data


def _clean(x):
    """JSON-safe plain Python values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            return repr(x)
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _text(data, out):
    m = data["model"]
    if m:
        out.write(f"model {m['name']} (d={m['dim']}, n={m['n']}, p={m['p']}, "
                  f"closed={m['closed']}) params={m['params']}\n")
    for k, v in data["constants"].items():
        out.write(f"  {k} = {v!r}\n")
    for k, v in data["results"].items():
        if isinstance(v, (int, float, str)):
            out.write(f"  {k} = {v!r}\n")
    for c in data["checks"]:
        flag = "PASS" if c["pass"] else "FAIL"
        val = c["value"]
        val = f"{val:.3e}" if isinstance(val, float) else str(val)
        out.write(f"  {flag} {c['name']:<34} {val:>12}  tol {c['tol']:.1e}  [{c['anchor']}]\n")
    out.write(f"{'all checks passed' if data.get('passed') else 'some checks failed'}\n")


# -- parsing helpers -----------------------------------------------------------

def _params(items):
    out = {}
    for it in items or []:
        if "=" not in it:
            raise UsageError(f"--param expects name=value, got {it!r}")
        k, v = it.split("=", 1)
        k = k.strip()
        try:
            out[k] = v if k in ("f1", "f2", "u") else float(v)
        except ValueError:
            raise UsageError(f"--param {k} expects a number, got {v!r}") from None
    return out


def load_model(spec, params):
    """Builtin name or model file; returns (model, family or None)."""
    if spec in BUILTINS:
        return build_model(spec, **params), None
    if os.path.exists(spec):
        model, fam = config.load(spec)
        if params:
            unknown = set(params) - set(model.params)
            if unknown:
                raise UsageError(f"unknown parameters for {spec}: {sorted(unknown)}")
            merged = dict(model.params, **params)
            model = type(model).build(model.name, model.chart, model.metric, model.fields,
                                      model.mode, merged, model.scalar, notes=model.notes)
            if fam is not None:
                fam = V.expr_family(model, fam.metric_exprs, fam.side, fam.eps, fam.name)
        return model, fam
    raise UsageError(f"unknown model {spec!r}; builtins: {', '.join(sorted(BUILTINS))}")


def _grid(model, text):
    if text is None:
        return I.GridSpec.default(model.chart)
    try:
        parts = [int(p) for p in str(text).split(",")]
    except ValueError:
        raise UsageError(f"--grid expects N or N1,N2,..., got {text!r}") from None
    if len(parts) == 1:
        parts = parts * model.dim
    g = I.GridSpec(tuple(parts))
    try:
        g.validate(model.chart)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return g


def _point(model, text):
    try:
        x = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--at expects comma-separated numbers, got {text!r}") from None
    if len(x) != model.dim:
        raise UsageError(f"--at needs {model.dim} coordinates")
    return np.array([x])


def _samples(model, n, seed):
    return model.chart.sample(np.random.default_rng(seed), n)


# -- commands ------------------------------------------------------------------

def cmd_evaluate(args, model, fam, rep):
    if not args.at:
        raise UsageError("evaluate needs --at")
    X = _point(model, args.at)
    b = Bundle(model, X)
    names = [q.strip() for q in args.quantity.split(",")] if args.quantity else [
        "S_mix", "S_ex", "S_ex_perp", "norm2_h", "norm2_H", "norm2_T",
        "norm2_h_perp", "norm2_H_perp", "norm2_T_perp", "div_H", "div_H_perp"]
    for q in names:
        if q not in QUANTITIES:
            raise UsageError(f"unknown quantity {q!r}; known: {', '.join(QUANTITIES)}")
        rep.data["results"][q] = _clean(np.asarray(QUANTITIES[q](b))[0])
    rep.data["results"]["at"] = X[0].tolist()


def cmd_check_identities(args, model, fam, rep):
    X = _samples(model, args.samples, args.seed)
    tol = args.tol if args.tol is not None else DEFAULT_TOL["identities"]
    res = ID.identity_residuals(model, X)
    for k in sorted(res):
        rep.check(k, IDENTITY_ANCHORS.get(k, k), res[k], tol)
    rep.data["results"]["samples"] = args.samples


def cmd_integrate(args, model, fam, rep):
    g = _grid(model, args.grid)
    rep.data["results"]["grid"] = list(g.points)
    fn = args.functional or "jmix"
    if fn == "vol":
        rep.data["results"]["volume"] = I.volume(model, g)
        return
    if not model.closed:
        raise UsageError(f"--functional {fn} needs a closed model")
    if fn == "jmix":
        direct = I.j_mix(model, g)
        qform = I.j_mix(model, g, method="Q-form")
        rep.data["results"]["J_mix"] = direct
        rep.data["results"]["J_mix_Q_form"] = qform
        tol = args.tol if args.tol is not None else 1e-9
        rep.check("J_mix-routes", "J_mix direct against the divergence-free integrand",
                  abs(direct - qform) / max(abs(direct), 1.0), tol)
    elif fn == "sstar":
        c = EL.global_constants(model, g)
        rep.data["constants"] = _clean({k: c[k] for k in ("volume", "J_mix", "S_star_D", "S_star_Dt")})
    else:
        raise UsageError(f"unknown functional {fn!r}")


def _family(args, model, fam):
    name = args.family
    if name is None:
        raise UsageError("variation-check needs --family")
    if name in FAMILIES:
        if name == "static":
            return V.static_family(model)
        if name == "homothety":
            return V.homothety(model, "D")
        parts = name.split("-")
        side = parts[-1]
        kind = "conformal" if "conformal" in parts else "general"
        return V.random_family(model, side, seed=args.seed, kind=kind)
    if os.path.exists(name):
        m2, f2 = config.load(name)
        if f2 is None:
            raise UsageError(f"{name} has no [family] section")
        return V.expr_family(model, f2.metric_exprs, f2.side, f2.eps, f2.name)
    if name == "file":
        if fam is None:
            raise UsageError("the model file has no [family] section")
        return fam
    raise UsageError(f"unknown family {name!r}; known: {', '.join(FAMILIES)} or a model file")


def cmd_variation_check(args, model, fam, rep):
    family = _family(args, model, fam)
    h = args.step or V.STEP
    tol = args.tol if args.tol is not None else DEFAULT_TOL["fd"]
    rep.data["results"]["family"] = family.name
    X = _samples(model, min(args.samples, 20), args.seed)
    V.check_adapted(family, X)
    rep.check("adapted", "S has no mixed components", 0.0, tol)
    if family.name == "homothety" and model.p == 1 and model.closed:
        g = _grid(model, args.grid)
        law = V.homothety_law(model, g, h=h)
        for row in law["samples"]:
            rep.check(f"scaling-law t={row['t']}", "J_mix(g_t) = (1+t)^(-1/2) J_mix(g)",
                      row["rel_err"], max(tol * 1e-2, 1e-6), ratio=row["ratio"])
        rep.check("dJ/dt = -J/2", "d/dt J_mix(g_t) = -1/2 J_mix(g) at t = 0",
                  law["dJ_rel_err"], max(tol * 1e-2, 1e-6))
    if family.side in V.SIDES:
        res = V.lemma_residuals(family, X, h)
        for k in sorted(res):
            rep.check(f"lemma {k}", "pointwise variation formula", res[k]["rel"], tol,
                      abs=res[k]["abs"])
        if model.closed:
            g = _grid(model, args.grid)
            c = EL.global_constants(model, g)
            rep.data["constants"] = _clean({k: c[k] for k in ("volume", "J_mix", "S_star_D", "S_star_Dt")})
            res = V.integrated_lemmas(family, g, h)
            for k in sorted(res):
                rep.check(f"integrated {k}", "integrated norm-derivative formula",
                          res[k]["rel"], tol, fd=res[k]["fd"], formula=res[k]["formula"])
            nc = V.normalization_check(family, g, h=h, constants=c)
            rep.check("volume normalisation", "Vol(M, g-bar_t) = Vol(M, g)",
                      nc["volume_rel_err"], 1e-9)
            rep.check("normalised derivative", "dJ(g-bar)/dt = dJ(g_t)/dt - 1/2 S* int Tr S",
                      nc["rel_err"], tol)
            gc = V.gradient_check(family, g, h=h, constants=c)
            rep.check("gradient pairing", "int <G, S> dvol = dJ(g_t)/dt",
                      gc["rel_err"], tol, pairing=gc["pairing"], fd=gc["fd"])
            rep.check("normalised gradient pairing", "int <G - 1/2 S* g, S> dvol = dJ(g-bar_t)/dt",
                      gc["normalized_rel_err"], tol, pairing=gc["normalized_pairing"],
                      fd=gc["normalized_fd"])


def cmd_el_residual(args, model, fam, rep):
    if not args.variant:
        raise UsageError("el-residual needs --variant")
    if args.variant not in EL.VARIANTS:
        raise UsageError(f"unknown variant {args.variant!r}; known: {', '.join(EL.VARIANTS)}")
    if not model.closed:
        raise UsageError("el-residual needs a closed model; use report for domain models")
    g = _grid(model, args.grid)
    tol = args.tol if args.tol is not None else DEFAULT_TOL["critical"]
    r = EL.el_residual(model, g, args.variant)
    rep.data["constants"] = _clean(r["constants"])
    rep.data["results"].update({"grid": list(g.points), "l2_norm": r["l2_norm"],
                                "form_gap": r["form_gap"]})
    rep.check(args.variant, VARIANT_ANCHORS[args.variant], r["sup_norm"], tol)
    if "integral_identity" in r:
        rep.check("trace-check integral", "integral of the traced equation vanishes",
                  abs(r["integral_identity"]), 1e-8)
    rep.check("form agreement", "extrinsic form = partial Ricci form", r["form_gap"], 1e-6)


def cmd_report(args, model, fam, rep):
    X = _samples(model, args.samples, args.seed)
    itol = DEFAULT_TOL["identities"]
    for k, v in sorted(ID.identity_residuals(model, X).items()):
        rep.check(f"identity {k}", IDENTITY_ANCHORS.get(k, k), v, itol)
    tol = args.tol if args.tol is not None else DEFAULT_TOL["critical"]
    # criticality is a classification, not a pass/fail claim
    if model.closed:
        g = _grid(model, args.grid)
        cr = EL.criticality_report(model, g, tol=tol)
        rep.data["constants"] = _clean(cr["constants"])
        rep.data["results"]["criticality"] = _clean(cr["variants"])
        if "flow" in cr:
            rep.data["results"]["flow"] = _clean(cr["flow"])
        for row in cr["variants"]:
            rep.check(f"form agreement {row['variant']}", "extrinsic form = partial Ricci form",
                      row["form_gap"], 1e-6)
    else:
        cr = EL.pointwise_report(model, tol=tol, samples=args.samples, seed=args.seed)
        rep.data["results"]["criticality"] = _clean(cr["criteria"])


COMMANDS = {
    "evaluate": cmd_evaluate,
    "check-identities": cmd_check_identities,
    "integrate": cmd_integrate,
    "variation-check": cmd_variation_check,
    "el-residual": cmd_el_residual,
    "report": cmd_report,
}


HELP = {
    "evaluate": "pointwise quantities at one point",
    "check-identities": "curvature identity residuals at random points",
    "integrate": "volume, J_mix or S*_mix by quadrature",
    "variation-check": "FD checks along a metric family",
    "el-residual": "Euler-Lagrange residual for one variant",
    "report": "criticality classification over all variants",
}


def build_parser():
    p = argparse.ArgumentParser(prog="mixcurv", description="Mixed scalar curvature checks.")
    p.add_argument("--version", action="version", version=f"mixcurv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("model", help="builtin model name or model file")
        s.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="override a model parameter (repeatable)")
        s.add_argument("--tol", type=float, help="pass threshold for the checks")
        s.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
        s.add_argument("--grid", help="quadrature nodes per axis: N or N1,N2,...")
        s.add_argument("--seed", type=int, default=0, help="seed for sample points and families")
        s.add_argument("--samples", type=int, default=100, help="number of random sample points")
        s.add_argument("--at", help="comma-separated chart point (evaluate)")
        s.add_argument("--quantity", help="comma-separated quantity names (evaluate)")
        s.add_argument("--functional", choices=("jmix", "vol", "sstar"), help="integrate target")
        s.add_argument("--family", help=f"{', '.join(FAMILIES)}, 'file' or a model file path")
        s.add_argument("--step", type=float, help="finite-difference step in t")
        s.add_argument("--variant", help="Euler-Lagrange variant (el-residual)")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        model, fam = load_model(args.model, _params(args.param))
        rep = Report(args.command, model, args)
        COMMANDS[args.command](args, model, fam, rep)
    except (UsageError, ModelError, FrameError, V.FamilyError, EL.VariantError) as exc:
        print(f"mixcurv: error: {exc}", file=sys.stderr)
        return 2
    data = rep.finish()
    if args.json:
        text = json.dumps(data, sort_keys=True, indent=2) + "\n"
        if args.json == "-":
            sys.stdout.write(text)
        else:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
    if args.json != "-":
        _text(data, sys.stdout)
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
