"""Plain-text model files.

Grammar, one ``key = value`` per line; lines starting with ``#`` are comments::

    [chart]
    name = <identifier>                 optional, default "user"
    notes = <text>                      optional, rest of the line
    dim = 2 | 3 | 4
    periodic = <d booleans>             true/false, 1/0
    periods = <d numbers>               period on periodic axes, ignored otherwise
    box_<k> = <lo> <hi>                 required for every non-periodic axis k
    mode = top | perp                   top: fields span D~, perp: fields span D

    [params]
    <name> = <number>

    [metric]
    g_<i>_<j> = <expr>                  missing entries are 0; g_j_i defaults to g_i_j

    [distribution]
    v_<k> = <expr>, <expr>, ...         one field per key, d components

    [scalar]                            optional
    u = <expr>

    [family]                            optional one-parameter family
    side = D | Dt | general
    name = <identifier>
    eps = <number>
    g_<i>_<j>(t) = <expr in x1..xd, t>  entries not given follow the base metric

Numbers in ``periods``, ``box_k``, ``params`` and ``eps`` may be written as
expressions without variables (``2*pi``).  Unknown sections or keys are
errors.  :func:`dumps` writes expressions fully parenthesised and numbers
with repr(), so ``loads(dumps(m))`` equals ``m`` exactly.
"""

import re

from . import expr as ex
from .chart import Chart, ModelError
from .models import Model

SECTIONS = ("chart", "params", "metric", "distribution", "scalar", "family")
_G_RE = re.compile(r"^g_([1-9])_([1-9])(\(t\))?$")
_V_RE = re.compile(r"^v_([1-9][0-9]*)$")
_BOX_RE = re.compile(r"^box_([1-9])$")
_TRUE = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


class ConfigError(ModelError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


def _sections(text):
    out = {}
    cur = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", no)
            cur = line[1:-1].strip()
            if cur not in SECTIONS:
                raise ConfigError(f"unknown section [{cur}]", no)
            if cur in out:
                raise ConfigError(f"duplicate section [{cur}]", no)
            out[cur] = {}
            continue
        if cur is None:
            raise ConfigError("entry outside a section", no)
        if "=" not in line:
            raise ConfigError("expected key = value", no)
        k, v = (s.strip() for s in line.split("=", 1))
        if k in out[cur]:
            raise ConfigError(f"duplicate key {k!r}", no)
        out[cur][k] = (v, no)
    return out


def _number(text, line):
    try:
        return float(ex.evaluate(ex.parse(text, dim=4, params=set()), {}))
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"not a number: {text!r} ({exc})", line) from None


def _expr(text, line, dim, params, allow_t=False):
    try:
        return ex.parse(text, dim=dim, params=params, allow_t=allow_t)
    except ValueError as exc:
        raise ConfigError(str(exc), line) from None


def _chart(sec):
    known = {"name", "notes", "dim", "periodic", "periods", "mode"}
    for k, (_, no) in sec.items():
        if k not in known and not _BOX_RE.match(k):
            raise ConfigError(f"unknown key {k!r} in [chart]", no)
    if "dim" not in sec:
        raise ConfigError("[chart] needs dim")
    dtext, dno = sec["dim"]
    if not dtext.isdigit():
        raise ConfigError("dim must be an integer", dno)
    d = int(dtext)
    per_text, pno = sec.get("periodic", (" ".join(["true"] * d), None))
    flags = []
    for w in per_text.split():
        if w.lower() not in _TRUE:
            raise ConfigError(f"not a boolean: {w!r}", pno)
        flags.append(_TRUE[w.lower()])
    periods_text, qno = sec.get("periods", (" ".join(["2*pi"] * d), None))
    periods = [_number(w, qno) for w in periods_text.split()]
    if len(flags) != d or len(periods) != d:
        raise ConfigError("periodic/periods need one entry per axis")
    box = []
    for k in range(d):
        key = f"box_{k + 1}"
        if key in sec:
            text, no = sec[key]
            parts = text.split()
            if len(parts) != 2:
                raise ConfigError(f"{key} needs two numbers", no)
            box.append((_number(parts[0], no), _number(parts[1], no)))
        elif not flags[k]:
            raise ConfigError(f"non-periodic axis {k + 1} needs {key}")
        else:
            box.append((0.0, periods[k]))
    mode, mno = sec.get("mode", ("top", None))
    if mode not in ("top", "perp"):
        raise ConfigError(f"mode must be top or perp, not {mode!r}", mno)
    name = sec.get("name", ("user", None))[0]
    notes = sec.get("notes", ("", None))[0]
    return name, notes, Chart(d, tuple(flags), tuple(periods), tuple(box)), mode


def _metric_entries(sec, d, params, section, allow_t=False):
    g = {}
    for k, (v, no) in sec.items():
        m = _G_RE.match(k)
        if not m or (m.group(3) and not allow_t):
            raise ConfigError(f"unknown key {k!r} in [{section}]", no)
        i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
        if i >= d or j >= d:
            raise ConfigError(f"index out of range in {k!r}", no)
        if (i, j) in g:
            raise ConfigError(f"duplicate entry for g_{i + 1}_{j + 1}", no)
        g[(i, j)] = _expr(v, no, d, params, allow_t)
    for (i, j), e in list(g.items()):
        if (j, i) not in g:
            g[(j, i)] = e
    return g


def loads(text):
    """Parse a model file; returns ``(model, family_or_None)``."""
    secs = _sections(text)
    if "chart" not in secs:
        raise ConfigError("missing section [chart]")
    name, notes, chart, mode = _chart(secs["chart"])
    d = chart.dim
    params = {}
    for k, (v, no) in secs.get("params", {}).items():
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", k) or k == "t" or ex._VAR_RE.match(k):
            raise ConfigError(f"invalid parameter name {k!r}", no)
        params[k] = _number(v, no)
    for need in ("metric", "distribution"):
        if need not in secs:
            raise ConfigError(f"missing section [{need}]")
    names = set(params)
    g = _metric_entries(secs["metric"], d, names, "metric")
    metric = [[g.get((i, j), ex.Const(0.0)) for j in range(d)] for i in range(d)]
    fields = []
    keys = sorted(secs["distribution"].items(), key=lambda kv: kv[1][1])
    for k, (v, no) in keys:
        if not _V_RE.match(k):
            raise ConfigError(f"unknown key {k!r} in [distribution]", no)
        comps = [c.strip() for c in v.split(",")]
        if len(comps) != d:
            raise ConfigError(f"{k} needs {d} components", no)
        fields.append([_expr(c, no, d, names) for c in comps])
    scalar = None
    if "scalar" in secs:
        for k, (v, no) in secs["scalar"].items():
            if k != "u":
                raise ConfigError(f"unknown key {k!r} in [scalar]", no)
            scalar = _expr(v, no, d, names)
    model = Model.build(name, chart, metric, fields, mode=mode, params=params, scalar=scalar,
                        notes=notes)
    family = None
    if "family" in secs:
        family = _family(model, secs["family"], names)
    return model, family


def _family(model, sec, names):
    from . import variation as V
    side, sno = sec.get("side", ("general", None))
    if side not in ("D", "Dt", "general"):
        raise ConfigError(f"side must be D, Dt or general, not {side!r}", sno)
    meta = {k: sec[k] for k in ("side", "name", "eps") if k in sec}
    entries = {k: v for k, v in sec.items() if k not in meta}
    g = _metric_entries(entries, model.dim, names, "family", allow_t=True)
    d = model.dim
    rows = [[g.get((i, j), model.metric[i][j]) for j in range(d)] for i in range(d)]
    eps = _number(sec["eps"][0], sec["eps"][1]) if "eps" in sec else 0.5
    name = sec.get("name", ("family", None))[0]
    return V.expr_family(model, rows, side=side, eps=eps, name=name)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(model, family=None):
    d = model.dim
    c = model.chart
    if "\n" in model.notes:
        raise ConfigError("notes must fit on one line")
    lines = ["[chart]", f"name = {model.name}"] + ([f"notes = {model.notes}"] if model.notes else []) + [
             f"dim = {d}",
             "periodic = " + " ".join("true" if f else "false" for f in c.periodic),
             "periods = " + " ".join(repr(float(p)) for p in c.periods)]
    for k, (flag, (lo, hi)) in enumerate(zip(c.periodic, c.box)):
        if not flag:
            lines.append(f"box_{k + 1} = {float(lo)!r} {float(hi)!r}")
    lines.append(f"mode = {model.mode}")
    if model.params:
        lines += ["", "[params]"] + [f"{k} = {float(v)!r}" for k, v in model.params.items()]
    lines += ["", "[metric]"]
    for i in range(d):
        for j in range(i, d):
            lines.append(f"g_{i + 1}_{j + 1} = {ex.to_text(model.metric[i][j])}")
    lines += ["", "[distribution]"]
    for k, v in enumerate(model.fields):
        lines.append(f"v_{k + 1} = " + ", ".join(ex.to_text(e) for e in v))
    if model.scalar is not None:
        lines += ["", "[scalar]", f"u = {ex.to_text(model.scalar)}"]
    if family is not None:
        if family.metric_exprs is None:
            raise ConfigError("only expression families can be saved")
        lines += ["", "[family]", f"side = {family.side}", f"name = {family.name}",
                  f"eps = {float(family.eps)!r}"]
        for i in range(d):
            for j in range(i, d):
                lines.append(f"g_{i + 1}_{j + 1}(t) = {ex.to_text(family.metric_exprs[i][j])}")
    return "\n".join(lines) + "\n"


def save(path, model, family=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model, family))
