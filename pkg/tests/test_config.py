import numpy as np
import pytest

from mixcurv import config
from mixcurv.chart import ModelError
from mixcurv.extrinsic import Bundle
from mixcurv.models import BUILTINS, build_model
from mixcurv import variation as V

from conftest import sample

CT_TEXT = """\
# contact distribution on the flat 3-torus
[chart]
name = mycontact
dim = 3
periodic = true true true
periods = 2*pi 2*pi 2*pi
mode = top

[params]
eps = 0.5

[metric]
g_1_1 = 1
g_2_2 = 1
g_3_3 = 1

[distribution]
v_1 = 1, 0, 0
v_2 = 0, 1, eps*cos(x1)
"""


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_round_trip_builtins(name):
    m = build_model(name)
    text = config.dumps(m)
    m2, fam = config.loads(text)
    assert fam is None
    assert m2 == m
    assert config.dumps(m2) == text


def test_file_matches_builtin_geometry(tmp_path):
    m, _ = config.loads(CT_TEXT)
    ref = build_model("CT")
    X = sample(ref, 20, 1)
    a, b = Bundle(m, X), Bundle(ref, X)
    np.testing.assert_allclose(a.top.norm2_T(), b.top.norm2_T(), atol=1e-15)
    p = tmp_path / "ct.model"
    config.save(p, m)
    assert config.load(p)[0] == m


def test_family_section_round_trip():
    text = CT_TEXT + "\n[family]\nside = D\nname = stretch\neps = 0.2\ng_3_3(t) = 1+t*(1+0.1*cos(x2))\n"
    m, fam = config.loads(text)
    assert fam.side == "D" and fam.name == "stretch" and fam.eps == 0.2
    m2, fam2 = config.loads(config.dumps(m, fam))
    assert fam2.metric_exprs == fam.metric_exprs and m2 == m
    X = sample(m, 5, 2)
    np.testing.assert_allclose(fam.S(X, 0.0).v[:, 2, 2], 1 + 0.1 * np.cos(X[:, 1]))
    with pytest.raises(config.ConfigError):
        config.dumps(m, V.random_family(m, "D", 1))


@pytest.mark.parametrize("bad, line", [
    ("[chart]\ndim = 3\n[metric]\ng_1_1 = 1\n[distribution]\nv_1 = 1, 0\n", 6),
    ("[chart]\ndim = 3\n[wat]\n", 3),
    ("[chart]\ndim = 3\nperiodc = true\n", 3),
    ("[chart]\ndim = 2\n[metric]\ng_1_1 = x3\n[distribution]\nv_1 = 1, 0\n", 4),
    ("[chart]\ndim = 2\n[metric]\ng_1_1 = 1\ng_1_1 = 2\n", 5),
    ("[chart]\ndim = 2\nperiodic = true maybe\n", 3),
    ("[chart]\ndim = 2\n[params]\nx1 = 3\n", 4),
    ("g_1_1 = 1\n", 1),
    ("[chart]\ndim = 2\n[metric]\ng_1_1 = sin(\n[distribution]\nv_1 = 1, 0\n", 4),
    ("[chart]\ndim = 2\nmode = both\n[metric]\n[distribution]\n", 3),
])
def test_errors_carry_line_numbers(bad, line):
    with pytest.raises(config.ConfigError) as err:
        config.loads(bad)
    assert err.value.line == line
    assert isinstance(err.value, ModelError)


def test_missing_sections_and_box():
    with pytest.raises(config.ConfigError):
        config.loads("[chart]\ndim = 2\n")
    with pytest.raises(config.ConfigError):
        config.loads("[chart]\ndim = 2\nperiodic = true false\n[metric]\n[distribution]\nv_1 = 1, 0\n")
