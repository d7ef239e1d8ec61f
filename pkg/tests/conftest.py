import numpy as np
import pytest

from mixcurv import jets
from mixcurv.chart import Chart
from mixcurv.models import Model

# Generic metrics with no symmetry; both distributions non-integrable where the
# ranks allow it.  Used wherever a special model would hide a term.
_G3 = [["exp(0.3*cos(x3))", "0.1*sin(x2)", "0"],
       ["0.1*sin(x2)", "1", "0.1*cos(x1)"],
       ["0", "0.1*cos(x1)", "exp(0.2*sin(x1))"]]
_G4 = [["exp(0.3*cos(x3))", "0.1*sin(x4)", "0", "0"],
       ["0.1*sin(x4)", "1", "0", "0"],
       ["0", "0", "exp(0.2*sin(x1))", "0"],
       ["0", "0", "0", "1+0.2*cos(x2)"]]


def generic3_line():
    return Model.build("G3-line", Chart.torus(3), _G3, [["1", "0", "0.4*cos(x2)"]])


def generic3_plane():
    return Model.build("G3-plane", Chart.torus(3), _G3,
                       [["1", "0", "0.4*cos(x2)"], ["0", "1", "0"]])


def generic4():
    return Model.build("G4", Chart.torus(4), _G4,
                       [["1", "0", "0.4*cos(x4)", "0"], ["0", "1", "0", "0.3*sin(x1)"]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sample(model, n, seed=0):
    return model.chart.sample(np.random.default_rng(seed), n)


def random_vector_field(seed, d):
    """Seeded smooth periodic vector field as an order-1 jet, for divergence checks."""
    rng = np.random.default_rng(seed)
    coeff = rng.normal(size=(d, 3))
    modes = rng.integers(-2, 3, size=(d, 2, d))

    def field(X):
        xs = [jets.Jet.variable(X[:, k], k, d, order=1) for k in range(d)]
        comps = []
        for i in range(d):
            arg1 = sum((xs[k] * float(modes[i, 0, k]) for k in range(d)), xs[0] * 0.0)
            arg2 = sum((xs[k] * float(modes[i, 1, k]) for k in range(d)), xs[0] * 0.0)
            comps.append(jets.cos(arg1) * coeff[i, 0] + jets.sin(arg2) * coeff[i, 1] + coeff[i, 2])
        return jets.stack(comps, 1)
    return field


# acceptance criteria register one line each here; printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[k]:
            terminalreporter.write_line(line)
