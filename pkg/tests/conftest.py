import sys

import numpy as np
import pytest
from hypothesis import settings

from hodgelab import catalog
from hodgelab.complex import label_boundary
from hodgelab.hodge import HodgeComplex
from hodgelab.metric import make_metric

settings.register_profile("hodgelab", max_examples=40, deadline=None)
settings.load_profile("hodgelab")

# (catalog name, M1 selector); M2 always takes the rest of the boundary
CASES = [
    ("interval", "none"), ("interval", "boundary"),
    ("circle", "none"),
    ("triangle", "none"), ("triangle", "boundary"),
    ("square-2", "none"), ("square-2", "boundary"),
    ("disk", "none"), ("disk", "boundary"),
    ("annulus", "none"), ("annulus", "boundary"), ("annulus", "component:0"),
    ("torus-8x8", "none"),
    ("torus7", "none"),
    ("sphere", "none"),
]


def case_id(case):
    return f"{case[0]}[{case[1]}]"


_HODGE = {}


def hodge_for(name: str, m1: str = "none", metric: str | None = None) -> HodgeComplex:
    """Cached Hodge complex for a catalog mesh and M1 selector."""
    key = (name, m1, metric)
    if key not in _HODGE:
        mesh = catalog.load(name)
        kind = metric or ("whitney" if mesh.geometry is not None else "identity")
        labels = label_boundary(mesh.complex, m1, "rest")
        _HODGE[key] = HodgeComplex(mesh.complex, labels, make_metric(mesh.complex, mesh.geometry, kind))
    return _HODGE[key]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
