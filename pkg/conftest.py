import os

import hypothesis
import numpy as np
import pytest

from coalescents.quadrature import DEFAULT_TOLERANCE, MAX_SUBDIVISIONS, set_limits

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep every test away from the user's ~/.mcoalescents and MCOAL_* variables"""
    monkeypatch.setenv("MCOAL_HOME", str(tmp_path / "mcoal-home"))
    for variable in ("MCOAL_DEPTH", "MCOAL_QMAX", "MCOAL_WINDOWS", "MCOAL_REPLICAS",
                     "MCOAL_FORMAT"):
        monkeypatch.delenv(variable, raising=False)


@pytest.fixture(autouse=True)
def default_quadrature_limits():
    """The runner sets process-wide quadrature limits from its config"""
    yield
    set_limits(DEFAULT_TOLERANCE, MAX_SUBDIVISIONS)
