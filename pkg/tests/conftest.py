import numpy as np
import pytest

from casimir_si.lifshitz import Geometry
from casimir_si.materials import gold_model, silicon_model
from casimir_si.pipeline import DEFAULT_DR, DEFAULT_R, TheoryModel, default_roughness


@pytest.fixture(scope="session")
def gold():
    return gold_model()


@pytest.fixture(scope="session")
def silicon():
    return silicon_model()


@pytest.fixture(scope="session")
def geometry():
    return Geometry(DEFAULT_R, DEFAULT_DR)


@pytest.fixture(scope="session")
def roughness():
    return default_roughness()


@pytest.fixture(scope="session")
def reference_theory():
    """Roughness-corrected Au-Si curve on the full measurement grid."""
    from casimir_si.pipeline import SynthesisSpec
    return TheoryModel.gold_silicon().curve(SynthesisSpec().z)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
