import numpy as np
import pytest

from ctvff import AlgorithmConfig, ScenarioConfig

_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report("A1", ok, "detail")``."""

    def _report(name, ok, detail=""):
        _ACCEPTANCE[name] = (bool(ok), detail)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s[1:])):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def small_config():
    """Short static scenario that runs in well under a second per trial."""
    return ScenarioConfig(
        N=7, L_p=2, profile_db=(0.0, -3.0), K_initial=3, power_offsets_db=(0.0, 0.0, 0.0),
        snr_db=15.0, f_dT=0.0,
        algorithms=(AlgorithmConfig("ctvff"), AlgorithmConfig("fixed", lam=0.99)),
        training_symbols=30, total_symbols=120, runs=4, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
