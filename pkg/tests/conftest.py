import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# -- shared desk-scale runs (computed once per session) ----------------------


@pytest.fixture(scope="session")
def surface_desk():
    from mdgsim.experiments import preset, run_error_surface

    return run_error_surface(preset("surface-desk"))


@pytest.fixture(scope="session")
def sweep_desk():
    from mdgsim.experiments import preset, run_endtoend_sweep

    return run_endtoend_sweep(preset("sweep-desk"))


@pytest.fixture(scope="session")
def voa_analytic():
    from mdgsim.experiments import preset, run_voa_sweep

    return run_voa_sweep(preset("voa", grid={"snr_db": [8, 12, 17]}))


@pytest.fixture(scope="session")
def voa_chain():
    from mdgsim.experiments import preset, run_voa_sweep

    cfg = preset(
        "voa",
        grid={"snr_db": [12, 17]},
        voa={"signal_chain": True, "steps_db": [0.0, 6.0, 12.0]},
        signal={"symbols_per_stream": 50_000},
    )
    return run_voa_sweep(cfg)


# -- acceptance reporting ---------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance check and return the verdict."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
