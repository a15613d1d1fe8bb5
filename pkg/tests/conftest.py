import pytest

from pam6rin import _backend
from pam6rin.constellation import cross_qam32, optimized_qam32, reference_qam32

BACKENDS = _backend.available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    prev = _backend.use(request.param)
    yield request.param
    _backend.kernels = prev


@pytest.fixture(scope="session")
def builtins():
    return {"cross": cross_qam32(), "reference": reference_qam32(), "optimized": optimized_qam32()}


@pytest.fixture(scope="session")
def calibration():
    from pam6rin.harness import calibrate_floor
    return calibrate_floor()


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
