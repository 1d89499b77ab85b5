import pytest
from hypothesis import strategies as st

from manipulable.model import ModelParams

ACCEPTANCE_LINES = []


@pytest.fixture
def fig2():
    """sigma_eta = sigma_gamma = m = 1, rho = 0."""
    return ModelParams()


@pytest.fixture
def acceptance_report():
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


rhos = st.floats(-0.99, 0.99)
betas = st.floats(-3.0, 3.0)


@st.composite
def model_params(draw, rho=rhos):
    return ModelParams(
        mu_eta=draw(st.floats(-10, 10)),
        mu_gamma=draw(st.floats(-10, 10)),
        sigma_eta=draw(st.floats(0.1, 10)),
        sigma_gamma=draw(st.floats(0.1, 10)),
        rho=draw(rho),
        m=draw(st.floats(0.01, 10)),
    )
