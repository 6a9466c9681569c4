import numpy as np
import pytest

from synthfid import benchmarks, mogp
from synthfid.kernels import RbfKernel, TaskMatrix

# one status line per acceptance criterion, printed after the run
_acceptance_results = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_results):
        outcome = _acceptance_results[name]
        word = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{word}  {name}")


@pytest.fixture(scope="session")
def liu_data():
    return benchmarks.grid(benchmarks.get_pair("liu"), 50)


@pytest.fixture(scope="session")
def liu_model(liu_data):
    """Hand-set model on the Liu grid (no fit; fast, deterministic)."""
    emp = np.cov(liu_data.y, rowvar=False, bias=True)
    task = TaskMatrix.from_matrix(emp + 1e-8 * np.eye(2))
    kernel = RbfKernel(lengthscales=[0.04], signal_variance=1.0, noise_variance=0.0)
    return mogp.MogpModel(kernel=kernel, task=task, dataset=liu_data)
