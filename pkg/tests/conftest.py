import pytest

from caresim import load_config


@pytest.fixture
def short_config():
    """A few decades from 1860 on a quarter-size population; runs in about a second."""
    return load_config(None, end_year=1880, policy_start_year=1870, reference_population=1_500_000.0)


@pytest.fixture
def tiny_config():
    return load_config(None, end_year=1862, policy_start_year=1861, reference_population=500_000.0)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Criterion number -> (passed, detail); echoed in the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
