import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``criterion(number, ok, detail)``."""
    results = request.config.stash[_RESULTS_KEY]
    recorded = []

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        recorded.append(line)
        results.append((number, line))
        print(line)
        return ok

    yield record
    if not recorded:
        results.append((0, f"FAIL {request.node.name}: raised before its check completed"))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(line)
