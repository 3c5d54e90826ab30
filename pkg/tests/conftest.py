import pytest

from convextok.corpus import PretokenTable

GOLDEN = ["abc", "abd", "abe", "bc", "bd", "be"]
OVERLAP = ["abaa", "aba"]

_acceptance: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.fixture
def golden_table():
    return PretokenTable.from_strings(GOLDEN)


@pytest.fixture
def overlap_table():
    return PretokenTable.from_strings(OVERLAP)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            n, title = mark.args
            _acceptance.setdefault(n, [title, True, 0])
            item.user_properties.append(("acceptance", n))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "acceptance" not in props:
        return
    entry = _acceptance[props["acceptance"]]
    if report.when == "call":
        entry[2] += 1
    if report.failed or (report.when == "call" and report.skipped):
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        title, ok, ran = _acceptance[n]
        status = "PASS" if ok and ran else ("NOT RUN" if not ran else "FAIL")
        terminalreporter.write_line(f"criterion {n:>2}: {status:<7} {title}")
