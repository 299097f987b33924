import pytest

from dictmt.synthetic import generate_corpus

_results: dict[int, tuple[str, list[str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        previous = _results.get(number, (text, []))[1]
        _results[number] = (text, previous + [report.outcome])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        text, outcomes = _results[number]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {text}")


@pytest.fixture(scope="session")
def small_synth():
    """A 20K-sentence corpus with the full mix of planted entry kinds."""
    return generate_corpus(n_sentences=20_000, seed=7, n_good=120, n_frequent=3, frequent_occ=(90, 120), filler_vocab=4000)
