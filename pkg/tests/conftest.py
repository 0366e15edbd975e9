import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_results = []


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _results.append((marker.args[0], item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label, name, ok in sorted(_results, key=lambda r: (int(r[0]), r[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {label:>2}  {name}")
