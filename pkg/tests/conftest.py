import time

SESSION = {"start": None, "files": set(), "criteria": {}}


def pytest_sessionstart(session):
    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run last so the suite-runtime criterion can time everything else
    items.sort(key=lambda it: it.path.name == "test_acceptance.py")
    SESSION["files"] = {it.path.name for it in items}


def pytest_terminal_summary(terminalreporter):
    lines = SESSION["criteria"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
