import pytest

from tool_attention.catalog import generate_testbed, save_registry
from tool_attention.embed import HashedNgramEncoder
from tool_attention.tokens import heuristic_counter


@pytest.fixture(scope="session")
def counter():
    return heuristic_counter()


@pytest.fixture(scope="session")
def encoder():
    return HashedNgramEncoder()


@pytest.fixture(scope="session")
def testbed(counter):
    return generate_testbed(seed=42, counter=counter)


@pytest.fixture(scope="session")
def registry_dir(testbed, tmp_path_factory):
    path = tmp_path_factory.mktemp("registry")
    save_registry(testbed, path)
    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when != "call" and outcome != "error":
                continue
            name = nodeid.split("::test_criterion_")[1]
            detail = "; ".join(f"{k}={v}" for k, v in getattr(rep, "user_properties", []))
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in sorted(lines):
        number, _, title = name.partition("_")
        terminalreporter.write_line(f"criterion {int(number):>2} {verdict}  {title}  {detail}".rstrip())
