import pytest

from qrobonet.rng import RandomStream

_VERDICTS: dict[int, str] = {}


def record_verdict(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    _VERDICTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[k])


@pytest.fixture
def verdict():
    return record_verdict


@pytest.fixture
def rng(request):
    return RandomStream(20240611, request.node.name)
