import numpy as np
import pytest

from radonlike.config import read_input
from radonlike.radonmap import BasePoint, extract_q, parse_text


def corpus_map(name):
    text, _ = read_input(f"corpus:{name}")
    return parse_text(text)


def corpus_form(name):
    phi = corpus_map(name)
    return extract_q(phi, BasePoint.origin(phi))[0]


@pytest.fixture(scope="session")
def degenerate_form():
    return corpus_form("degenerate")


@pytest.fixture(scope="session")
def rotational_form():
    return corpus_form("rotational")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def record_criterion(name: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
