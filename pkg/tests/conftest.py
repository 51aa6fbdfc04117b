from __future__ import annotations

import random
from pathlib import Path

import pytest

from lvsp.grammar import parse_grammar_file
from lvsp.semiring import make_semiring

ROOT = Path(__file__).resolve().parents[1]
GRAMMARS = ROOT / "grammars"


def load(name: str, semiring: str = "probability"):
    return parse_grammar_file((GRAMMARS / name).read_text(), make_semiring(semiring))


@pytest.fixture
def toy():
    return load("toy.grammar")


@pytest.fixture
def rng():
    return random.Random(1234)


# one line per acceptance criterion, shown at the end of every run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
