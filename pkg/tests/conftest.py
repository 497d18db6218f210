from pathlib import Path

import pytest

from compsearch import dsl

ROOT = Path(__file__).resolve().parents[1]
DEMO_DIR = ROOT / "demo"


def program(body: str, kind: str = "activation", name: str = "t") -> dsl.HypothesisProgram:
    return dsl.parse(f'component {kind} "{name}"\n{body}\n')


@pytest.fixture
def demo_corpus() -> Path:
    return DEMO_DIR / "demo_activation.txt"


@pytest.fixture
def demo_config() -> Path:
    return DEMO_DIR / "demo.toml"


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
