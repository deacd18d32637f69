import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def _repo_root(monkeypatch):
    # fixtures are referenced relative to the repository root
    monkeypatch.chdir(ROOT)


def pytest_terminal_summary(terminalreporter):
    from _support import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status} - {title}" + (f" ({detail})" if detail else ""))


os.environ.setdefault("OPAQ_THREADS", "1")
