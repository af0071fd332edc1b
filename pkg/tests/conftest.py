import sys
from pathlib import Path

import numpy as np
import pytest

from hpsep import _backend, kdtree, preprocess, segment, svm

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = _backend.available_backends()
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = BACKENDS[request.param]
    for m in (kdtree, preprocess, segment, svm):
        monkeypatch.setattr(m, "kernels", mod)
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def record_acceptance(number: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[str(number)] = (ok, detail)
    print(f"ACCEPTANCE {number:>3} {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        digits = "".join(ch for ch in key if ch.isdigit())
        return int(digits), key

    for number in sorted(ACCEPTANCE, key=order):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
