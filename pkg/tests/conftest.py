import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from povm_forge.linalg import make_rng

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300)
settings.load_profile("default")


@pytest.fixture
def rng():
    return make_rng(20240611)


def random_matrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng, d):
    m = random_matrix(rng, d, d)
    return (m + m.conj().T) / 2


def random_psd(rng, d, rank=None):
    m = random_matrix(rng, d, rank or d)
    return m @ m.conj().T


# acceptance criteria report: criterion -> list of (part, ok, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}
ACCEPTANCE_TITLES: dict[int, str] = {}


def record(criterion: int, title: str, part: str, ok: bool, detail: str):
    ACCEPTANCE_TITLES[criterion] = title
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {d}" if name else d for name, _, d in parts)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {c:>2}. {ACCEPTANCE_TITLES[c]} | {detail}")
