import numpy as np
import pytest

from dyadica import Weight, build_grid, cascade_weight


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_triple(depth, seed, vol=0.5):
    grid = build_grid(depth)
    return (cascade_weight(grid, vol, seed), cascade_weight(grid, vol, seed + 1000),
            cascade_weight(grid, vol, seed + 2000))


def lognormal_weight(grid, rng, scale=1.0):
    return Weight(grid, np.exp(scale * rng.normal(size=grid.n_cells)))


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
