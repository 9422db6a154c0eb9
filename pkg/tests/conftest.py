import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from martenscale.algebra2d import rotation


def angle_grid_rotation_distance(F, U, n=4096):
    """Independent oracle: min over an equispaced angle grid, then a bounded local refinement."""
    F = np.asarray(F, dtype=float)
    U = np.asarray(U, dtype=float)
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    Q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], 1)
    d = np.linalg.norm(F[None] - Q @ U, axis=(1, 2))
    k = int(np.argmin(d))
    step = 2 * math.pi / n
    res = minimize_scalar(lambda t: float(np.linalg.norm(F - rotation(t) @ U)),
                          bounds=(th[k] - step, th[k] + step), method="bounded",
                          options={"xatol": 1e-14})
    return min(float(d[k]), float(res.fun))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_acceptance(number: int, ok: bool, detail: str):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
