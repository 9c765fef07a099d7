import math

import numpy as np
import pytest

from i3322.bell import Strategy, save_strategy
from i3322.structure import NormalFormSpec, build_normal_form

SQRT3_2 = math.sqrt(3) / 2


def random_projector(d, rank, rng):
    if rank == 0:
        return np.zeros((d, d))
    q, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    return q @ q.T


def p1(c):
    s = math.sqrt(1 - c * c)
    return 0.5 * np.array([[1 - c, -s], [-s, 1 + c]])


def p2(c):
    s = math.sqrt(1 - c * c)
    return 0.5 * np.array([[1 - c, s], [s, 1 + c]])


P3 = 0.5 * np.ones((2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def epr25():
    """The one-EPR-pair strategy, built from the cyclic normal form."""
    return build_normal_form(NormalFormSpec("cyclic", 2, (SQRT3_2,)))


@pytest.fixture
def epr25_file(tmp_path, epr25):
    path = tmp_path / "epr25.json"
    save_strategy(epr25, path)
    return path


@pytest.fixture
def zero_file(tmp_path):
    z = np.zeros((2, 2))
    path = tmp_path / "zero.json"
    save_strategy(Strategy((z, z, z), (z, z, z)), path)
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
