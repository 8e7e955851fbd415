import numpy as np
import pytest


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def unit(x):
    return x / np.linalg.norm(x)


def alignment(g1, g2):
    return abs(np.vdot(unit(g1), unit(g2)))


def random_probes(rng, n, count):
    X = crandn(rng, count, n)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hp_regularized_inverse(B, rho, dps=40):
    """``(B B^H + rho I)^-1`` in extended precision, rounded to complex128."""
    import mpmath

    with mpmath.workdps(dps):
        Bm = mpmath.matrix([[mpmath.mpc(complex(x)) for x in row] for row in B])
        n = B.shape[0]
        M = Bm * Bm.transpose_conj() + mpmath.mpf(rho) * mpmath.eye(n)
        X = M ** -1
        return np.array([[complex(X[i, j]) for j in range(n)] for i in range(n)])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line, then assert."""

    def check(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
