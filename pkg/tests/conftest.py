import numpy as np
import pytest
from hypothesis import strategies as st

from kbpot.pdbio import AMINO_ACIDS, CaTrace


def atom_line(serial, resname, resseq, x, y, z, *, atom=" CA ", alt=" ", chain="A", icode=" ", record="ATOM  "):
    return (
        f"{record}{serial:5d} {atom}{alt}{resname:>3s} {chain}{resseq:4d}{icode}   "
        f"{x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00           C"
    )


def random_trace(rng, n, trace_id="t", spread=6.0, alphabet=AMINO_ACIDS):
    residues = tuple(alphabet[k] for k in rng.integers(0, len(alphabet), n))
    # a rough chain with distances mostly inside the spline domain
    steps = rng.normal(size=(n, 3))
    steps *= 3.8 / np.linalg.norm(steps, axis=1, keepdims=True)
    coords = np.cumsum(steps, axis=0) + rng.normal(scale=0.1 * spread, size=(n, 3))
    return CaTrace(trace_id, residues, coords)


@st.composite
def traces(draw, min_len=2, max_len=30):
    n = draw(st.integers(min_len, max_len))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_trace(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
