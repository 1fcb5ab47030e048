import numpy as np
import pytest

from psychfit import ResponseMatrix


def make_matrix(cells):
    cells = np.asarray(cells, dtype=np.int8)
    n, j = cells.shape
    return ResponseMatrix(
        tuple(f"p{i+1}" for i in range(n)),
        tuple(f"q{k+1}" for k in range(j)),
        cells,
    )


@pytest.fixture
def small_matrix():
    return make_matrix([
        [1, 1, 1, 0],
        [1, 1, 0, 0],
        [1, 0, 1, 1],
        [0, 1, 0, 0],
        [1, 0, 0, 0],
        [0, 0, 1, 0],
    ])
