import numpy as np
import pytest

from sgrte.errors import ArgumentError
from sgrte.problems import (CATALOG, SOURCE_LAYOUTS_2D, example1, example2, example3, example5_source2d,
                            example6_lshape, example7_circle, get_problem, manufactured_residual)


@pytest.mark.parametrize("factory", [example1, example2, example3, example6_lshape, example7_circle],
                         ids=["ex1", "ex2", "ex3", "ex6", "ex7"])
def test_manufactured_sources_consistent(factory):
    # independent check: complex-step derivative and a fine product rule for S u
    assert manufactured_residual(factory(), n_samples=25, seed=1) < 1e-9


def test_manufactured_hg_other_eta():
    assert manufactured_residual(example2(eta=0.5), n_samples=10, seed=2, n_polar=64) < 1e-9


def test_exact_solution_vanishes_on_cube_boundary():
    pr = example1()
    x = np.array([[0.0, 0.3, 0.7], [1.0, 0.2, 0.4], [0.5, 0.5, 1.0]])
    assert np.allclose(pr.exact(x, np.array([0, 0, 1.0])), 0.0, atol=1e-15)


def test_layouts_are_inside_square():
    for name, boxes in SOURCE_LAYOUTS_2D.items():
        pr = example5_source2d(name)
        for lo, hi, v in pr.source_boxes:
            assert 0 <= lo[0] < hi[0] <= 1 and 0 <= lo[1] < hi[1] <= 1 and v > 0


def test_catalog_and_unknowns():
    assert set(CATALOG) >= {f"example{i}" for i in range(1, 8)}
    with pytest.raises(ArgumentError):
        get_problem("example9")
    with pytest.raises(ArgumentError):
        example5_source2d("nowhere")
    with pytest.raises(ArgumentError):
        manufactured_residual(get_problem("example4"))
