"""The gradient-check harness itself: FD math, error metric, detection power."""

import numpy as np
import pytest

from adapternet.gradcheck import (TOLERANCE, max_relative_error,
                                  numerical_gradient, run_all)


def test_numerical_gradient_quadratic():
    g = numerical_gradient(lambda v: float((v ** 2).sum()),
                           np.array([1.0, -2.0, 3.0]))
    assert np.allclose(g, [2.0, -4.0, 6.0], atol=1e-8)


def test_numerical_gradient_preserves_input():
    x = np.array([0.5, 1.5])
    numerical_gradient(lambda v: float(v.sum()), x)
    assert np.array_equal(x, [0.5, 1.5])


def test_max_relative_error_metric():
    assert max_relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    # symmetric in its arguments
    assert max_relative_error([1.0], [1.1]) == \
        max_relative_error([1.1], [1.0])
    # floor turns near-zero entries into an absolute comparison
    assert max_relative_error([0.0], [1e-9]) == pytest.approx(1e-4)


def test_run_all_covers_every_layer_kind():
    results = run_all(instances=2, verbose=False)
    assert set(results) == {"dense", "relu", "conv2d", "maxpool2",
                            "softmax_cross_entropy", "composite"}
    assert all(err < TOLERANCE for err in results.values())


def test_run_all_deterministic():
    a = run_all(instances=2, verbose=False)
    b = run_all(instances=2, verbose=False)
    assert a == b


def test_harness_detects_a_broken_gradient():
    """Sanity: a wrong analytic gradient must trip the tolerance, otherwise
    passing checks mean nothing."""
    x = np.array([0.7, -1.3, 2.1])
    numeric = numerical_gradient(lambda v: float((v ** 2).sum()), x)
    wrong = 2.0 * x * 1.01  # 1% off
    assert max_relative_error(wrong, numeric) > TOLERANCE
