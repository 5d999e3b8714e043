import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def perceptron_separates(features, labels, epochs=200):
    """Hand-rolled perceptron; converges iff the data is linearly separable."""
    n, d = features.shape
    w = np.zeros(d + 1)
    x = np.hstack([features, np.ones((n, 1))])
    y = np.where(labels > 0, 1.0, -1.0)
    for _ in range(epochs):
        mistakes = 0
        for i in range(n):
            if y[i] * (x[i] @ w) <= 0.0:
                w += y[i] * x[i]
                mistakes += 1
        if mistakes == 0:
            return True
    return False
