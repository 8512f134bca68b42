"""Small hand-built spaces shared by the tests."""

import numpy as np

from locahal.space import FiniteSpace, LevelConstants


def line(n, levels=None, spacing=1.0, weights=None, declared=()):
    """Integer line 0..n-1 (times ``spacing``) with the Euclidean distance."""
    lv = np.ones(n, dtype=int) if levels is None else np.asarray(levels)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    return FiniteSpace(w, lv, "euclidean", coords=spacing * np.arange(n, dtype=float), declared=declared)


def inner_levels(n, lo, hi, outer=2):
    """Level 1 on [lo, hi), ``outer`` elsewhere."""
    lv = np.full(n, outer)
    lv[lo:hi] = 1
    return lv


def matrix_space(D, levels=None, weights=None):
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    return FiniteSpace(np.ones(n) if weights is None else weights,
                       np.ones(n, dtype=int) if levels is None else levels, "matrix", matrix=D)


def declared(n, eps, B=2.0, C=3.0, A=1.0):
    return (LevelConstants(n=n, eps=eps, B=B, C=C, A=A),)
