"""Feature encoding fit on the training split only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(X.mean(axis=0), scale)

    def transform(self, X):
        return (np.atleast_2d(np.asarray(X, dtype=np.float64)) - self.mean) / self.scale


UNSEEN = "__unseen__"


@dataclass(frozen=True)
class OneHotEncoder:
    """Binary columns per observed category plus one bucket for unseen values."""

    categories: tuple

    @classmethod
    def fit(cls, values):
        return cls(tuple(sorted({str(v) for v in values})))

    @property
    def width(self):
        return len(self.categories) + 1

    def transform(self, values):
        lookup = {c: i for i, c in enumerate(self.categories)}
        out = np.zeros((len(values), self.width))
        for r, v in enumerate(values):
            out[r, lookup.get(str(v), len(self.categories))] = 1.0
        return out
