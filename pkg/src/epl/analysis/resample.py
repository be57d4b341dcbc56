"""Poisson bootstrap for count-based estimators."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .._parallel import pmap, substream
from ..counts import CountRecord


def counts_array(records: Sequence[CountRecord]) -> np.ndarray:
    return np.array([[r.n_signal, r.n_idler, r.n_coinc] for r in records], dtype=float)


def with_counts(records: Sequence[CountRecord], counts: np.ndarray) -> list[CountRecord]:
    return [CountRecord(r.setting, r.duration, *(int(v) for v in row)) for r, row in zip(records, counts)]


def poisson_resample(records: Sequence[CountRecord], seed: int, index: int) -> np.ndarray:
    """Resample ``index`` of a run: every count redrawn as Poisson(observed)."""
    return substream(seed, index).poisson(counts_array(records)).astype(float)


def bootstrap(records: Sequence[CountRecord], estimator: Callable, n_resamples: int = 1000,
              seed: int = 0, threads: int | None = None) -> tuple[float, float]:
    """Mean and sample standard deviation of ``estimator`` over Poisson resamples.

    ``estimator`` takes a list of records.  If it also exposes a ``batched``
    attribute, that callable receives all resampled counts at once as an
    array of shape ``(n_resamples, n_records, 3)`` and must return one value
    per resample; it sees exactly the same draws.
    """
    records = list(records)
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    batched = getattr(estimator, "batched", None)
    if batched is not None:
        draws = np.stack(pmap(lambda r: poisson_resample(records, seed, r), range(n_resamples), threads))
        values = np.asarray(batched(draws), dtype=float)
    else:
        values = np.array(pmap(lambda r: estimator(with_counts(records, poisson_resample(records, seed, r))),
                               range(n_resamples), threads), dtype=float)
    return float(values.mean()), float(values.std(ddof=1))
