"""Column-feature (quantile) estimators.

Two estimators of each column's latent feature:

* noiseless: rank of ``Z(i*, j)`` within a single row ``i*`` drawn at random
  from the rows observing column ``j`` (or, optionally, the average of that
  rank over all observing rows);
* marginal: rank of the column mean among all column means, which is robust
  to additive noise because the noise averages out down each column.

Ranks use half-counting for ties, i.e. the step function ``H`` with
``H(0) = 1/2``. Every routine has a pairwise O(n^2) reference path and an
O(n log n) sort-based path; both produce identical floats because the
numerators are half-integers, which are exact in binary floating point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DomainError, UnobservedEntryError

NOISELESS = "noiseless"
MARGINAL = "marginal"


@dataclass(frozen=True)
class QuantileEstimates:
    values: np.ndarray
    mode: str

    def __len__(self):
        return len(self.values)


def heaviside(x):
    """Step function: 1 for x > 0, 1/2 at 0, 0 for x < 0.

    Accepts scalars or arrays; raises ``DomainError`` on NaN or infinity.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("heaviside needs finite input")
    out = 0.5 * ((arr > 0).astype(float) + (arr >= 0).astype(float))
    return float(out) if out.ndim == 0 else out


def half_ranks(values, method="sort"):
    """``sum_k H(values[j] - values[k])`` for every ``j`` (self included)."""
    v = np.asarray(values, dtype=float)
    if method == "naive":
        return heaviside(v[:, None] - v[None, :]).sum(axis=1)
    if method != "sort":
        raise ConfigError(f"unknown method {method!r}")
    if v.size == 0:
        return np.zeros(0)
    # average rank r = less + (eq + 1)/2, so r - 1/2 = less + eq/2
    return rankdata(v, method="average") - 0.5


def rowwise_quantile(obs, i, j):
    """Relative position of ``Z(i, j)`` among the observed entries of row ``i``."""
    if not obs.mask[i, j]:
        raise UnobservedEntryError(f"entry ({i}, {j}) is not observed")
    row = obs.row_values(i)
    return float(heaviside(obs.z[i, j] - row).sum() / row.size)


def _row_quantile_table(obs):
    """Matrix of ``q_i(j)`` for every observed (i, j); NaN elsewhere."""
    table = np.full(obs.z.shape, np.nan)
    for i in range(obs.m):
        cols = obs.row_support(i)
        if cols.size:
            table[i, cols] = half_ranks(obs.z[i, cols]) / cols.size
    return table


def _column_rng(seed, j):
    return np.random.default_rng([seed, j])


def noiseless_quantile(obs, j, seed, rule="random", _table=None):
    """Noiseless estimate of column ``j``'s feature.

    ``rule="random"`` evaluates the within-row rank in one row drawn uniformly
    from the rows observing ``j``; the generator is seeded by ``(seed, j)`` so
    each column has its own stream. ``rule="average"`` averages over all of
    them instead. Unobserved columns get 1/2.
    """
    rows = obs.col_support(j)
    if rows.size == 0:
        return 0.5
    if rule == "random":
        i_star = rows[_column_rng(seed, j).integers(rows.size)]
        if _table is not None:
            return float(_table[i_star, j])
        return rowwise_quantile(obs, i_star, j)
    if rule == "average":
        if _table is not None:
            return float(np.mean(_table[rows, j]))
        return float(np.mean([rowwise_quantile(obs, i, j) for i in rows]))
    raise ConfigError(f"unknown rule {rule!r}")


def noiseless_quantiles(obs, seed, rule="random"):
    table = _row_quantile_table(obs)
    values = np.array([noiseless_quantile(obs, j, seed, rule, _table=table)
                       for j in range(obs.n)])
    return QuantileEstimates(values, NOISELESS)


def column_means(obs):
    """Mean of the observed entries of each column (1/2 for empty columns)."""
    counts = obs.col_counts
    sums = np.where(obs.mask, obs.z, 0.0).sum(axis=0)
    out = np.full(obs.n, 0.5)
    seen = counts > 0
    out[seen] = sums[seen] / counts[seen]
    return out


def marginal_quantile(z_marg, method="sort"):
    """Rank of each column mean among all column means, scaled to (0, 1).

    The values always sum to ``n/2`` since ``H(x) + H(-x) = 1``.
    """
    z_marg = np.asarray(z_marg, dtype=float)
    return QuantileEstimates(half_ranks(z_marg, method) / z_marg.size, MARGINAL)
