"""Noise characteristic-function estimation from matched column pairs.

Two observed entries of the same row whose columns have nearly equal
estimated features differ by roughly ``N1 - N2``. For symmetric noise the
characteristic function of that difference is ``phi_N(t)**2``, so

    phi_hat(t) = | mean over pairs of cos(t * (Z(i, j1) - Z(i, j2))) | ** 0.5

The pairs come from a greedy pass over each row's columns sorted by marginal
quantile; each observed entry is used at most once. For row ``i`` the pairs
lying on row ``i`` itself are left out.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .deconv import power_sums
from .errors import InsufficientTriplesError, ShapeError

try:
    import finufft
except ImportError:  # pragma: no cover - exercised only without finufft
    finufft = None


@dataclass(frozen=True)
class TripleSet:
    triples: np.ndarray          # (k, 3) int: row, j1, j2
    j_set: frozenset
    i_set: frozenset

    def __len__(self):
        return len(self.triples)

    @property
    def rows(self):
        return self.triples[:, 0]


def _as_values(q_marg):
    return np.asarray(getattr(q_marg, "values", q_marg), dtype=float)


def build_triple_set(obs, q_marg, p=None):
    """Pair columns with nearly equal marginal quantiles, row by row.

    Columns qualify if observed at least ``m*p/2`` times (set J); rows qualify
    if they observe at least ``|J|*p/2`` columns of J (set I). In each row of
    I the columns of ``B_i & J`` are walked in increasing quantile order
    (ties by column index) and adjacent columns are paired when their gap is
    at most ``|B_i & J|**-0.5``; a paired column is consumed.
    """
    q = _as_values(q_marg)
    if q.shape != (obs.n,):
        raise ShapeError(f"need {obs.n} quantile values, got {q.shape}")
    p = obs.p if p is None else p
    in_j = obs.col_counts >= obs.m * p / 2.0
    j_size = int(in_j.sum())
    eligible = obs.mask & in_j[None, :]
    in_i = eligible.sum(axis=1) >= j_size * p / 2.0

    order = np.lexsort((np.arange(obs.n), q))
    triples = []
    for i in np.flatnonzero(in_i):
        cols = order[eligible[i, order]]
        size = cols.size
        if size < 2:
            continue
        tau = size ** -0.5
        gaps = np.diff(q[cols])
        pos = 0
        while pos + 1 < size:
            if gaps[pos] <= tau:
                triples.append((i, cols[pos], cols[pos + 1]))
                pos += 2
            else:
                pos += 1
    arr = np.array(triples, dtype=np.int64).reshape(-1, 3)
    return TripleSet(arr, frozenset(np.flatnonzero(in_j).tolist()),
                     frozenset(np.flatnonzero(in_i).tolist()))


def exclude_row(t, i):
    keep = t.triples[:, 0] != i
    return TripleSet(t.triples[keep], t.j_set, t.i_set)


def triple_diffs(obs, t):
    tr = t.triples
    return obs.z[tr[:, 0], tr[:, 1]] - obs.z[tr[:, 0], tr[:, 2]]


def dump_triples(path, obs, t, q_marg):
    """Debug dump: one ``i,j1,j2,gap`` line per triple."""
    q = _as_values(q_marg)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j1", "j2", "gap"])
        for i, j1, j2 in t.triples:
            w.writerow([i, j1, j2, format(q[j2] - q[j1], ".17g")])


def _mean_cos(diffs, t, chunk=1 << 22):
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    out = np.empty(flat.size)
    step = max(1, chunk // max(diffs.size, 1))
    for a in range(0, flat.size, step):
        out[a:a + step] = np.cos(np.multiply.outer(flat[a:a + step], diffs)).mean(axis=1)
    return out.reshape(t.shape)


@dataclass(frozen=True)
class CharFnEstimate:
    """``phi_hat`` backed by a (row-excluded) triple set."""
    triples: TripleSet
    diffs: np.ndarray

    def __call__(self, t):
        if self.diffs.size == 0:
            raise InsufficientTriplesError("no triples to estimate the noise from")
        out = np.sqrt(np.abs(_mean_cos(self.diffs, t)))
        return float(out) if out.ndim == 0 else out


def char_fn_estimate(obs, t_i):
    return CharFnEstimate(t_i, triple_diffs(obs, t_i))


def estimate_char_fn(obs, t_i, t):
    """Evaluate ``phi_hat`` of triple set ``t_i`` at frequency ``t`` by direct summation."""
    return char_fn_estimate(obs, t_i)(t)


class CharFnTable:
    """Cosine sums over the global triple set, with per-row exclusion.

    Sums over all of T are computed once per frequency set; the estimate for
    row ``i`` subtracts the (few) terms lying on row ``i``.
    """

    def __init__(self, obs, triples):
        self.triples = triples
        self.diffs = triple_diffs(obs, triples)
        rows = triples.rows
        self._order = np.argsort(rows, kind="stable")
        sorted_rows = rows[self._order]
        self._row_start = np.searchsorted(sorted_rows, np.arange(obs.m), side="left")
        self._row_stop = np.searchsorted(sorted_rows, np.arange(obs.m), side="right")

    def __len__(self):
        return self.diffs.size

    def row_diffs(self, i):
        return self.diffs[self._order[self._row_start[i]:self._row_stop[i]]]

    def global_sums(self, t):
        """``sum over T of cos(t*d)`` at arbitrary frequencies (direct)."""
        return _mean_cos(self.diffs, t) * self.diffs.size

    def node_sums(self, step, hs, count):
        """Global sums at ``t = k*step/h``, ``k < count``, for each ``h`` in ``hs``.

        Returns an array of shape ``(len(hs), count)``.
        """
        hs = np.asarray(hs, dtype=float)
        if self.diffs.size == 0:
            return np.zeros((hs.size, count))
        if finufft is not None:
            freqs = (np.arange(count)[None, :] * step / hs[:, None]).ravel()
            strengths = np.ones(self.diffs.size, dtype=complex)
            out = finufft.nufft1d3(self.diffs, strengths, freqs, eps=1e-14, isign=1)
            return out.real.reshape(hs.size, count)
        return np.array([power_sums(self.diffs * (step / h), count).real for h in hs])

    def phi_hat(self, i, t, sums=None, row_sums=None):
        """``phi_hat_{N,i}(t)``; ``sums`` may carry precomputed global sums at ``t``."""
        own = self.row_diffs(i)
        size = self.diffs.size - own.size
        if size <= 0:
            raise InsufficientTriplesError(f"no triples left after excluding row {i}")
        if sums is None:
            sums = self.global_sums(t)
        if row_sums is None:
            row_sums = _mean_cos(own, t) * own.size if own.size else 0.0
        return np.sqrt(np.abs((sums - row_sums) / size))

    def phi_hat_on_nodes(self, i, step, h, count, sums):
        own = self.row_diffs(i)
        row_sums = power_sums(own * (step / h), count).real if own.size else 0.0
        return self.phi_hat(i, None, sums=sums, row_sums=row_sums)
