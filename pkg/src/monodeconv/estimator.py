"""End-to-end matrix estimation in three noise regimes.

Every regime follows the same recipe: estimate each column's latent
feature ``q(j)``, estimate each row's CDF ``F_i``, and fill in
``A(i, j) = F_i^{-1}(q(j))``.

============== ======================== =====================================
mode           column features          row CDF
============== ======================== =====================================
noiseless      within-row rank          empirical CDF
known_noise    rank of column mean      deconvolution with the true ``phi_N``
unknown_noise  rank of column mean      deconvolution with estimated
                                        ``phi_N`` plus a ridge
============== ======================== =====================================

Rows with too few observations for their CDF estimator are filled with the
midpoint ``(d1 + d2)/2`` and reported in ``EstimatedMatrix.flagged_rows``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .deconv import (
    DEFAULT_GRID_SIZE,
    KERNEL_KNOWN,
    KERNEL_UNKNOWN,
    CdfEstimate,
    KernelSpec,
    SpectralGrid,
    bandwidth,
    empirical_cdf,
    finalize_cdf,
    quadrature_coefficients,
    quantile_function,
    ridge_for,
    sample_spectrum,
)
from .errors import ConfigError, InsufficientDataError, InsufficientTriplesError
from .model import NoiseSpec
from .noise_est import CharFnTable, build_triple_set
from .quantile import column_means, marginal_quantile, noiseless_quantiles

log = logging.getLogger(__name__)

NOISELESS = "noiseless"
KNOWN = "known_noise"
UNKNOWN = "unknown_noise"
MODES = (NOISELESS, KNOWN, UNKNOWN)
_ALIASES = {"known": KNOWN, "unknown": UNKNOWN}


def canonical_mode(mode):
    mode = _ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    ``d1``/``d2`` bound the latent values; when either is missing it defaults
    to the observed min/max widened by 5% of the observed range.
    ``known_noise`` needs a gaussian ``noise``. ``unknown_noise`` needs the
    smoothness constants ``beta``/``gamma``, taken from ``noise`` when not
    given. ``cdf_integration="trapezoid"`` integrates the gridded density
    instead of integrating each quadrature term exactly.
    """
    mode: str = NOISELESS
    noise: NoiseSpec | None = None
    beta: float | None = None
    gamma: float | None = None
    d1: float | None = None
    d2: float | None = None
    kernel: KernelSpec = field(default_factory=KernelSpec)
    grid_size: int = DEFAULT_GRID_SIZE
    seed: int = 0
    quantile_rule: str = "random"
    cdf_integration: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "mode", canonical_mode(self.mode))
        if self.d1 is not None and self.d2 is not None and not self.d1 < self.d2:
            raise ConfigError(f"need d1 < d2, got [{self.d1}, {self.d2}]")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be at least 2")
        if self.cdf_integration not in ("exact", "trapezoid"):
            raise ConfigError(f"unknown cdf_integration {self.cdf_integration!r}")
        if self.mode == KNOWN and (self.noise is None or self.noise.family != "gaussian"):
            raise ConfigError("known_noise mode needs a gaussian noise spec")
        if self.mode == UNKNOWN:
            beta, gamma = self.smoothness()
            if beta is None or gamma is None or not (beta > 0 and gamma > 0):
                raise ConfigError("unknown_noise mode needs beta > 0 and gamma > 0")

    def smoothness(self):
        beta, gamma = self.beta, self.gamma
        if self.noise is not None and self.noise.family != "none":
            beta = self.noise.beta if beta is None else beta
            gamma = self.noise.gamma if gamma is None else gamma
        return beta, gamma


@dataclass(frozen=True)
class EstimatedMatrix:
    values: np.ndarray
    mode: str
    d1: float
    d2: float
    column_quantiles: np.ndarray
    flagged_rows: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def value_range(obs, cfg):
    d1, d2 = cfg.d1, cfg.d2
    if d1 is None or d2 is None:
        seen = obs.z[obs.mask]
        if seen.size == 0:
            raise InsufficientDataError("no observed entries")
        lo, hi = float(seen.min()), float(seen.max())
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        d1 = lo - pad if d1 is None else d1
        d2 = hi + pad if d2 is None else d2
    if not d1 < d2:
        raise ConfigError(f"need d1 < d2, got [{d1}, {d2}]")
    return float(d1), float(d2)


def _check_nonempty(obs):
    if not obs.mask.any():
        raise InsufficientDataError("observation set is empty")


def _finish(values, mode, d1, d2, q, flagged):
    if flagged.any():
        log.warning("%d row(s) had too few observations and were filled with (d1+d2)/2",
                    int(flagged.sum()))
    values = np.clip(values, d1, d2)
    values.setflags(write=False)
    return EstimatedMatrix(values, mode, d1, d2, q, flagged)


def estimate_noiseless(obs, cfg):
    if cfg.mode != NOISELESS:
        raise ConfigError("estimate_noiseless needs mode='noiseless'")
    _check_nonempty(obs)
    d1, d2 = value_range(obs, cfg)
    q = noiseless_quantiles(obs, cfg.seed, cfg.quantile_rule).values
    out = np.full((obs.m, obs.n), 0.5 * (d1 + d2))
    flagged = obs.row_counts < 1
    for i in np.flatnonzero(~flagged):
        cdf = empirical_cdf(obs.row_values(i), d1, d2, cfg.grid_size)
        out[i] = quantile_function(cdf, q)
    return _finish(out, NOISELESS, d1, d2, q, flagged)


def marginal_quantiles(obs):
    return marginal_quantile(column_means(obs)).values


def _row_cdfs(sg, coef, spectra, counts, integration):
    """Finalized CDF values (grid x rows) for rows sharing one bandwidth."""
    if integration == "exact":
        raw = sg.cdf(coef, spectra, counts)
    else:
        raw = cumulative_trapezoid(sg.density(coef, spectra, counts), sg.grid,
                                   axis=0, initial=0.0)
    return np.apply_along_axis(finalize_cdf, 0, raw)


def _estimate_deconv(obs, cfg, mode):
    _check_nonempty(obs)
    d1, d2 = value_range(obs, cfg)
    spec = cfg.kernel
    beta, gamma = cfg.smoothness()
    grid = np.linspace(d1, d2, cfg.grid_size)
    q = marginal_quantiles(obs)
    counts = obs.row_counts
    out = np.full((obs.m, obs.n), 0.5 * (d1 + d2))
    flagged = counts < 2
    sizes = np.unique(counts[~flagged])
    hs = np.array([bandwidth(beta, gamma, c) for c in sizes])

    if mode == UNKNOWN:
        triples = build_triple_set(obs, q)
        if len(triples) == 0:
            raise InsufficientTriplesError("no column pairs qualified for noise estimation")
        table = CharFnTable(obs, triples)
        node_sums = table.node_sums(spec.step, hs, spec.nodes)
        kind = KERNEL_UNKNOWN
    else:
        kind = KERNEL_KNOWN

    for g, (c, h) in enumerate(zip(sizes, hs)):
        rows = np.flatnonzero(counts == c)
        if mode == UNKNOWN:
            ridge = ridge_for(c)
            coef = np.column_stack([
                quadrature_coefficients(
                    spec, table.phi_hat_on_nodes(i, spec.step, h, spec.nodes, node_sums[g]),
                    ridge)
                for i in rows])
        else:
            coef = quadrature_coefficients(spec, cfg.noise.char_fn(spec.s / h), 0.0)[:, None]
        spectra = np.column_stack([sample_spectrum(obs.row_values(i), spec, h) for i in rows])
        sg = SpectralGrid(spec, h, grid)
        cdfs = _row_cdfs(sg, coef, spectra, np.full(rows.size, c), cfg.cdf_integration)
        for k, i in enumerate(rows):
            cdf = CdfEstimate(grid, cdfs[:, k], kind, float(h), int(c))
            out[i] = quantile_function(cdf, q)
    return _finish(out, mode, d1, d2, q, flagged)


def estimate_known_noise(obs, cfg):
    if cfg.mode != KNOWN:
        raise ConfigError("estimate_known_noise needs mode='known_noise'")
    return _estimate_deconv(obs, cfg, KNOWN)


def estimate_unknown_noise(obs, cfg):
    if cfg.mode != UNKNOWN:
        raise ConfigError("estimate_unknown_noise needs mode='unknown_noise'")
    return _estimate_deconv(obs, cfg, UNKNOWN)


def estimate(obs, cfg):
    """Dispatch on ``cfg.mode``."""
    return {
        NOISELESS: estimate_noiseless,
        KNOWN: estimate_known_noise,
        UNKNOWN: estimate_unknown_noise,
    }[cfg.mode](obs, cfg)
