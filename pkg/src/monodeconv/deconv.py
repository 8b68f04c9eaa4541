"""Row-wise distribution estimation.

Three CDF estimators share one representation, :class:`CdfEstimate`:

* the empirical step CDF of the observed entries (noiseless rows);
* the deconvolution-kernel CDF, where the noise characteristic function
  ``phi_N`` is divided out in the frequency domain;
* the same with an estimated ``phi_N`` and a ridge term added to the
  denominator.

The deconvolution kernel is

    L(v) = (1/pi) * int_0^1 cos(s*v) * phi_K(s) / (phi_N(s/h) + ridge) ds

evaluated by composite Simpson on a fixed node set. The density of ``c``
samples on a value grid is ``f(z) = sum_j L((z - Z_j)/h) / (h*c)``. Because the
quadrature is a finite cosine sum, the sum over samples factors through the
sample spectrum ``E_k = sum_j exp(i*t_k*Z_j)`` with ``t_k = s_k/h``; that is
how densities and CDFs are computed here, at the cost of one trig matrix per
bandwidth rather than one kernel evaluation per (grid point, sample) pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    ConfigError,
    DegenerateDenominatorError,
    DomainError,
    InsufficientDataError,
    InvalidBandwidthError,
    ShapeError,
)

EMPIRICAL = "empirical_step"
KERNEL_KNOWN = "kernel_known"
KERNEL_UNKNOWN = "kernel_unknown"

DEFAULT_NODES = 2001
DEFAULT_GRID_SIZE = 1024


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing kernel, described by its Fourier transform ``phi_K``.

    ``polynomial_cube`` is ``phi_K(t) = (1 - t^2)^3`` on ``[-1, 1]``: even,
    bounded by ``K_max = 1`` and compactly supported, with a triple zero at the
    support edge so Simpson's rule converges fast. ``nodes`` is the (odd)
    number of Simpson nodes on ``[0, 1]``.
    """
    char_fn_id: str = "polynomial_cube"
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.char_fn_id != "polynomial_cube":
            raise ConfigError(f"unknown kernel {self.char_fn_id!r}")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ConfigError("Simpson quadrature needs an odd node count >= 3")

    k_max = 1.0

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) <= 1.0, (1.0 - t * t) ** 3, 0.0)

    @cached_property
    def s(self):
        return np.linspace(0.0, 1.0, self.nodes)

    @cached_property
    def weights(self):
        w = np.ones(self.nodes)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w / (3.0 * (self.nodes - 1))

    @property
    def step(self):
        return 1.0 / (self.nodes - 1)

    def doubled(self):
        """Same kernel with twice as many Simpson intervals."""
        return KernelSpec(self.char_fn_id, 2 * self.nodes - 1)


def kernel_char_fn(spec, t):
    out = spec.char_fn(t)
    return float(out) if out.ndim == 0 else out


def bandwidth(beta, gamma, count):
    """``h = (4*gamma)^(1/beta) * (ln count)^(-1/beta)`` (natural log)."""
    if count < 2:
        raise InsufficientDataError("bandwidth needs at least 2 samples")
    if not (beta > 0 and gamma > 0):
        raise InvalidBandwidthError("bandwidth needs beta > 0 and gamma > 0")
    return (4.0 * gamma) ** (1.0 / beta) * np.log(count) ** (-1.0 / beta)


def ridge_for(count):
    """Ridge used with an estimated characteristic function: ``count^(-7/24)``."""
    return float(count) ** (-7.0 / 24.0)


def quadrature_coefficients(spec, phi_values, ridge):
    """Per-node factors ``w_k * phi_K(s_k) / (phi_N(s_k/h) + ridge)``."""
    denom = np.asarray(phi_values, dtype=float) + ridge
    if denom.shape != spec.s.shape:
        raise ShapeError("phi_N must be given at every quadrature node")
    if not np.all(denom > 0):
        raise DegenerateDenominatorError("deconvolution denominator is not positive")
    return spec.weights * spec.char_fn(spec.s) / denom


def deconv_kernel(spec, phi_n, h, ridge, v):
    """Deconvolution kernel ``L(v)`` for noise characteristic function ``phi_n``.

    ``phi_n`` is a callable on frequency arrays; ``v`` may be a scalar or an
    array. With ``phi_n == 1`` and ``ridge == 0`` this is the plain kernel
    ``K(v)``, whose value at 0 is ``16/(35*pi)``.
    """
    if not h > 0:
        raise InvalidBandwidthError(f"bandwidth must be positive, got {h}")
    if ridge < 0:
        raise ConfigError("ridge must be non-negative")
    coef = quadrature_coefficients(spec, phi_n(spec.s / h), ridge)
    v = np.asarray(v, dtype=float)
    flat = v.ravel()
    out = np.empty(flat.size)
    step = max(1, (1 << 22) // spec.nodes)
    for a in range(0, flat.size, step):
        out[a:a + step] = np.cos(np.multiply.outer(flat[a:a + step], spec.s)) @ coef
    out = out.reshape(v.shape) / np.pi
    return float(out) if out.ndim == 0 else out


def power_sums(theta, count, weights=None):
    """``sum_j w_j * exp(i*k*theta_j)`` for ``k = 0 .. count-1``.

    Splits ``k = a*B + b`` so the double loop becomes one complex matrix
    product; every factor is a direct ``exp`` or a short (< B) product chain.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    block = 64 if count > 64 else count
    n_blocks = -(-count // block)
    inner = np.empty((theta.size, block), dtype=complex)
    inner[:, 0] = 1.0
    if block > 1:
        inner[:, 1:] = np.exp(1j * theta)[:, None]
        np.cumprod(inner, axis=1, out=inner)
    outer = np.exp(1j * np.multiply.outer(np.arange(n_blocks) * block, theta))
    if weights is not None:
        outer = outer * np.asarray(weights, dtype=float)[None, :]
    return (outer @ inner).ravel()[:count]


def sample_spectrum(samples, spec, h):
    """``E_k = sum_j exp(i * s_k/h * Z_j)`` at every quadrature node."""
    return power_sums(np.asarray(samples, dtype=float) * (spec.step / h), spec.nodes)


class SpectralGrid:
    """Value grid plus the phase matrix ``exp(i * t_k * z)`` for one bandwidth.

    Densities and CDFs of many rows sharing a bandwidth reuse one instance.
    """

    def __init__(self, spec, h, grid):
        self.spec = spec
        self.h = float(h)
        self.grid = np.asarray(grid, dtype=float)
        self.t = spec.s / self.h
        self.phase = np.exp(1j * np.multiply.outer(self.grid, self.t))

    def density(self, coef, spectra, counts):
        """Densities for the columns of ``spectra`` (nodes x rows).

        ``coef`` is one coefficient vector shared by all rows or a matrix
        with one column per row.
        """
        coef = _as_columns(coef)
        a = coef * np.conj(spectra)
        return (self.phase @ a).real / (np.pi * self.h * np.asarray(counts, dtype=float))

    def cdf(self, coef, spectra, counts):
        """Exact integral from ``grid[0]`` of the quadrature-form density."""
        coef = _as_columns(coef)
        scale = np.zeros_like(coef)
        scale[1:] = coef[1:] / self.spec.s[1:, None]
        im = (self.phase @ (scale * np.conj(spectra))).imag
        im -= im[0]
        linear = np.multiply.outer(self.grid - self.grid[0], coef[0]) / (np.pi * self.h)
        return im / (np.pi * np.asarray(counts, dtype=float)) + linear


def _as_columns(coef):
    coef = np.asarray(coef, dtype=float)
    return coef[:, None] if coef.ndim == 1 else coef


def finalize_cdf(values):
    """Clip to [0, 1], make nondecreasing by running max, pin the last value to 1."""
    out = np.maximum.accumulate(np.clip(np.asarray(values, dtype=float), 0.0, 1.0))
    if out.size:
        out[-1] = 1.0
    return out


@dataclass(frozen=True)
class CdfEstimate:
    grid: np.ndarray
    cdf_values: np.ndarray
    kind: str
    bandwidth: float | None = None
    sample_count: int = 0
    samples: np.ndarray | None = None

    @property
    def d1(self):
        return float(self.grid[0])

    @property
    def d2(self):
        return float(self.grid[-1])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == EMPIRICAL:
            out = np.searchsorted(self.samples, z, side="right") / self.sample_count
        else:
            out = np.interp(z, self.grid, self.cdf_values, left=0.0, right=1.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, q):
        return quantile_function(self, q)


def empirical_cdf(samples, d1, d2, grid_size=DEFAULT_GRID_SIZE):
    """Empirical CDF ``#{samples <= z} / count`` as an exact step function."""
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    if samples.size == 0:
        raise InsufficientDataError("empirical CDF needs at least one sample")
    grid = np.linspace(d1, d2, grid_size)
    values = np.searchsorted(samples, grid, side="right") / samples.size
    return CdfEstimate(grid, values, EMPIRICAL, None, samples.size, samples)


def deconv_density(samples, spec, phi_n, beta, gamma, ridge, grid):
    """Deconvolution kernel density of ``samples`` on ``grid``.

    Bandwidth follows ``bandwidth(beta, gamma, len(samples))``. Values may be
    negative; that is inherent to deconvolution.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise InsufficientDataError("deconvolution needs at least 2 samples")
    if ridge < 0:
        raise ConfigError("ridge must be non-negative")
    h = bandwidth(beta, gamma, samples.size)
    coef = quadrature_coefficients(spec, phi_n(spec.s / h), ridge)
    sg = SpectralGrid(spec, h, grid)
    spectrum = sample_spectrum(samples, spec, h)
    return sg.density(coef, spectrum[:, None], [samples.size])[:, 0]


def deconv_cdf(samples, spec, phi_values, h, ridge, grid, kind=KERNEL_KNOWN):
    """Finalized deconvolution CDF with the density integrated in closed form.

    ``phi_values`` are ``phi_N(s_k/h)`` at the quadrature nodes. Integrating
    each cosine term exactly avoids any dependence on the grid spacing except
    through the final linear interpolation.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    coef = quadrature_coefficients(spec, phi_values, ridge)
    sg = SpectralGrid(spec, h, grid)
    raw = sg.cdf(coef, sample_spectrum(samples, spec, h)[:, None], [samples.size])[:, 0]
    return CdfEstimate(sg.grid, finalize_cdf(raw), kind, float(h), samples.size)


def cdf_from_density(density, grid, d2=None, kind=KERNEL_KNOWN, bandwidth=None,
                     sample_count=0):
    """Cumulative trapezoid integral of ``density`` from ``grid[0]``, finalized."""
    density = np.asarray(density, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if density.shape != grid.shape:
        raise ShapeError(f"density {density.shape} and grid {grid.shape} differ")
    if d2 is not None and not np.isclose(grid[-1], d2):
        raise ShapeError("grid must end at d2")
    raw = cumulative_trapezoid(density, grid, initial=0.0)
    return CdfEstimate(grid, finalize_cdf(raw), kind, bandwidth, sample_count)


def quantile_function(cdf, q):
    """Right pseudo-inverse ``inf{z in [d1, d2]: F(z) >= q}``.

    Empirical CDFs return exact order statistics (clamped to the range);
    kernel CDFs interpolate linearly between grid points.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr >= 0.0) & (q_arr <= 1.0))):
        raise DomainError("quantile level must lie in [0, 1]")
    if cdf.kind == EMPIRICAL:
        out = _empirical_quantile(cdf, q_arr)
    else:
        out = _grid_quantile(cdf, q_arr)
    return float(out) if out.ndim == 0 else out


def _empirical_quantile(cdf, q):
    c = cdf.sample_count
    levels = np.arange(1, c + 1) / c
    k = np.minimum(np.searchsorted(levels, q, side="left"), c - 1)
    out = cdf.samples[k]
    out = np.where(q <= 0.0, cdf.d1, out)
    return np.clip(out, cdf.d1, cdf.d2)


def _grid_quantile(cdf, q):
    grid, vals = cdf.grid, cdf.cdf_values
    k = np.searchsorted(vals, q, side="left")
    k = np.minimum(k, grid.size - 1)
    lo = np.maximum(k - 1, 0)
    dv = vals[k] - vals[lo]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(dv > 0, (q - vals[lo]) / dv, 1.0)
    z = grid[lo] + np.clip(frac, 0.0, 1.0) * (grid[k] - grid[lo])
    z = np.where(k == 0, grid[0], np.minimum(z, grid[k]))
    # rounding can leave F(z) a hair below q; step right until it is not
    for _ in range(64):
        short = cdf(z) < q
        if not np.any(short):
            break
        z = np.where(short, np.minimum(np.nextafter(z, np.inf), grid[k]), z)
    return z
