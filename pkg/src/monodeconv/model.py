"""Generative latent-variable model, additive noise and Bernoulli masking.

Entries are ``A(i, j) = g(theta_row[i], theta_col[j])`` with ``g`` nondecreasing
and bi-Lipschitz in its second argument. Observations are
``Z(i, j) = A(i, j) + N(i, j)`` wherever the mask is 1; unobserved entries are
stored as NaN.

Two latent families ship, both with closed-form Lipschitz constants and range
so tests have exact ground truth:

* ``affine``: ``g(x, y) = a + c*x + s*y`` with params ``(a, c, s)``, ``s > 0``.
* ``curved``: ``g(x, y) = x + y + 0.25*sin(2*pi*x)*y``; slope in ``y`` lies in
  ``[0.75, 1.25]`` and the range is ``[0, 2]``.

Neither is prescribed by the underlying method; they are test fixtures.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    InvalidDimensionError,
    InvalidProbabilityError,
    ShapeError,
)

LATENT_FAMILIES = ("affine", "curved")
NOISE_FAMILIES = ("none", "gaussian")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LatentModel:
    family: str
    params: tuple = ()
    l: float = 1.0
    L: float = 1.0
    d1: float = 0.0
    d2: float = 1.0

    def __call__(self, x, y):
        """Vectorised ``g(x, y)`` without domain checks."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.family == "affine":
            a, c, s = self.params
            return a + c * x + s * y
        if self.family == "curved":
            return x + y + 0.25 * np.sin(2.0 * np.pi * x) * y
        raise ConfigError(f"unknown latent family {self.family!r}")

    def spec_string(self):
        if not self.params:
            return self.family
        return self.family + ":" + ",".join(format(v, ".17g") for v in self.params)


def latent_model(family, params=()):
    """Build a built-in latent family with its analytic constants."""
    params = tuple(float(v) for v in params)
    if family == "affine":
        if len(params) != 3:
            raise ConfigError("affine needs params (a, c, s)")
        a, c, s = params
        if not s > 0:
            raise ConfigError("affine slope s must be positive")
        return LatentModel("affine", params, l=s, L=s,
                           d1=a + min(c, 0.0), d2=a + max(c, 0.0) + s)
    if family == "curved":
        if params:
            raise ConfigError("curved takes no params")
        return LatentModel("curved", (), l=0.75, L=1.25, d1=0.0, d2=2.0)
    raise ConfigError(f"unknown latent family {family!r}; expected one of {LATENT_FAMILIES}")


def parse_model(text):
    """Parse ``NAME`` or ``NAME:P1,P2,...`` (CLI syntax)."""
    name, _, rest = text.partition(":")
    try:
        params = [float(v) for v in rest.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad model params in {text!r}") from exc
    return latent_model(name.strip(), params)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise family.

    ``beta``/``gamma``/``b_const`` are the supersmoothness constants in
    ``phi(t) ~ exp(-gamma*|t|**beta)``; for ``none`` they are placeholders
    (``gamma = 0``) and the family is only valid for the noiseless estimator.
    """
    family: str = "none"
    sigma: float = 0.0
    beta: float = 2.0
    gamma: float = 0.0
    b_const: float = 1.0

    def char_fn(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "none":
            return np.ones_like(t)
        return np.exp(-0.5 * self.sigma ** 2 * t ** 2)

    def sample(self, rng, size):
        if self.family == "none":
            return np.zeros(size)
        return self.sigma * rng.standard_normal(size)

    def spec_string(self):
        if self.family == "none":
            return "none"
        return f"{self.family}:{self.sigma!r}"


def no_noise():
    return NoiseSpec()


def gaussian_noise(sigma):
    sigma = float(sigma)
    if not sigma > 0:
        raise ConfigError("gaussian noise needs sigma > 0")
    return NoiseSpec("gaussian", sigma, beta=2.0, gamma=sigma ** 2 / 2.0, b_const=1.0)


def parse_noise(text):
    """Parse ``none`` or ``gaussian:SIGMA``."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if name == "none":
        return no_noise()
    if name == "gaussian":
        try:
            return gaussian_noise(float(rest))
        except ValueError as exc:
            raise ConfigError(f"bad noise sigma in {text!r}") from exc
    raise ConfigError(f"unknown noise family {name!r}; expected one of {NOISE_FAMILIES}")


@dataclass(frozen=True)
class FeatureAssignment:
    row_features: np.ndarray
    col_features: np.ndarray

    @property
    def m(self):
        return len(self.row_features)

    @property
    def n(self):
        return len(self.col_features)


@dataclass(frozen=True)
class ObservationSet:
    """Partially observed matrix. ``z`` holds NaN exactly where ``mask`` is 0."""
    z: np.ndarray
    mask: np.ndarray
    p: float = field(default=None)

    def __post_init__(self):
        z = _frozen(self.z)
        mask = np.array(self.mask, dtype=bool)
        mask.setflags(write=False)
        if z.ndim != 2 or z.shape != mask.shape:
            raise ShapeError(f"z {z.shape} and mask {mask.shape} must be equal 2-d shapes")
        if z.shape[0] < 1 or z.shape[1] < 1:
            raise InvalidDimensionError("observation matrix must be at least 1x1")
        if np.any(np.isnan(z) == mask):
            raise ShapeError("z must be present exactly where mask is 1")
        p = self.p
        if p is None:
            p = float(mask.mean())
        if not 0.0 < p <= 1.0:
            raise InvalidProbabilityError(f"p={p} outside (0, 1]")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "p", float(p))

    @classmethod
    def from_values(cls, z, p=None):
        z = np.asarray(z, dtype=float)
        return cls(z, ~np.isnan(z), p)

    @property
    def m(self):
        return self.z.shape[0]

    @property
    def n(self):
        return self.z.shape[1]

    def row_support(self, i):
        """Column indices observed in row ``i``."""
        return np.flatnonzero(self.mask[i])

    def col_support(self, j):
        """Row indices observed in column ``j``."""
        return np.flatnonzero(self.mask[:, j])

    def row_values(self, i):
        return self.z[i, self.mask[i]]

    @property
    def row_counts(self):
        return self.mask.sum(axis=1)

    @property
    def col_counts(self):
        return self.mask.sum(axis=0)


def sample_features(m, n, seed):
    """Draw ``m`` row and ``n`` column features i.i.d. uniform on [0, 1]."""
    if m < 1 or n < 1:
        raise InvalidDimensionError(f"need m, n >= 1, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    rows = rng.random(m)
    cols = rng.random(n)
    return FeatureAssignment(_frozen(rows), _frozen(cols))


def eval_latent(model, x, y):
    x = float(x)
    y = float(y)
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise DomainError(f"latent arguments must lie in [0, 1], got ({x}, {y})")
    return float(model(x, y))


def generate_truth(model, features):
    rows = np.asarray(features.row_features, dtype=float)
    cols = np.asarray(features.col_features, dtype=float)
    if np.any((rows < 0) | (rows > 1)) or np.any((cols < 0) | (cols > 1)):
        raise DomainError("features must lie in [0, 1]")
    return _frozen(model(rows[:, None], cols[None, :]))


def observe(truth, noise, p, seed):
    """Mask entries i.i.d. Bernoulli(p) and add i.i.d. noise.

    Each row draws from its own generator seeded by ``(seed, i)``, so a row's
    mask and noise do not depend on the number or order of the other rows.
    """
    if not 0.0 < p <= 1.0:
        raise InvalidProbabilityError(f"p={p} outside (0, 1]")
    truth = np.asarray(truth, dtype=float)
    if truth.ndim != 2:
        raise ShapeError("truth must be a 2-d array")
    m, n = truth.shape
    z = np.full((m, n), np.nan)
    mask = np.zeros((m, n), dtype=bool)
    for i in range(m):
        rng = np.random.default_rng([seed, i])
        keep = rng.random(n) < p
        noisy = truth[i] + noise.sample(rng, n)
        mask[i] = keep
        z[i, keep] = noisy[keep]
    return ObservationSet(z, mask, p)
