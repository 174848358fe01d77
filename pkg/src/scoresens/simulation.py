"""Seeded sampling of risk-factor vectors: marginal laws and Gaussian copulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "MarginalSpec",
    "CopulaSpec",
    "SampleSet",
    "sample_factors",
    "sample_model",
]

# Rows are generated in fixed-size chunks with per-chunk derived seeds, so the
# output is identical no matter how chunks are distributed over workers.
_CHUNK_ROWS = 1 << 16

_MAX_SEED = 1 << 64


@dataclass(frozen=True)
class MarginalSpec:
    """A univariate marginal law, identified by kind plus natural parameters.

    Supported kinds: ``uniform(lo, hi)``, ``standard-normal``,
    ``normal(mu, sigma)``, ``lognormal(mu_log, sigma_log)``,
    ``gamma(shape, rate)``, ``bernoulli(p)`` with ``p = P(X = 1)``.
    """

    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        k, p = self.kind, self.params
        if k == "uniform":
            if len(p) != 2 or not p[0] < p[1]:
                raise ValueError(f"uniform marginal requires lo < hi, got {p}")
        elif k == "standard-normal":
            if p:
                raise ValueError("standard-normal marginal takes no parameters")
        elif k in ("normal", "lognormal"):
            if len(p) != 2 or p[1] <= 0:
                raise ValueError(f"{k} marginal requires sigma > 0, got {p}")
        elif k == "gamma":
            if len(p) != 2 or p[0] <= 0 or p[1] <= 0:
                raise ValueError(f"gamma marginal requires shape > 0 and rate > 0, got {p}")
        elif k == "bernoulli":
            if len(p) != 1 or not 0.0 <= p[0] <= 1.0:
                raise ValueError(f"bernoulli marginal requires p in [0, 1], got {p}")
        else:
            raise ValueError(f"unknown marginal kind {k!r}")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def standard_normal(cls):
        return cls("standard-normal")

    @classmethod
    def normal(cls, mu, sigma):
        return cls("normal", (float(mu), float(sigma)))

    @classmethod
    def lognormal(cls, mu_log, sigma_log):
        return cls("lognormal", (float(mu_log), float(sigma_log)))

    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", (float(shape), float(rate)))

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", (float(p),))

    def ppf(self, u):
        """Left-continuous quantile function, vectorised over ``u``."""
        u = np.asarray(u, dtype=float)
        k, p = self.kind, self.params
        if k == "uniform":
            return p[0] + (p[1] - p[0]) * u
        if k == "standard-normal":
            return special.ndtri(u)
        if k == "normal":
            return p[0] + p[1] * special.ndtri(u)
        if k == "lognormal":
            return np.exp(p[0] + p[1] * special.ndtri(u))
        if k == "gamma":
            return special.gammaincinv(p[0], u) / p[1]
        if k == "bernoulli":
            return (u > 1.0 - p[0]).astype(float)
        raise AssertionError(k)

    def from_standard_normal(self, z):
        """Map standard-normal draws to this marginal (inverse-CDF of Phi(z))."""
        z = np.asarray(z, dtype=float)
        k, p = self.kind, self.params
        if k == "standard-normal":
            return z
        if k == "normal":
            return p[0] + p[1] * z
        if k == "lognormal":
            return np.exp(p[0] + p[1] * z)
        if k == "bernoulli":
            # Phi(z) > 1 - p  <=>  z > Phi^{-1}(1 - p)
            return (z > special.ndtri(1.0 - p[0])).astype(float) if 0 < p[0] < 1 else np.full_like(z, p[0])
        return self.ppf(special.ndtr(z))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "uniform":
            return np.clip((x - p[0]) / (p[1] - p[0]), 0.0, 1.0)
        if k == "standard-normal":
            return special.ndtr(x)
        if k == "normal":
            return special.ndtr((x - p[0]) / p[1])
        if k == "lognormal":
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = special.ndtr((np.log(x[pos]) - p[0]) / p[1])
            return out
        if k == "gamma":
            return special.gammainc(p[0], p[1] * np.clip(x, 0.0, None))
        if k == "bernoulli":
            return np.where(x < 0, 0.0, np.where(x < 1, 1.0 - p[0], 1.0))
        raise AssertionError(k)

    def mean(self):
        k, p = self.kind, self.params
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        if k == "standard-normal":
            return 0.0
        if k == "normal":
            return p[0]
        if k == "lognormal":
            return math.exp(p[0] + 0.5 * p[1] ** 2)
        if k == "gamma":
            return p[0] / p[1]
        if k == "bernoulli":
            return p[0]
        raise AssertionError(k)

    def var(self):
        k, p = self.kind, self.params
        if k == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        if k == "standard-normal":
            return 1.0
        if k == "normal":
            return p[1] ** 2
        if k == "lognormal":
            return (math.exp(p[1] ** 2) - 1.0) * math.exp(2.0 * p[0] + p[1] ** 2)
        if k == "gamma":
            return p[0] / p[1] ** 2
        if k == "bernoulli":
            return p[0] * (1.0 - p[0])
        raise AssertionError(k)


def _cholesky_psd(r, tol=1e-10):
    """Cholesky factor of a PSD matrix, tolerating semi-definite pivots.

    Raises naming the first failing pivot when a diagonal entry drops below
    ``-tol`` (matrix not PSD).
    """
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        d = r[j, j] - low[j, :j] @ low[j, :j]
        if d < -tol:
            raise ValueError(
                f"correlation matrix is not positive semi-definite: "
                f"Cholesky pivot {j} = {d:.3e} < -{tol:g}"
            )
        d = max(d, 0.0)
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            num = r[i, j] - low[i, :j] @ low[j, :j]
            if low[j, j] > 0.0:
                low[i, j] = num / low[j, j]
            elif abs(num) > tol:
                raise ValueError(
                    f"correlation matrix is not positive semi-definite: "
                    f"zero pivot {j} with nonzero off-diagonal residue {num:.3e}"
                )
    return low


@dataclass(frozen=True)
class CopulaSpec:
    """Gaussian copula given by an n-by-n correlation matrix."""

    correlation: np.ndarray

    def __post_init__(self):
        r = np.array(self.correlation, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"correlation matrix must be square, got shape {r.shape}")
        if not np.allclose(r, r.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(r), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        low = _cholesky_psd(r)
        r.flags.writeable = False
        object.__setattr__(self, "correlation", r)
        object.__setattr__(self, "_chol", low)

    @property
    def dim(self):
        return self.correlation.shape[0]

    def cholesky(self):
        return self._chol


@dataclass(frozen=True)
class SampleSet:
    """Paired draws of risk factors (N x n) and response (length N)."""

    factors: np.ndarray
    response: np.ndarray
    seed: int
    model_id: str

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if f.ndim != 2:
            raise ValueError("factors must be a 2-d array")
        if y.ndim != 1 or y.shape[0] != f.shape[0]:
            raise ValueError(
                f"response length {y.shape} does not match factor rows {f.shape}"
            )
        if f.shape[0] < 1:
            raise ValueError("sample must contain at least one row")
        f.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "response", y)

    @property
    def n(self):
        return self.factors.shape[0]

    @property
    def n_factors(self):
        return self.factors.shape[1]


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _chunk_generator(seed, chunk_index):
    # Philox keyed per chunk: counter-based, so streams are independent and
    # reproducible regardless of which worker draws which chunk.
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key):
    """Derive an independent child seed from ``seed`` and an integer key path."""
    seed = _check_seed(seed)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_factors(marginals, copula, n, seed):
    """Draw ``n`` rows of risk factors with the given marginals and copula.

    Correlated standard normals (Cholesky of the copula correlation) are
    mapped through Phi and each marginal's inverse CDF.  Passing
    ``copula=None`` yields independent columns.  Deterministic in ``seed``.
    """
    marginals = tuple(marginals)
    if not marginals:
        raise ValueError("at least one marginal is required")
    n = int(n)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    seed = _check_seed(seed)
    k = len(marginals)
    if copula is not None and copula.dim != k:
        raise ValueError(
            f"copula dimension {copula.dim} does not match {k} marginals"
        )
    low = copula.cholesky() if copula is not None else None
    out = np.empty((n, k))
    for chunk, start in enumerate(range(0, n, _CHUNK_ROWS)):
        stop = min(start + _CHUNK_ROWS, n)
        rng = _chunk_generator(seed, chunk)
        z = rng.standard_normal((stop - start, k))
        if low is not None:
            z = z @ low.T
        for j, marginal in enumerate(marginals):
            out[start:stop, j] = marginal.from_standard_normal(z[:, j])
    return out


def sample_model(model, n, seed):
    """Draw a :class:`SampleSet` from a model: factors plus aggregated response.

    ``model`` must expose ``marginals``, ``copula``, ``model_id``, optional
    per-column affine ``factor_shifts``, and ``aggregate_rows``.
    """
    factors = sample_factors(model.marginals, model.copula, n, seed)
    shifts = getattr(model, "factor_shifts", None)
    if shifts is not None:
        factors = factors + np.asarray(shifts, dtype=float)
    response = model.aggregate_rows(factors)
    return SampleSet(factors=factors, response=np.asarray(response, dtype=float),
                     seed=seed, model_id=model.model_id)
