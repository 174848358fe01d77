"""Empirical evaluation of the target functionals (mean, VaR, ES, expectiles, ...)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["FunctionalSpec", "Prediction", "empirical_functional"]

_KINDS = ("mean", "var", "var-es", "expectile", "mode", "entropic", "mean-variance", "rvar")

# exp argument beyond this overflows float64
_EXP_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class FunctionalSpec:
    """Tagged descriptor of a target functional and its level parameters."""

    kind: str
    alpha: float | None = None
    tau: float | None = None
    gamma: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind in ("var", "var-es"):
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"{self.kind} requires alpha in (0, 1), got {self.alpha}")
        if self.kind == "expectile":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError(f"expectile requires tau in (0, 1), got {self.tau}")
        if self.kind == "entropic":
            if self.gamma is None or self.gamma <= 0.0:
                raise ValueError(f"entropic requires gamma > 0, got {self.gamma}")
        if self.kind == "rvar":
            if (
                self.alpha is None
                or self.beta is None
                or not 0.0 < self.alpha < self.beta < 1.0
            ):
                raise ValueError(
                    f"rvar requires 0 < alpha < beta < 1, got ({self.alpha}, {self.beta})"
                )

    @classmethod
    def mean(cls):
        return cls("mean")

    @classmethod
    def var(cls, alpha):
        return cls("var", alpha=float(alpha))

    @classmethod
    def var_es(cls, alpha):
        return cls("var-es", alpha=float(alpha))

    @classmethod
    def expectile(cls, tau):
        return cls("expectile", tau=float(tau))

    @classmethod
    def mode(cls):
        return cls("mode")

    @classmethod
    def entropic(cls, gamma):
        return cls("entropic", gamma=float(gamma))

    @classmethod
    def mean_variance(cls):
        return cls("mean-variance")

    @classmethod
    def rvar(cls, alpha, beta):
        return cls("rvar", alpha=float(alpha), beta=float(beta))

    @property
    def prediction_dim(self):
        if self.kind in ("var-es", "mean-variance"):
            return 2
        if self.kind == "rvar":
            return 3
        return 1

    def label(self):
        if self.kind == "var":
            return f"var({self.alpha:g})"
        if self.kind == "var-es":
            return f"var-es({self.alpha:g})"
        if self.kind == "expectile":
            return f"expectile({self.tau:g})"
        if self.kind == "entropic":
            return f"entropic({self.gamma:g})"
        if self.kind == "rvar":
            return f"rvar({self.alpha:g},{self.beta:g})"
        return self.kind


@dataclass(frozen=True)
class Prediction:
    """A point in the action domain: one value per functional component."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def of(cls, *values):
        return cls(values)

    @property
    def dim(self):
        return len(self.values)

    @property
    def scalar(self):
        if len(self.values) != 1:
            raise ValueError(f"prediction has {len(self.values)} components, not 1")
        return self.values[0]

    def as_array(self):
        return np.asarray(self.values)


def _order_stat_index(alpha, m):
    """ceil(alpha * m) with a tiny snap so binary float levels like 0.9 behave
    as their decimal value (0.9 * 10 is 9.000000000000002 in float64)."""
    t = alpha * m
    nearest = round(t)
    if abs(t - nearest) < 1e-9 * max(1.0, m):
        return max(int(nearest), 1)
    return max(math.ceil(t), 1)


def _empirical_var(sorted_sample, alpha):
    # left-continuous quantile inf{t : F(t) >= alpha} of the empirical CDF
    return sorted_sample[_order_stat_index(alpha, sorted_sample.shape[0]) - 1]


def _empirical_es(sample, var_value, alpha):
    # tail average with the discreteness correction term; exceeds VaR by
    # E[(Y - VaR)_+] / (1 - alpha) >= 0
    m = sample.shape[0]
    above = sample > var_value
    tail = sample[above].sum() / m
    p_above = above.sum() / m
    return (tail + var_value * (1.0 - alpha - p_above)) / (1.0 - alpha)


def _empirical_expectile(sample, tau, tol=1e-12):
    lo = float(sample.min())
    hi = float(sample.max())
    if hi - lo <= tol:
        return lo

    def foc(z):
        return tau * np.maximum(sample - z, 0.0).sum() - (1.0 - tau) * np.maximum(z - sample, 0.0).sum()

    # foc is strictly decreasing with foc(lo) >= 0 >= foc(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if foc(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _empirical_rvar(sorted_sample, alpha, beta):
    # exact integral of the empirical quantile function over (alpha, beta],
    # normalised by beta - alpha (trimmed-mean plug-in)
    m = sorted_sample.shape[0]
    edges = np.arange(m + 1) / m
    width = np.clip(np.minimum(edges[1:], beta) - np.maximum(edges[:-1], alpha), 0.0, None)
    return float(width @ sorted_sample) / (beta - alpha)


def empirical_functional(spec, sample):
    """Evaluate the functional of the empirical distribution of ``sample``."""
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size == 0:
        raise ValueError("cannot evaluate a functional on an empty sample")
    kind = spec.kind
    if kind == "mean":
        return Prediction.of(sample.mean())
    if kind == "var":
        return Prediction.of(_empirical_var(np.sort(sample), spec.alpha))
    if kind == "var-es":
        v = _empirical_var(np.sort(sample), spec.alpha)
        return Prediction.of(v, _empirical_es(sample, v, spec.alpha))
    if kind == "expectile":
        return Prediction.of(_empirical_expectile(sample, spec.tau))
    if kind == "mode":
        values, counts = np.unique(sample, return_counts=True)
        return Prediction.of(values[int(np.argmax(counts))])
    if kind == "entropic":
        if spec.gamma * sample.max() > _EXP_MAX:
            raise ValueError(
                f"entropic functional overflows: exp(gamma * y) is not finite "
                f"for gamma = {spec.gamma:g} on this sample"
            )
        return Prediction.of(math.log(np.exp(spec.gamma * sample).mean()) / spec.gamma)
    if kind == "mean-variance":
        mu = sample.mean()
        return Prediction.of(mu, ((sample - mu) ** 2).mean())
    if kind == "rvar":
        s = np.sort(sample)
        return Prediction.of(
            _empirical_var(s, spec.alpha),
            _empirical_var(s, spec.beta),
            _empirical_rvar(s, spec.alpha, spec.beta),
        )
    raise AssertionError(kind)
