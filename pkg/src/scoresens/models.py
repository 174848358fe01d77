"""Test-model library: aggregation maps, closed-form conditional functionals,
and analytic sensitivity values used as oracles.

Subsets of risk factors are 1-based index tuples, matching the X_1..X_n
naming convention throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .functionals import FunctionalSpec, Prediction
from .simulation import CopulaSpec, MarginalSpec, sample_model

__all__ = [
    "ConditionalRule",
    "Model",
    "get_model",
    "MODEL_IDS",
    "aggregate",
    "conditional_functional",
    "analytic_sensitivity",
]


@dataclass(frozen=True)
class ConditionalRule:
    """Closed-form map from conditioning values x_I to the conditional functional."""

    functional: FunctionalSpec
    subset: tuple[int, ...]
    fn: Callable[[np.ndarray], np.ndarray]

    def predict(self, x_sub):
        """Evaluate the rule on an (M, |I|) block of conditioning values."""
        x_sub = np.atleast_2d(np.asarray(x_sub, dtype=float))
        out = np.asarray(self.fn(x_sub), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        return np.broadcast_to(out, (x_sub.shape[0], self.functional.prediction_dim)).copy()


def _normalize_subset(subset, n_factors):
    subset = tuple(sorted({int(i) for i in subset}))
    for i in subset:
        if not 1 <= i <= n_factors:
            raise ValueError(f"subset index {i} outside 1..{n_factors}")
    return subset


def _is_squared_loss_like(score):
    """True for scores proportional to (z - y)^2: same sensitivity as Sobol."""
    if score.family == "patton" and score.b == 2.0:
        return True
    if score.family == "bregman":
        phi = score.phi
        if phi.kind == "square":
            return True
        if phi.kind == "piecewise-power" and phi.b == 2.0 and phi.d1 == phi.d2:
            return True
    return False


class Model:
    """Base class: a registered model with factor laws and an aggregation map."""

    model_id: str
    copula = None
    factor_shifts = None

    @property
    def n_factors(self):
        return len(self.marginals)

    def sample(self, n, seed):
        return sample_model(self, n, seed)

    def aggregate_rows(self, factors):
        raise NotImplementedError

    # closed-form conditionals ------------------------------------------

    def _rule_fn(self, functional, subset):
        return None

    def registered_conditionals(self):
        return ()

    def conditional_rule(self, functional, subset):
        subset = _normalize_subset(subset, self.n_factors)
        fn = self._rule_fn(functional, subset)
        if fn is None:
            known = ", ".join(
                f"({k}, {s})" for k, s in self.registered_conditionals()
            ) or "none"
            raise ValueError(
                f"no closed-form conditional registered for {self.model_id} with "
                f"functional {functional.label()} and subset {subset}; registered: {known}"
            )
        return ConditionalRule(functional=functional, subset=subset, fn=fn)

    def analytic_sensitivity(self, functional, score, subset):
        return None


@dataclass(frozen=True)
class IshigamiModel(Model):
    """Three-factor benchmark: Y = sin X1 + a1 sin^2 X2 + a2 X3^4 sin X1 with
    independent U[-pi, pi] factors."""

    a1: float = 1.0
    a2: float = 2.0

    model_id = "ishigami"

    @property
    def marginals(self):
        u = MarginalSpec.uniform(-math.pi, math.pi)
        return (u, u, u)

    def aggregate_rows(self, factors):
        x1, x2, x3 = factors[:, 0], factors[:, 1], factors[:, 2]
        return np.sin(x1) + self.a1 * np.sin(x2) ** 2 + self.a2 * x3 ** 4 * np.sin(x1)

    # E[sin X1] = 0, E[sin^2 X2] = 1/2, E[X3^4] = pi^4/5 under U[-pi, pi]
    _X4_MOMENT = math.pi ** 4 / 5.0

    def _rule_fn(self, functional, subset):
        if functional.kind != "mean":
            return None
        a1, a2, m4 = self.a1, self.a2, self._X4_MOMENT
        half = 0.5 * a1
        rules = {
            (1,): lambda x: np.sin(x[:, 0]) * (1.0 + a2 * m4) + half,
            (2,): lambda x: a1 * np.sin(x[:, 0]) ** 2,
            (3,): lambda x: np.full(x.shape[0], half),
            (1, 2): lambda x: np.sin(x[:, 0]) * (1.0 + a2 * m4) + a1 * np.sin(x[:, 1]) ** 2,
            (1, 3): lambda x: np.sin(x[:, 0]) * (1.0 + a2 * x[:, 1] ** 4) + half,
            (2, 3): lambda x: a1 * np.sin(x[:, 0]) ** 2,
            (1, 2, 3): lambda x: self.aggregate_rows(x),
        }
        return rules.get(subset)

    def registered_conditionals(self):
        return tuple(("mean", s) for s in ((1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3)))

    def variance_decomposition(self):
        """Total variance and first-order pieces (V1, V2, V3)."""
        a1, a2 = self.a1, self.a2
        v1 = 0.5 * (1.0 + a2 * math.pi ** 4 / 5.0) ** 2
        v2 = a1 ** 2 / 8.0
        v3 = 0.0
        total = 0.5 + a1 ** 2 / 8.0 + a2 * math.pi ** 4 / 5.0 + a2 ** 2 * math.pi ** 8 / 18.0
        return total, (v1, v2, v3)

    def analytic_sensitivity(self, functional, score, subset):
        if functional.kind != "mean" or not _is_squared_loss_like(score):
            return None
        total, (v1, v2, v3) = self.variance_decomposition()
        singles = {(1,): v1 / total, (2,): v2 / total, (3,): v3 / total}
        if subset in singles:
            return singles[subset]
        if subset == (1, 3):
            # Y decomposes as f(X1, X3) + g(X2), so the joint effect is 1 - S2
            return 1.0 - v2 / total
        if subset == (1, 2, 3):
            return 1.0
        return None


def _bernoulli_mixture_marginals(p, c, x2_marginal, x3_core):
    if not 0.0 < p < 1.0:
        raise ValueError(f"bernoulli-mixture requires p in (0, 1), got {p}")
    if c <= 0:
        raise ValueError(f"bernoulli-mixture requires C > 0, got {c}")
    x2 = x2_marginal if x2_marginal is not None else MarginalSpec.uniform(0.0, c)
    # Gamma with mean 20 and variance 10 under the shape-rate parameterisation
    x3 = x3_core if x3_core is not None else MarginalSpec.gamma(40.0, 2.0)
    return (MarginalSpec.bernoulli(1.0 - p), x2, x3)


@dataclass(frozen=True)
class BernoulliMixtureModel(Model):
    """Two-regime claims model Y = 1{X1=0} X2 + 1{X1=1} X3 with
    P(X1 = 0) = p, X2 supported below C, and X3 = C + Z above it."""

    p: float = 0.8
    c: float = 10.0
    x2_marginal: MarginalSpec | None = None
    x3_core: MarginalSpec | None = None

    model_id = "bernoulli-mixture"

    @property
    def marginals(self):
        return _bernoulli_mixture_marginals(self.p, self.c, self.x2_marginal, self.x3_core)

    @property
    def factor_shifts(self):
        # the third factor is stored as X3 = C + Z
        return (0.0, 0.0, self.c)

    def aggregate_rows(self, factors):
        large = factors[:, 0] > 0.5
        return np.where(large, factors[:, 2], factors[:, 1])

    def _x2(self):
        return self.marginals[1]

    def _x3_quantile(self, u):
        return self.c + self.marginals[2].ppf(u)

    def _x3_mean(self):
        return self.c + self.marginals[2].mean()

    def _rule_fn(self, functional, subset):
        p = self.p
        if functional.kind == "mean":
            m2 = self._x2().mean()
            m3 = self._x3_mean()
            rules = {
                (): lambda x: np.full(x.shape[0], p * m2 + (1 - p) * m3),
                (1,): lambda x: np.where(x[:, 0] > 0.5, m3, m2),
                (2,): lambda x: p * x[:, 0] + (1 - p) * m3,
                (3,): lambda x: p * m2 + (1 - p) * x[:, 0],
                (1, 2): lambda x: np.where(x[:, 0] > 0.5, m3, x[:, 1]),
                (1, 3): lambda x: np.where(x[:, 0] > 0.5, x[:, 1], m2),
                (2, 3): lambda x: p * x[:, 0] + (1 - p) * x[:, 1],
            }
            return rules.get(subset)
        if functional.kind == "var":
            a = functional.alpha
            if a <= p:
                raise ValueError(
                    f"VaR conditionals of the bernoulli mixture need alpha > p; "
                    f"got alpha = {a:g} <= p = {p:g}"
                )
            q_uncond = self._x3_quantile((a - p) / (1 - p))
            q2 = self._x2().ppf(a)
            q3 = self._x3_quantile(a)
            rules = {
                (): lambda x: np.full(x.shape[0], q_uncond),
                (1,): lambda x: np.where(x[:, 0] > 0.5, q3, q2),
                (2,): lambda x: np.full(x.shape[0], q_uncond),
                (3,): lambda x: x[:, 0],
                (1, 2): lambda x: np.where(x[:, 0] > 0.5, q3, x[:, 1]),
                (1, 3): lambda x: np.where(x[:, 0] > 0.5, x[:, 1], q2),
                (2, 3): lambda x: x[:, 1],
            }
            return rules.get(subset)
        return None

    def registered_conditionals(self):
        subsets = ((), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3))
        return tuple(("mean", s) for s in subsets) + tuple(("var", s) for s in subsets)

    def analytic_sensitivity(self, functional, score, subset):
        # knowing X2 never moves the VaR: zero information gain
        if functional.kind == "var" and subset == (2,) and score.functional_kind == "var":
            return 0.0
        return None


@dataclass(frozen=True)
class NormalSumModel(Model):
    """Y = X1 + X2 with jointly normal standard factors, correlation rho."""

    rho: float = 0.0

    model_id = "normal-sum"

    def __post_init__(self):
        if not -1.0 < self.rho <= 1.0:
            raise ValueError(f"normal-sum requires rho in (-1, 1], got {self.rho}")

    @property
    def marginals(self):
        s = MarginalSpec.standard_normal()
        return (s, s)

    @property
    def copula(self):
        return CopulaSpec(np.array([[1.0, self.rho], [self.rho, 1.0]]))

    def aggregate_rows(self, factors):
        return factors[:, 0] + factors[:, 1]

    def _rule_fn(self, functional, subset):
        if functional.kind != "mean":
            return None
        slope = 1.0 + self.rho
        rules = {
            (): lambda x: np.zeros(x.shape[0]),
            (1,): lambda x: slope * x[:, 0],
            (2,): lambda x: slope * x[:, 0],
            (1, 2): lambda x: x[:, 0] + x[:, 1],
        }
        return rules.get(subset)

    def registered_conditionals(self):
        return tuple(("mean", s) for s in ((), (1,), (2,), (1, 2)))

    def analytic_sensitivity(self, functional, score, subset):
        if functional.kind != "mean" or not _is_squared_loss_like(score):
            return None
        if subset in ((1,), (2,)):
            return (1.0 + self.rho) / 2.0
        if subset == (1, 2):
            return 1.0
        return None


@dataclass(frozen=True)
class LognormalProductModel(Model):
    """Y = exp(X1 + X2) with independent standard-normal factors."""

    model_id = "lognormal-product"

    @property
    def marginals(self):
        s = MarginalSpec.standard_normal()
        return (s, s)

    def aggregate_rows(self, factors):
        return np.exp(factors[:, 0] + factors[:, 1])

    def _rule_fn(self, functional, subset):
        if functional.kind != "mean":
            return None
        half = math.sqrt(math.e)
        rules = {
            (): lambda x: np.full(x.shape[0], math.e),
            (1,): lambda x: np.exp(x[:, 0]) * half,
            (2,): lambda x: np.exp(x[:, 0]) * half,
            (1, 2): lambda x: np.exp(x[:, 0] + x[:, 1]),
        }
        return rules.get(subset)

    def registered_conditionals(self):
        return tuple(("mean", s) for s in ((), (1,), (2,), (1, 2)))

    def analytic_sensitivity(self, functional, score, subset):
        if functional.kind != "mean" or not _is_squared_loss_like(score):
            return None
        if subset in ((1,), (2,)):
            return 1.0 / (math.e + 1.0)
        if subset == (1, 2):
            return 1.0
        return None


@dataclass(frozen=True)
class MultiplicativeModel(Model):
    """Y = X1 X2 + X3 with X1 > 0 and E[X2] = 0, all independent: knowing X1
    alone carries no information about the mean."""

    sigma1: float = 0.5

    model_id = "multiplicative"

    @property
    def marginals(self):
        return (
            MarginalSpec.lognormal(0.0, self.sigma1),
            MarginalSpec.standard_normal(),
            MarginalSpec.standard_normal(),
        )

    def aggregate_rows(self, factors):
        return factors[:, 0] * factors[:, 1] + factors[:, 2]

    def _rule_fn(self, functional, subset):
        if functional.kind != "mean":
            return None
        m1 = self.marginals[0].mean()
        rules = {
            (): lambda x: np.zeros(x.shape[0]),
            (1,): lambda x: np.zeros(x.shape[0]),
            (2,): lambda x: m1 * x[:, 0],
            (3,): lambda x: x[:, 0],
        }
        return rules.get(subset)

    def registered_conditionals(self):
        return tuple(("mean", s) for s in ((), (1,), (2,), (3,)))

    def analytic_sensitivity(self, functional, score, subset):
        if functional.kind == "mean" and subset == (1,) and score.functional_kind == "mean":
            return 0.0
        return None


@dataclass(frozen=True)
class InsurancePortfolioModel(Model):
    """Reinsured two-line portfolio with inflation factor:
    Y = L - min{(L - d)_+, l} + X3 X4 with L = X4 (X1 + X2)."""

    d: float = 380.0
    l: float = 30.0

    model_id = "insurance-portfolio"

    @property
    def marginals(self):
        line = MarginalSpec.lognormal(4.98, 0.23)
        return (
            line,
            line,
            MarginalSpec.gamma(100.0, 1.0),
            MarginalSpec.lognormal(-0.005, 0.1),
        )

    @property
    def copula(self):
        return CopulaSpec(np.array([
            [1.0, 0.3, 0.0, 0.8],
            [0.3, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.8, 0.0, 0.0, 1.0],
        ]))

    def aggregate_rows(self, factors):
        x1, x2, x3, x4 = (factors[:, j] for j in range(4))
        gross = x4 * (x1 + x2)
        recovery = np.minimum(np.clip(gross - self.d, 0.0, None), self.l)
        return gross - recovery + x3 * x4


@dataclass(frozen=True)
class TailMeanDemoModel(Model):
    """Tail-mean target E[Y 1{Y > C}] on the bernoulli mixture, realised as the
    mean of the transformed response Y 1{Y > C}: the pair (X1, X3) carries full
    information even though Y itself is not a function of it."""

    p: float = 0.8
    c: float = 10.0

    model_id = "tail-mean-demo"

    @property
    def marginals(self):
        return _bernoulli_mixture_marginals(self.p, self.c, None, None)

    @property
    def factor_shifts(self):
        return (0.0, 0.0, self.c)

    def aggregate_rows(self, factors):
        large = factors[:, 0] > 0.5
        raw = np.where(large, factors[:, 2], factors[:, 1])
        return raw * (raw > self.c)

    def _rule_fn(self, functional, subset):
        if functional.kind != "mean":
            return None
        p = self.p
        m3 = self.c + self.marginals[2].mean()
        rules = {
            (): lambda x: np.full(x.shape[0], (1 - p) * m3),
            (1,): lambda x: np.where(x[:, 0] > 0.5, m3, 0.0),
            (3,): lambda x: (1 - p) * x[:, 0],
            (1, 3): lambda x: np.where(x[:, 0] > 0.5, x[:, 1], 0.0),
        }
        return rules.get(subset)

    def registered_conditionals(self):
        return tuple(("mean", s) for s in ((), (1,), (3,), (1, 3)))

    def analytic_sensitivity(self, functional, score, subset):
        if functional.kind == "mean" and subset == (1, 3) and score.functional_kind == "mean":
            return 1.0
        return None


_MODEL_BUILDERS = {
    "ishigami": IshigamiModel,
    "bernoulli-mixture": BernoulliMixtureModel,
    "normal-sum": NormalSumModel,
    "lognormal-product": LognormalProductModel,
    "multiplicative": MultiplicativeModel,
    "insurance-portfolio": InsurancePortfolioModel,
    "tail-mean-demo": TailMeanDemoModel,
}

MODEL_IDS = tuple(sorted(_MODEL_BUILDERS))


def get_model(model_id, **params):
    """Instantiate a registered model by id."""
    try:
        builder = _MODEL_BUILDERS[model_id]
    except KeyError:
        raise ValueError(f"unknown model id {model_id!r}; known: {', '.join(MODEL_IDS)}") from None
    return builder(**params)


def aggregate(model, x):
    """Evaluate the model's aggregation map on a single factor vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_factors,):
        raise ValueError(f"{model.model_id} expects {model.n_factors} factors, got shape {x.shape}")
    return float(model.aggregate_rows(x[None, :])[0])


def conditional_functional(model, functional, subset, x_sub):
    """Closed-form conditional functional at a single conditioning point."""
    rule = model.conditional_rule(functional, subset)
    x_sub = np.asarray(x_sub, dtype=float).reshape(1, -1)
    if x_sub.shape[1] != len(rule.subset):
        raise ValueError(
            f"expected {len(rule.subset)} conditioning values for subset {rule.subset}, "
            f"got {x_sub.shape[1]}"
        )
    return Prediction(tuple(rule.predict(x_sub)[0]))


def analytic_sensitivity(model, functional, score, subset):
    """Registered analytic sensitivity value, or None when no closed form exists."""
    subset = _normalize_subset(subset, model.n_factors)
    return model.analytic_sensitivity(functional, score, subset)
