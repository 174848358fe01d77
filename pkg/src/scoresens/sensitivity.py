"""Score-based sensitivity estimation, interaction information, Murphy curves,
confidence intervals, and curve dominance checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .functionals import Prediction
from .scores import MurphyGrid, ScoreSpec, evaluate_many

__all__ = [
    "ConditionalModel",
    "SensitivityEstimate",
    "MurphyCurve",
    "estimate_sensitivity",
    "interaction_information",
    "murphy_elementary",
    "murphy_homogeneous",
    "dominance_check",
    "confidence_interval",
]

_MIN_DENOMINATOR = 1e-12
_MIN_CI_SAMPLE = 100


@dataclass(frozen=True)
class ConditionalModel:
    """An estimator of the conditional functional T(Y | X_I): a closed-form
    rule, a trained net, or the constant unconditional baseline."""

    kind: str  # "closed-form" | "neural" | "constant"
    subset: tuple[int, ...]
    _predict: object

    @classmethod
    def from_rule(cls, rule):
        return cls(kind="closed-form", subset=rule.subset, _predict=rule.predict)

    @classmethod
    def from_net(cls, net, subset):
        subset = tuple(sorted(int(i) for i in subset))
        if len(subset) != net.config.input_dim:
            raise ValueError(
                f"net expects {net.config.input_dim} inputs but subset {subset} "
                f"has {len(subset)} factors"
            )
        return cls(kind="neural", subset=subset, _predict=net.predict)

    @classmethod
    def constant(cls, prediction):
        values = np.asarray(prediction.values, dtype=float)

        def fn(x_sub):
            return np.broadcast_to(values, (x_sub.shape[0], values.size)).copy()

        return cls(kind="constant", subset=(), _predict=fn)

    def predict(self, factors):
        """Predictions (M, k) from the full (M, n) factor matrix."""
        factors = np.atleast_2d(np.asarray(factors, dtype=float))
        cols = [i - 1 for i in self.subset]
        block = factors[:, cols] if cols else factors[:, :0]
        out = np.asarray(self._predict(block), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        return out


@dataclass(frozen=True)
class SensitivityEstimate:
    """One estimated sensitivity: value = 1 - (conditional mean score) / (baseline
    mean score), with a 90% delta-method confidence interval when m >= 100."""

    value: float
    numerator: float
    denominator: float
    ci90: tuple[float, float] | None
    m: int


@dataclass(frozen=True)
class MurphyCurve:
    """Sensitivities per information set along a Murphy grid; NaN marks grid
    points where the score cannot separate anything (denominator ~ 0)."""

    grid: MurphyGrid
    curves: dict[tuple[int, ...], np.ndarray]

    def __post_init__(self):
        for subset, values in self.curves.items():
            if len(values) != len(self.grid):
                raise ValueError(f"curve for subset {subset} does not match the grid length")


def confidence_interval(scores_cond, scores_base, level=0.90):
    """Delta-method CI for the ratio statistic 1 - mean(S_cond)/mean(S_base)
    from aligned per-observation score pairs (bivariate CLT)."""
    sc = np.asarray(scores_cond, dtype=float)
    sb = np.asarray(scores_base, dtype=float)
    if sc.shape != sb.shape or sc.ndim != 1:
        raise ValueError("score pairs must be two aligned 1-d arrays")
    m = sc.shape[0]
    if m < _MIN_CI_SAMPLE:
        raise ValueError(f"confidence interval needs at least {_MIN_CI_SAMPLE} observations, got {m}")
    a = sc.mean()
    b = sb.mean()
    value = 1.0 - a / b
    cov = np.cov(np.vstack([sc, sb]), ddof=1)
    grad = np.array([-1.0 / b, a / b ** 2])
    var = float(grad @ cov @ grad) / m
    se = np.sqrt(max(var, 0.0))
    z = special.ndtri(0.5 * (1.0 + level))
    return (float(value - z * se), float(value + z * se))


def _score_arrays(score, baseline, cond, eval_set):
    y = eval_set.response
    preds = cond.predict(eval_set.factors)
    s_cond = evaluate_many(score, preds, y)
    s_base = evaluate_many(score, baseline.as_array(), y)
    return s_cond, s_base


def estimate_sensitivity(score, functional, baseline, cond, eval_set):
    """Out-of-sample sensitivity of the response to the information in
    ``cond.subset``, relative to the ``baseline`` unconditional prediction.

    The baseline must be estimated on data independent of ``eval_set``, and
    ``eval_set`` must be disjoint from any training data behind ``cond``.
    """
    if baseline.dim != functional.prediction_dim:
        raise ValueError(
            f"baseline has {baseline.dim} components but functional "
            f"{functional.label()} needs {functional.prediction_dim}"
        )
    s_cond, s_base = _score_arrays(score, baseline, cond, eval_set)
    denominator = float(s_base.mean())
    if denominator < _MIN_DENOMINATOR:
        raise ValueError(
            "uncertainty term vanishes; Assumption 1(iv) violated on this sample"
        )
    cond_mean = float(s_cond.mean())
    value = 1.0 - cond_mean / denominator
    m = eval_set.n
    ci = confidence_interval(s_cond, s_base) if m >= _MIN_CI_SAMPLE else None
    return SensitivityEstimate(
        value=value,
        numerator=denominator - cond_mean,
        denominator=denominator,
        ci90=ci,
        m=m,
    )


def interaction_information(xi_joint, xi_1, xi_2):
    """Information value of knowing two sets jointly beyond knowing each alone,
    clamped at zero."""
    return max(float(xi_joint) - float(xi_1) - float(xi_2), 0.0)


def _murphy_scan(score_for_param, grid, subsets, conds, eval_set, baseline):
    y = eval_set.response
    base_arr = baseline.as_array()
    pred_cache = {s: conds[s].predict(eval_set.factors) for s in subsets}
    curves = {s: np.full(len(grid), np.nan) for s in subsets}
    any_defined = False
    for j, param in enumerate(grid.values):
        score = score_for_param(param)
        s_base = evaluate_many(score, base_arr, y)
        denominator = float(s_base.mean())
        if denominator < _MIN_DENOMINATOR:
            continue
        any_defined = True
        for s in subsets:
            s_cond = evaluate_many(score, pred_cache[s], y)
            curves[s][j] = 1.0 - float(s_cond.mean()) / denominator
    if not any_defined:
        raise ValueError("all Murphy grid points are undefined (denominator ~ 0 everywhere)")
    return MurphyCurve(grid=grid, curves=curves)


def murphy_elementary(functional, grid, subsets, conds, eval_set, baseline):
    """Murphy diagram over the elementary-score parameter theta for the mean
    or VaR functional.  ``conds`` maps each subset to its ConditionalModel."""
    if grid.axis != "theta":
        raise ValueError("elementary Murphy diagrams need a theta grid")
    subsets = [tuple(sorted(int(i) for i in s)) for s in subsets]
    if functional.kind == "mean":
        make = ScoreSpec.elementary_mean
    elif functional.kind == "var":
        make = lambda th: ScoreSpec.elementary_var(th, functional.alpha)
    else:
        raise ValueError(f"elementary Murphy diagrams cover mean and var, not {functional.kind}")
    return _murphy_scan(make, grid, subsets, conds, eval_set, baseline)


def murphy_homogeneous(functional, grid, subsets, conds, eval_set, baseline):
    """Murphy diagram over the homogeneity degree b: Patton scores for the mean
    (piecewise-power Bregman scores when the response takes both signs, which
    restricts the grid to b > 1), b-homogeneous GPL scores for VaR."""
    if grid.axis != "b":
        raise ValueError("homogeneous Murphy diagrams need a b grid")
    subsets = [tuple(sorted(int(i) for i in s)) for s in subsets]
    y = eval_set.response
    if functional.kind == "mean":
        if y.min() > 0.0:
            make = ScoreSpec.patton
        else:
            bad = grid.values[grid.values <= 1.0]
            if bad.size:
                raise ValueError(
                    "response takes non-positive values, so no b-homogeneous "
                    f"consistent mean score exists for b <= 1 (grid has "
                    f"b in [{bad.min():g}, {bad.max():g}]); restrict the grid to b > 1"
                )
            make = lambda b: ScoreSpec.bregman(
                _pp_generator(b)
            )
    elif functional.kind == "var":
        if y.min() <= 0.0:
            bad = grid.values[grid.values <= 0.0]
            if bad.size:
                raise ValueError(
                    "response takes non-positive values, so b-homogeneous VaR "
                    f"scores with b <= 0 are unavailable (grid has b in "
                    f"[{bad.min():g}, {bad.max():g}]); restrict the grid to b > 0"
                )
        make = lambda b: ScoreSpec.var_homogeneous(b, functional.alpha)
    else:
        raise ValueError(f"homogeneous Murphy diagrams cover mean and var, not {functional.kind}")
    return _murphy_scan(make, grid, subsets, conds, eval_set, baseline)


def _pp_generator(b):
    from .scores import convex_generator

    return convex_generator("piecewise-power", b=b)


def dominance_check(curve_a, curve_b, tol):
    """Pointwise dominance verdict over the commonly defined grid points;
    ties count as A-dominates."""
    a = np.asarray(curve_a, dtype=float)
    b = np.asarray(curve_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("curves must be aligned on the same grid")
    both = np.isfinite(a) & np.isfinite(b)
    if not both.any():
        raise ValueError("curves share no commonly defined grid points")
    a, b = a[both], b[both]
    if np.all(a >= b - tol):
        return "A-dominates"
    if np.all(b >= a - tol):
        return "B-dominates"
    return "crossing"
