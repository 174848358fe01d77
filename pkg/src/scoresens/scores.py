"""Scoring-function families: Bregman, GPL, homogeneous, elementary, and joint scores.

All families are normalised so that a point-mass prediction scores zero on its
own outcome, and every score is non-negative on its domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeneratorSpec",
    "convex_generator",
    "increasing_generator",
    "ScoreSpec",
    "MurphyGrid",
    "evaluate",
    "evaluate_many",
    "mixture_weight_check",
    "murphy_grid_default",
]

_EXP_MAX = math.log(np.finfo(float).max)

_CONVEX_KINDS = ("square", "patton", "neg-log", "neg-entropy", "piecewise-power", "pseudo-huber")
_INCREASING_KINDS = ("identity", "power", "log", "neg-power")


@dataclass(frozen=True)
class GeneratorSpec:
    """A named generator function: convex phi or increasing g, with closed-form
    derivative/subgradient.  The registry is closed so domain checks and
    derivatives are always available."""

    kind: str
    role: str  # "convex" | "increasing"
    b: float | None = None
    d1: float | None = None
    d2: float | None = None
    d: float | None = None
    c: float | None = None

    @property
    def domain_positive(self):
        if self.role == "convex":
            return self.kind in ("patton", "neg-log", "neg-entropy")
        if self.kind in ("log", "neg-power"):
            return True
        return False  # identity; power(b > 0) is defined on all reals

    def value(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "square":
            return t * t
        if k == "patton":
            return t ** self.b / (self.b * (self.b - 1.0))
        if k == "neg-log":
            return -np.log(t)
        if k == "neg-entropy":
            return t * np.log(t)
        if k == "piecewise-power":
            at = np.abs(t) ** self.b
            return np.where(t > 0, self.d1 * at, np.where(t < 0, self.d2 * at, 0.0))
        if k == "pseudo-huber":
            return self.c * np.sqrt(1.0 + t * t)
        if k == "identity":
            return t
        if k == "power":
            if self.b > 0:
                at = np.abs(t) ** self.b
                return np.where(t > 0, at, np.where(t < 0, -self.d * at, 0.0))
            if self.b == 0:
                return np.log(t)
            return -(t ** self.b)
        if k == "log":
            return np.log(t)
        if k == "neg-power":
            return -(t ** self.b)
        raise AssertionError(k)

    def deriv(self, t):
        """Derivative (subgradient for the convex role), elementwise."""
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "square":
            return 2.0 * t
        if k == "patton":
            return t ** (self.b - 1.0) / (self.b - 1.0)
        if k == "neg-log":
            return -1.0 / t
        if k == "neg-entropy":
            return np.log(t) + 1.0
        if k == "piecewise-power":
            at = np.abs(t) ** (self.b - 1.0)
            return self.b * np.where(t > 0, self.d1 * at, np.where(t < 0, -self.d2 * at, 0.0))
        if k == "pseudo-huber":
            return self.c * t / np.sqrt(1.0 + t * t)
        if k == "identity":
            return np.ones_like(t)
        if k == "power":
            if self.b > 0:
                at = np.abs(t) ** (self.b - 1.0)
                return self.b * np.where(t > 0, at, np.where(t < 0, self.d * at, at))
            if self.b == 0:
                return 1.0 / t
            return -self.b * t ** (self.b - 1.0)
        if k == "log":
            return 1.0 / t
        if k == "neg-power":
            return -self.b * t ** (self.b - 1.0)
        raise AssertionError(k)

    def label(self):
        k = self.kind
        if k in ("patton", "neg-power"):
            return f"{k}({self.b:g})"
        if k == "piecewise-power":
            return f"piecewise-power({self.b:g},{self.d1:g},{self.d2:g})"
        if k == "pseudo-huber":
            return f"pseudo-huber({self.c:g})"
        if k == "power":
            return f"power({self.b:g},{self.d:g})"
        return k


def convex_generator(kind, b=None, d1=1.0, d2=1.0, c=None):
    """Build a registered convex generator phi."""
    if kind not in _CONVEX_KINDS:
        raise ValueError(f"unknown convex generator {kind!r}; known: {_CONVEX_KINDS}")
    if kind == "patton":
        if b is None or b in (0.0, 1.0):
            raise ValueError("patton generator requires b outside {0, 1}")
        return GeneratorSpec("patton", "convex", b=float(b))
    if kind == "piecewise-power":
        if b is None or b <= 1.0:
            raise ValueError("piecewise-power generator requires b > 1")
        if d1 <= 0 or d2 <= 0:
            raise ValueError("piecewise-power generator requires d1, d2 > 0")
        return GeneratorSpec("piecewise-power", "convex", b=float(b), d1=float(d1), d2=float(d2))
    if kind == "pseudo-huber":
        if c is None or c <= 0:
            raise ValueError("pseudo-huber generator requires c > 0")
        return GeneratorSpec("pseudo-huber", "convex", c=float(c))
    return GeneratorSpec(kind, "convex")


def increasing_generator(kind, b=None, d=1.0):
    """Build a registered increasing generator g."""
    if kind not in _INCREASING_KINDS:
        raise ValueError(f"unknown increasing generator {kind!r}; known: {_INCREASING_KINDS}")
    if kind == "power":
        if b is None:
            raise ValueError("power generator requires b")
        if b <= 0:
            raise ValueError("power generator requires b > 0; use log (b = 0) or neg-power (b < 0)")
        if d <= 0:
            raise ValueError("power generator requires d > 0")
        return GeneratorSpec("power", "increasing", b=float(b), d=float(d))
    if kind == "neg-power":
        if b is None or b >= 0:
            raise ValueError("neg-power generator requires b < 0")
        return GeneratorSpec("neg-power", "increasing", b=float(b))
    return GeneratorSpec(kind, "increasing")


_FAMILIES = (
    "bregman",
    "gpl",
    "patton",
    "var-homogeneous",
    "elementary-mean",
    "elementary-var",
    "joint-var-es",
    "zero-hom-var-es",
    "expectile",
    "entropic",
    "mean-variance",
    "zero-one",
    "rvar-triplet",
)


def _is_even_integer_ge2(b):
    return float(b).is_integer() and int(b) >= 2 and int(b) % 2 == 0


@dataclass(frozen=True)
class ScoreSpec:
    """Tagged descriptor of a scoring-function family plus its parameters."""

    family: str
    alpha: float | None = None
    beta: float | None = None
    tau: float | None = None
    gamma: float | None = None
    theta: float | None = None
    b: float | None = None
    d: float | None = None
    phi: GeneratorSpec | None = None
    g: GeneratorSpec | None = None
    g2: GeneratorSpec | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown score family {self.family!r}; known: {_FAMILIES}")

    # -- constructors --------------------------------------------------

    @classmethod
    def bregman(cls, phi):
        _require_role(phi, "convex")
        return cls("bregman", phi=phi)

    @classmethod
    def gpl(cls, g, alpha):
        _require_role(g, "increasing")
        _require_level(alpha, "alpha")
        return cls("gpl", g=g, alpha=float(alpha))

    @classmethod
    def patton(cls, b):
        return cls("patton", b=float(b))

    @classmethod
    def var_homogeneous(cls, b, alpha, d=1.0):
        _require_level(alpha, "alpha")
        if d <= 0:
            raise ValueError(f"var-homogeneous requires d > 0, got {d}")
        return cls("var-homogeneous", b=float(b), alpha=float(alpha), d=float(d))

    @classmethod
    def elementary_mean(cls, theta):
        return cls("elementary-mean", theta=float(theta))

    @classmethod
    def elementary_var(cls, theta, alpha):
        _require_level(alpha, "alpha")
        return cls("elementary-var", theta=float(theta), alpha=float(alpha))

    @classmethod
    def joint_var_es(cls, g, phi, alpha):
        _require_role(g, "increasing")
        _require_role(phi, "convex")
        _require_level(alpha, "alpha")
        # registered pairs: phi' < 0 everywhere makes
        # z1 -> g(z1) - z1 phi'(z2)/(1 - alpha) strictly increasing
        if phi.kind != "neg-log":
            raise ValueError(
                "joint-var-es is registered only for phi = neg-log (negative "
                f"subgradient); got phi = {phi.label()}"
            )
        return cls("joint-var-es", g=g, phi=phi, alpha=float(alpha))

    @classmethod
    def zero_hom_var_es(cls, alpha):
        _require_level(alpha, "alpha")
        return cls("zero-hom-var-es", alpha=float(alpha))

    @classmethod
    def expectile(cls, tau, phi):
        _require_role(phi, "convex")
        _require_level(tau, "tau")
        return cls("expectile", tau=float(tau), phi=phi)

    @classmethod
    def entropic(cls, gamma, phi):
        _require_role(phi, "convex")
        if gamma <= 0:
            raise ValueError(f"entropic requires gamma > 0, got {gamma}")
        return cls("entropic", gamma=float(gamma), phi=phi)

    @classmethod
    def mean_variance(cls, phi2="quadratic"):
        if phi2 != "quadratic":
            raise ValueError(f"unknown mean-variance generator {phi2!r}; known: quadratic")
        return cls("mean-variance")

    @classmethod
    def zero_one(cls):
        return cls("zero-one")

    @classmethod
    def rvar_triplet(cls, g1, g2, phi, alpha, beta):
        _require_role(g1, "increasing")
        _require_role(g2, "increasing")
        _require_role(phi, "convex")
        if not 0.0 < alpha < beta < 1.0:
            raise ValueError(f"rvar-triplet requires 0 < alpha < beta < 1, got ({alpha}, {beta})")
        # registered combo: identity g's with a bounded-slope convex phi,
        # |phi'| <= c <= beta - alpha keeps both coupling maps increasing
        if g1.kind != "identity" or g2.kind != "identity":
            raise ValueError("rvar-triplet is registered only for g1 = g2 = identity")
        if phi.kind != "pseudo-huber" or phi.c > beta - alpha:
            raise ValueError(
                "rvar-triplet is registered only for phi = pseudo-huber(c) with "
                f"c <= beta - alpha = {beta - alpha:g}"
            )
        return cls("rvar-triplet", g=g1, g2=g2, phi=phi, alpha=float(alpha), beta=float(beta))

    # -- descriptors ---------------------------------------------------

    @property
    def prediction_dim(self):
        if self.family in ("joint-var-es", "zero-hom-var-es", "mean-variance"):
            return 2
        if self.family == "rvar-triplet":
            return 3
        return 1

    @property
    def functional_kind(self):
        """Kind of the functional this score is consistent for."""
        return {
            "bregman": "mean",
            "patton": "mean",
            "elementary-mean": "mean",
            "gpl": "var",
            "var-homogeneous": "var",
            "elementary-var": "var",
            "joint-var-es": "var-es",
            "zero-hom-var-es": "var-es",
            "expectile": "expectile",
            "entropic": "entropic",
            "mean-variance": "mean-variance",
            "zero-one": "mode",
            "rvar-triplet": "rvar",
        }[self.family]

    def label(self):
        f = self.family
        if f == "bregman":
            return f"bregman({self.phi.label()})"
        if f == "gpl":
            return f"gpl({self.g.label()},{self.alpha:g})"
        if f == "patton":
            return f"patton({self.b:g})"
        if f == "var-homogeneous":
            return f"var-homogeneous({self.b:g},{self.d:g},{self.alpha:g})"
        if f == "elementary-mean":
            return f"elementary-mean({self.theta:g})"
        if f == "elementary-var":
            return f"elementary-var({self.theta:g},{self.alpha:g})"
        if f == "joint-var-es":
            return f"joint-var-es({self.g.label()},{self.phi.label()},{self.alpha:g})"
        if f == "zero-hom-var-es":
            return f"zero-hom-var-es({self.alpha:g})"
        if f == "expectile":
            return f"expectile({self.tau:g},{self.phi.label()})"
        if f == "entropic":
            return f"entropic({self.gamma:g},{self.phi.label()})"
        if f == "rvar-triplet":
            return f"rvar-triplet({self.alpha:g},{self.beta:g})"
        return f


def _require_role(gen, role):
    if not isinstance(gen, GeneratorSpec) or gen.role != role:
        raise ValueError(f"expected a registered {role} generator, got {gen!r}")


def _require_level(level, name):
    if level is None or not 0.0 < level < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {level}")


def _require_positive(name, *arrays_with_names):
    for label, arr in arrays_with_names:
        if np.any(arr <= 0.0):
            raise ValueError(f"{name} requires {label} > 0")


def _bregman_kernel(phi, z, y):
    return phi.value(y) - phi.value(z) + phi.deriv(z) * (z - y)


def _var_hom_g(b, d):
    if b > 0:
        return increasing_generator("power", b=b, d=d)
    if b == 0:
        return increasing_generator("log")
    return increasing_generator("neg-power", b=b)


def _as_columns(spec, z, m):
    """Split predictions into per-component columns broadcast to length m."""
    z = np.asarray(z, dtype=float)
    k = spec.prediction_dim
    if k == 1:
        if z.ndim == 2 and z.shape[1] == 1:
            z = z[:, 0]
        if z.ndim > 1:
            raise ValueError(f"{spec.family} expects scalar predictions, got shape {z.shape}")
        return (np.broadcast_to(z, (m,)),)
    if z.ndim == 1:
        if z.shape[0] != k:
            raise ValueError(f"{spec.family} expects {k}-component predictions, got shape {z.shape}")
        return tuple(np.broadcast_to(z[j], (m,)) for j in range(k))
    if z.ndim != 2 or z.shape[1] != k:
        raise ValueError(f"{spec.family} expects {k}-component predictions, got shape {z.shape}")
    return tuple(np.broadcast_to(z[:, j], (m,)) for j in range(k))


def evaluate_many(spec, pred, y):
    """Vectorised score evaluation: one value per observation in ``y``."""
    if hasattr(pred, "values"):
        pred = pred.as_array()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = y.shape[0]
    f = spec.family

    if f == "bregman":
        (z,) = _as_columns(spec, pred, m)
        if spec.phi.domain_positive:
            _require_positive(f"bregman({spec.phi.label()})", ("z", z), ("y", y))
        return _bregman_kernel(spec.phi, z, y)

    if f == "gpl":
        (z,) = _as_columns(spec, pred, m)
        if spec.g.domain_positive:
            _require_positive(f"gpl({spec.g.label()})", ("z", z), ("y", y))
        ind = (y <= z).astype(float)
        return (ind - spec.alpha) * (spec.g.value(z) - spec.g.value(y))

    if f == "patton":
        (z,) = _as_columns(spec, pred, m)
        b = spec.b
        # the printed closed forms need z, y > 0 except when b is an even
        # integer >= 2, where t^b/(b(b-1)) stays convex on the whole line
        if not _is_even_integer_ge2(b):
            _require_positive(f"patton score with b = {b:g}", ("z", z), ("y", y))
        if b == 0.0:
            r = y / z
            return r - np.log(r) - 1.0
        if b == 1.0:
            return y * np.log(y / z) - (y - z)
        return (y ** b - z ** b) / (b * (b - 1.0)) - z ** (b - 1.0) / (b - 1.0) * (y - z)

    if f == "var-homogeneous":
        (z,) = _as_columns(spec, pred, m)
        g = _var_hom_g(spec.b, spec.d)
        if spec.b <= 0:
            _require_positive(f"var-homogeneous score with b = {spec.b:g}", ("z", z), ("y", y))
        ind = (y <= z).astype(float)
        return (ind - spec.alpha) * (g.value(z) - g.value(y))

    if f == "elementary-mean":
        (z,) = _as_columns(spec, pred, m)
        th = spec.theta
        hit = (np.minimum(z, y) <= th) & (th < np.maximum(z, y))
        return np.where(hit, np.abs(y - th), 0.0)

    if f == "elementary-var":
        (z,) = _as_columns(spec, pred, m)
        th = spec.theta
        over = (y <= th) & (th < z)
        under = (z <= th) & (th < y)
        return (1.0 - spec.alpha) * over + spec.alpha * under

    if f == "joint-var-es":
        z1, z2 = _as_columns(spec, pred, m)
        _require_positive("joint-var-es", ("z2", z2), ("y", y))
        if spec.g.domain_positive:
            _require_positive(f"joint-var-es with g = {spec.g.label()}", ("z1", z1),)
        a = spec.alpha
        ind = (y <= z1).astype(float)
        splus = (ind - a) * z1 + (1.0 - ind) * y
        core = (z2 * (1.0 - a) - splus) / (1.0 - a)
        gpart = (ind - a) * (spec.g.value(z1) - spec.g.value(y))
        return gpart + spec.phi.deriv(z2) * core - spec.phi.value(z2) + spec.phi.value(y)

    if f == "zero-hom-var-es":
        z1, z2 = _as_columns(spec, pred, m)
        _require_positive("zero-hom-var-es", ("z2", z2), ("y", y))
        a = spec.alpha
        ind = (y <= z1).astype(float)
        return (z1 * (ind - a) + y * (1.0 - ind)) / (z2 * (1.0 - a)) - 1.0 + np.log(z2 / y)

    if f == "expectile":
        (z,) = _as_columns(spec, pred, m)
        if spec.phi.domain_positive:
            _require_positive(f"expectile score with phi = {spec.phi.label()}", ("z", z), ("y", y))
        ind = (y <= z).astype(float)
        return np.abs(ind - spec.tau) * _bregman_kernel(spec.phi, z, y)

    if f == "entropic":
        (z,) = _as_columns(spec, pred, m)
        top = spec.gamma * max(float(z.max()), float(y.max()))
        if top > _EXP_MAX:
            raise ValueError(
                f"entropic score overflows: exp(gamma * t) not finite for gamma = {spec.gamma:g}"
            )
        return _bregman_kernel(spec.phi, np.exp(spec.gamma * z), np.exp(spec.gamma * y))

    if f == "mean-variance":
        z1, z2 = _as_columns(spec, pred, m)
        if np.any(z2 < 0.0):
            raise ValueError("mean-variance requires a non-negative variance component z2")
        # quadratic generator phi(u, v) = u^2 + v^2
        return (z1 - y) ** 2 + (z1 * z1 + z2 - y * y) ** 2

    if f == "zero-one":
        (z,) = _as_columns(spec, pred, m)
        return (z != y).astype(float)

    if f == "rvar-triplet":
        z1, z2, z3 = _as_columns(spec, pred, m)
        a, bt = spec.alpha, spec.beta
        ind1 = (y <= z1).astype(float)
        ind2 = (y <= z2).astype(float)
        g1part = (ind1 - a) * (spec.g.value(z1) - spec.g.value(y))
        g2part = (ind2 - bt) * (spec.g2.value(z2) - spec.g2.value(y))
        s_a = ind1 * (z1 - y) - a * z1
        s_b = ind2 * (z2 - y) - bt * z2
        span = bt - a
        core = (z3 * span + s_b - s_a) / span
        return g1part + g2part + spec.phi.deriv(z3) * core - spec.phi.value(z3) + spec.phi.value(y)

    raise AssertionError(f)


def evaluate(spec, pred, y):
    """Score a single prediction against a single observation."""
    return float(evaluate_many(spec, pred, np.asarray([y], dtype=float))[0])


@dataclass(frozen=True)
class MurphyGrid:
    """Grid of score parameters for a Murphy diagram: theta or homogeneity b."""

    axis: str
    values: np.ndarray

    def __post_init__(self):
        if self.axis not in ("theta", "b"):
            raise ValueError(f"Murphy grid axis must be 'theta' or 'b', got {self.axis!r}")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("Murphy grid must be a non-empty 1-d sequence")
        if not np.all(np.diff(v) > 0):
            raise ValueError("Murphy grid values must be strictly increasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def murphy_grid_default(axis, sample, family="var"):
    """Default Murphy grid: 201 thetas spanning the padded sample range, or 81
    homogeneity degrees on [-2, 6] (VaR families) / [0, 4] (Patton, positive data)."""
    if axis == "theta":
        sample = np.asarray(sample, dtype=float)
        lo, hi = float(sample.min()), float(sample.max())
        if hi <= lo:
            raise ValueError("cannot build a theta grid from a constant sample")
        pad = 0.01 * (hi - lo)
        return MurphyGrid("theta", np.linspace(lo - pad, hi + pad, 201))
    if axis == "b":
        if family in ("var", "var-homogeneous"):
            return MurphyGrid("b", np.linspace(-2.0, 6.0, 81))
        if family in ("mean", "patton"):
            return MurphyGrid("b", np.linspace(0.0, 4.0, 81))
        raise ValueError(f"unknown family {family!r} for the b axis")
    raise ValueError(f"unknown Murphy axis {axis!r}")


def _elementary_over_grid(spec, thetas, z, y):
    """Elementary scores of one (z, y) pair across a theta vector."""
    if spec.family == "bregman":
        lo, hi = min(z, y), max(z, y)
        return np.where((lo <= thetas) & (thetas < hi), np.abs(y - thetas), 0.0)
    a = spec.alpha
    over = (y <= thetas) & (thetas < z)
    under = (z <= thetas) & (thetas < y)
    return (1.0 - a) * over + a * under


def mixture_weight_check(spec, grid, z, y):
    """Residual of the elementary-mixture representation of a Bregman or GPL
    score at one (z, y), using the trapezoid discretisation of d(phi') or dg.

    The residual vanishes at rate O(mesh) as the grid refines.
    """
    if spec.family not in ("bregman", "gpl"):
        raise ValueError(f"mixture representation applies to bregman/gpl, not {spec.family}")
    if grid.axis != "theta":
        raise ValueError("mixture check needs a theta grid")
    z = float(z)
    y = float(y)
    lo, hi = min(z, y), max(z, y)
    t = grid.values
    if t[0] > lo or t[-1] < hi:
        raise ValueError(
            f"grid [{t[0]:g}, {t[-1]:g}] does not cover the interval [{lo:g}, {hi:g}]"
        )
    weight_fn = spec.phi.deriv if spec.family == "bregman" else spec.g.value
    s = _elementary_over_grid(spec, t, z, y)
    approx = float(0.5 * (s[1:] + s[:-1]) @ np.diff(weight_fn(t)))
    return abs(evaluate(spec, z, y) - approx)
