"""Multilayer perceptron trained by minimising consistent scoring losses, for
conditional VaR (pinball loss) and the joint conditional (VaR, ES) pair.

Inputs are standardised and the response is affinely rescaled with constants
estimated from a pilot sample; both transforms are stored on the net and
predictions are returned in natural units.  Rescaling cannot change the
estimand: VaR/ES are equivariant under increasing affine maps and the joint
score is 0-homogeneous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .simulation import derive_seed

__all__ = [
    "NetConfig",
    "TrainConfig",
    "TrainedNet",
    "forward",
    "loss_and_gradient",
    "train",
]

_PILOT_SIZE = 100_000
_FORMAT_NAME = "scoresens-mlp"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    """Architecture: SiLU hidden stack with a linear or softplus output head."""

    input_dim: int
    hidden_layers: int = 6
    width: int = 20
    output_head: str = "linear"  # "linear" | "positive"
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.hidden_layers < 1 or self.width < 1:
            raise ValueError("hidden_layers and width must be >= 1")
        if self.output_head not in ("linear", "positive"):
            raise ValueError(f"unknown output head {self.output_head!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Adam schedule over independently simulated mini-batches."""

    batch_size: int = 1000
    iterations: int = 10_000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if min(self.batch_size, self.iterations) < 1:
            raise ValueError("batch_size and iterations must be >= 1")
        if min(self.learning_rate, self.beta1, self.beta2, self.eps) <= 0:
            raise ValueError("learning rate, decay parameters, and stabiliser must be > 0")


def _silu(z):
    s = expit(z)
    return z * s, s


def _init_params(config, rng):
    dims = [config.input_dim] + [config.width] * config.hidden_layers + [1]
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(rng.uniform(-bound, bound, size=fan_out))
    return params


def _stack_forward(params, head, x):
    """Returns (output (B,), caches for backprop)."""
    a = x
    caches = []
    n_layers = len(params) // 2
    for i in range(n_layers - 1):
        w, b = params[2 * i], params[2 * i + 1]
        z = a @ w + b
        act, sig = _silu(z)
        caches.append((a, z, sig))
        a = act
    w, b = params[-2], params[-1]
    z_out = (a @ w + b)[:, 0]
    caches.append((a, z_out, None))
    if head == "positive":
        return np.logaddexp(0.0, z_out), caches
    return z_out, caches


def _stack_backward(params, head, caches, d_out):
    """Gradients of sum(d_out * output) with respect to the stack parameters."""
    a_last, z_out, _ = caches[-1]
    dz = d_out * expit(z_out) if head == "positive" else d_out
    grads = [None] * len(params)
    grads[-2] = a_last.T @ dz[:, None]
    grads[-1] = np.array([dz.sum()])
    da = dz[:, None] @ params[-2].T
    for i in range(len(caches) - 2, -1, -1):
        a_prev, z, sig = caches[i]
        dz_h = da * (sig * (1.0 + z * (1.0 - sig)))
        grads[2 * i] = a_prev.T @ dz_h
        grads[2 * i + 1] = dz_h.sum(axis=0)
        if i > 0:
            da = dz_h @ params[2 * i].T
    return grads


class TrainedNet:
    """A trained (or freshly initialised) network; in pair mode a second stack
    with a softplus head models the non-negative ES gap, so the ES output
    dominates the VaR output by construction."""

    def __init__(self, config, params, gap_params=None, x_mean=None, x_std=None,
                 y_shift=0.0, y_scale=1.0, loss_trace=None):
        self.config = config
        self.params = params
        self.gap_params = gap_params
        d = config.input_dim
        self.x_mean = np.zeros(d) if x_mean is None else np.asarray(x_mean, dtype=float)
        self.x_std = np.ones(d) if x_std is None else np.asarray(x_std, dtype=float)
        self.y_shift = float(y_shift)
        self.y_scale = float(y_scale)
        self.loss_trace = None if loss_trace is None else np.asarray(loss_trace, dtype=float)

    @property
    def pair_mode(self):
        return self.gap_params is not None

    @classmethod
    def initialise(cls, config, pair_mode=False):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=config.seed)))
        params = _init_params(config, rng)
        gap = _init_params(config, rng) if pair_mode else None
        return cls(config, params, gap)

    # -- evaluation ------------------------------------------------------

    def _internal_outputs(self, x_raw, with_caches=False):
        x = np.atleast_2d(np.asarray(x_raw, dtype=float))
        if x.shape[1] != self.config.input_dim:
            raise ValueError(
                f"net expects {self.config.input_dim} inputs, got {x.shape[1]}"
            )
        xs = (x - self.x_mean) / self.x_std
        out, caches = _stack_forward(self.params, self.config.output_head, xs)
        if not self.pair_mode:
            return (out, caches) if with_caches else out
        gap, gap_caches = _stack_forward(self.gap_params, "positive", xs)
        if with_caches:
            return (out, gap, caches, gap_caches)
        return out, gap

    def predict(self, x_raw):
        """Natural-unit predictions: (M,) quantiles, or (M, 2) [VaR, ES] pairs."""
        if self.pair_mode:
            g, gap = self._internal_outputs(x_raw)
            var_part = self.y_shift + self.y_scale * g
            return np.column_stack([var_part, self.y_shift + self.y_scale * (g + gap)])
        return self.y_shift + self.y_scale * self._internal_outputs(x_raw)

    # -- parameter vector ------------------------------------------------

    def _all_params(self):
        return self.params + (self.gap_params or [])

    def flat_params(self):
        return np.concatenate([p.ravel() for p in self._all_params()])

    def set_flat_params(self, flat):
        flat = np.asarray(flat, dtype=float)
        pos = 0
        for p in self._all_params():
            p[...] = flat[pos:pos + p.size].reshape(p.shape)
            pos += p.size
        if pos != flat.size:
            raise ValueError(f"parameter vector has {flat.size} entries, expected {pos}")

    # -- serialization -----------------------------------------------------

    def to_portable(self):
        doc = {
            "format": _FORMAT_NAME,
            "version": _FORMAT_VERSION,
            "config": {
                "input_dim": self.config.input_dim,
                "hidden_layers": self.config.hidden_layers,
                "width": self.config.width,
                "hidden_activation": "silu",
                "output_head": self.config.output_head,
                "seed": self.config.seed,
            },
            "standardize": {
                "x_mean": self.x_mean.tolist(),
                "x_std": self.x_std.tolist(),
                "y_shift": self.y_shift,
                "y_scale": self.y_scale,
            },
            "layers": _layers_doc(self.params),
            "gap_layers": _layers_doc(self.gap_params) if self.pair_mode else None,
        }
        return json.dumps(doc, indent=1)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_portable())

    @classmethod
    def from_portable(cls, text):
        doc = json.loads(text)
        if doc.get("format") != _FORMAT_NAME:
            raise ValueError(f"not a {_FORMAT_NAME} document")
        if doc.get("version") != _FORMAT_VERSION:
            raise ValueError(f"unsupported format version {doc.get('version')}")
        c = doc["config"]
        config = NetConfig(
            input_dim=c["input_dim"],
            hidden_layers=c["hidden_layers"],
            width=c["width"],
            output_head=c["output_head"],
            seed=c["seed"],
        )
        std = doc["standardize"]
        return cls(
            config,
            _layers_from_doc(doc["layers"]),
            gap_params=_layers_from_doc(doc["gap_layers"]) if doc.get("gap_layers") else None,
            x_mean=std["x_mean"],
            x_std=std["x_std"],
            y_shift=std["y_shift"],
            y_scale=std["y_scale"],
        )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_portable(fh.read())


def _layers_doc(params):
    return [
        {"w": params[2 * i].tolist(), "b": params[2 * i + 1].tolist()}
        for i in range(len(params) // 2)
    ]


def _layers_from_doc(layers):
    params = []
    for layer in layers:
        params.append(np.asarray(layer["w"], dtype=float))
        params.append(np.asarray(layer["b"], dtype=float))
    return params


def forward(net, x):
    """Feed-forward evaluation at a single input vector, in natural units."""
    from .functionals import Prediction

    out = net.predict(np.asarray(x, dtype=float)[None, :])
    return Prediction(tuple(np.atleast_1d(out[0])))


def _check_training_score(score, pair_mode):
    if score.family == "gpl":
        if score.g.kind != "identity":
            raise ValueError("quantile training uses the pinball loss: gpl with the identity g")
        if pair_mode:
            raise ValueError("the pinball loss trains a single-output net")
    elif score.family == "zero-hom-var-es":
        if not pair_mode:
            raise ValueError("the joint VaR-ES loss needs a net in pair mode")
    else:
        raise ValueError(
            f"training supports gpl(identity, alpha) and zero-hom-var-es(alpha), "
            f"not {score.family}"
        )


def _structured_loss_grads(net, x_raw, y_raw, score):
    _check_training_score(score, net.pair_mode)
    y = np.asarray(y_raw, dtype=float)
    b = y.shape[0]
    alpha = score.alpha
    ys = (y - net.y_shift) / net.y_scale

    if not net.pair_mode:
        out, caches = net._internal_outputs(x_raw, with_caches=True)
        ind = (ys <= out).astype(float)
        loss = float(((ind - alpha) * (out - ys)).mean())
        d_out = (ind - alpha) / b
        return loss, _stack_backward(net.params, net.config.output_head, caches, d_out), None

    g_out, gap_out, caches, gap_caches = net._internal_outputs(x_raw, with_caches=True)
    z1 = g_out
    z2 = g_out + gap_out
    bad = np.flatnonzero(ys <= 0.0)
    if bad.size:
        raise ValueError(
            f"joint VaR-ES loss needs strictly positive responses; observation "
            f"{bad[0]} has y = {y[bad[0]]:g}"
        )
    bad = np.flatnonzero(z2 <= 0.0)
    if bad.size:
        raise ValueError(
            f"joint VaR-ES loss needs a strictly positive ES output; observation "
            f"{bad[0]} has z2 = {z2[bad[0]]:g}"
        )
    ind = (ys <= z1).astype(float)
    one_minus = 1.0 - alpha
    num = z1 * (ind - alpha) + ys * (1.0 - ind)
    loss = float((num / (z2 * one_minus) - 1.0 + np.log(z2 / ys)).mean())
    ds_dz1 = (ind - alpha) / (z2 * one_minus)
    ds_dz2 = -num / (z2 ** 2 * one_minus) + 1.0 / z2
    d_g = (ds_dz1 + ds_dz2) / b
    d_gap = ds_dz2 / b
    grads = _stack_backward(net.params, net.config.output_head, caches, d_g)
    gap_grads = _stack_backward(net.gap_params, "positive", gap_caches, d_gap)
    return loss, grads, gap_grads


def loss_and_gradient(net, x_raw, y_raw, score):
    """Batch-mean scoring loss and its gradient as one flat vector (main stack
    parameters first, then the gap stack in pair mode)."""
    loss, grads, gap_grads = _structured_loss_grads(net, x_raw, y_raw, score)
    pieces = [g.ravel() for g in grads]
    if gap_grads is not None:
        pieces += [g.ravel() for g in gap_grads]
    return loss, np.concatenate(pieces)


class _Adam:
    def __init__(self, params, config):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.cfg = config

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        corr1 = 1.0 - c.beta1 ** self.t
        corr2 = 1.0 - c.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= c.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + c.eps)


def train(model, subset, score, net_config=None, train_config=None):
    """Fit the conditional functional of ``model``'s response given the factor
    ``subset`` by stochastic minimisation of ``score`` over independently
    simulated mini-batches (a fresh batch per iteration, never reused)."""
    train_config = train_config or TrainConfig()
    subset = tuple(sorted(int(i) for i in subset))
    cols = [i - 1 for i in subset]
    pair_mode = score.family == "zero-hom-var-es"
    if net_config is None:
        net_config = NetConfig(
            input_dim=len(subset),
            output_head="positive" if pair_mode else "linear",
            seed=derive_seed(train_config.seed, 0),
        )
    _check_training_score(score, pair_mode)

    pilot = model.sample(_PILOT_SIZE, derive_seed(train_config.seed, 1))
    x_pilot = pilot.factors[:, cols]
    y_pilot = pilot.response
    x_std = x_pilot.std(axis=0)
    x_std[x_std == 0.0] = 1.0
    if pair_mode:
        # scale only: the joint score is 0-homogeneous and needs y > 0
        y_shift, y_scale = 0.0, float(y_pilot.mean())
        if y_scale <= 0.0:
            raise ValueError("joint VaR-ES training needs a positive-mean response")
    else:
        y_shift = float(y_pilot.mean())
        y_scale = float(y_pilot.std()) or 1.0

    net = TrainedNet.initialise(net_config, pair_mode=pair_mode)
    net.x_mean = x_pilot.mean(axis=0)
    net.x_std = x_std
    net.y_shift = y_shift
    net.y_scale = y_scale

    all_params = net._all_params()
    opt = _Adam(all_params, train_config)
    trace = np.empty(train_config.iterations)
    for it in range(train_config.iterations):
        batch = model.sample(train_config.batch_size, derive_seed(train_config.seed, 2, it))
        loss, grads, gap_grads = _structured_loss_grads(
            net, batch.factors[:, cols], batch.response, score
        )
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged at iteration {it}: non-finite loss {loss!r}"
            )
        opt.step(all_params, grads + (gap_grads or []))
        trace[it] = loss
    net.loss_trace = trace
    return net
