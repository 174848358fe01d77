"""Configuration-driven experiment runner.

Subcommands: run | simulate | sensitivity | murphy | interaction | train | report.
Configs are JSON, validated against a published schema before any computation;
results are written as CSV files (10 significant digits) plus a run manifest,
with optional SVG renderings of Murphy curves.  Identical config and seed
produce byte-identical outputs.

Exit codes: 0 success, 2 config/schema violation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np
import jsonschema

from . import __version__
from .functionals import FunctionalSpec, empirical_functional
from .models import get_model
from .neural import NetConfig, TrainConfig, TrainedNet, train
from .scores import MurphyGrid, ScoreSpec, convex_generator, increasing_generator, murphy_grid_default
from .sensitivity import (
    ConditionalModel,
    estimate_sensitivity,
    interaction_information,
    murphy_elementary,
    murphy_homogeneous,
)
from .simulation import SampleSet, derive_seed

OUTPUT_DIR_ENV = "SCORESENS_OUTPUT_DIR"

_NUMBER = {"type": "number"}
_GENERATOR_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"type": "string"},
        "b": _NUMBER,
        "d": _NUMBER,
        "d1": _NUMBER,
        "d2": _NUMBER,
        "c": _NUMBER,
    },
    "additionalProperties": False,
}
_SUBSET_SCHEMA = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
    "minItems": 1,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "seed"],
    "properties": {
        "model": {
            "type": "object",
            "required": ["id"],
            "properties": {
                "id": {"type": "string"},
                "params": {"type": "object"},
            },
            "additionalProperties": False,
        },
        "functional": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {
                    "enum": ["mean", "var", "var-es", "expectile", "mode",
                             "entropic", "mean-variance", "rvar"],
                },
                "alpha": _NUMBER,
                "tau": _NUMBER,
                "gamma": _NUMBER,
                "beta": _NUMBER,
            },
            "additionalProperties": False,
        },
        "score": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"type": "string"},
                "alpha": _NUMBER,
                "beta": _NUMBER,
                "tau": _NUMBER,
                "gamma": _NUMBER,
                "theta": _NUMBER,
                "b": _NUMBER,
                "d": _NUMBER,
                "phi": _GENERATOR_SCHEMA,
                "g": _GENERATOR_SCHEMA,
                "g1": _GENERATOR_SCHEMA,
                "g2": _GENERATOR_SCHEMA,
            },
            "additionalProperties": False,
        },
        "murphy": {
            "type": "object",
            "required": ["axis"],
            "properties": {
                "axis": {"enum": ["theta", "b"]},
                "lo": _NUMBER,
                "hi": _NUMBER,
                "points": {"type": "integer", "minimum": 2},
                "values": {"type": "array", "items": _NUMBER, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "subsets": {"type": "array", "items": _SUBSET_SCHEMA, "minItems": 1},
        "subset": _SUBSET_SCHEMA,
        "interactions": {
            "type": "array",
            "items": {
                "type": "array",
                "items": _SUBSET_SCHEMA,
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "samples": {
            "type": "object",
            "properties": {
                "evaluation": {"type": "integer", "minimum": 1},
                "baseline": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "conditionals": {"enum": ["closed-form", "neural"]},
        "net": {
            "type": "object",
            "properties": {
                "hidden_layers": {"type": "integer", "minimum": 1},
                "width": {"type": "integer", "minimum": 1},
                "output_head": {"enum": ["linear", "positive"]},
            },
            "additionalProperties": False,
        },
        "train": {
            "type": "object",
            "properties": {
                "batch_size": {"type": "integer", "minimum": 1},
                "iterations": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "plots": {"type": "boolean"},
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    """Configuration rejected before any computation started."""


def load_config(path, seed_override=None, output_override=None):
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation at {exc.json_path}: {exc.message}") from exc
    if seed_override is not None:
        config["seed"] = seed_override
    if output_override is not None:
        config["output_dir"] = output_override
    config.setdefault("output_dir", os.environ.get(OUTPUT_DIR_ENV, "."))
    return config


def _build_model(config):
    spec = config["model"]
    try:
        return get_model(spec["id"], **spec.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _build_functional(config):
    spec = config.get("functional")
    if spec is None:
        raise ConfigError("this command needs a 'functional' section")
    kw = {k: v for k, v in spec.items() if k != "kind"}
    try:
        return FunctionalSpec(spec["kind"], **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"functional: {exc}") from exc


def _build_generator(spec, role):
    kw = {k: v for k, v in spec.items() if k != "kind"}
    if role == "convex":
        return convex_generator(spec["kind"], **kw)
    return increasing_generator(spec["kind"], **kw)


def _build_score(config, functional):
    spec = config.get("score")
    if spec is None:
        raise ConfigError("this command needs a 'score' section")
    spec = dict(spec)
    family = spec.pop("family")
    # level parameters default to the functional's
    for name in ("alpha", "tau", "gamma", "beta"):
        if name not in spec and getattr(functional, name, None) is not None:
            spec[name] = getattr(functional, name)
    try:
        if family == "bregman":
            return ScoreSpec.bregman(_build_generator(spec["phi"], "convex"))
        if family == "gpl":
            return ScoreSpec.gpl(_build_generator(spec["g"], "increasing"), spec["alpha"])
        if family == "patton":
            return ScoreSpec.patton(spec["b"])
        if family == "var-homogeneous":
            return ScoreSpec.var_homogeneous(spec["b"], spec["alpha"], spec.get("d", 1.0))
        if family == "elementary-mean":
            return ScoreSpec.elementary_mean(spec["theta"])
        if family == "elementary-var":
            return ScoreSpec.elementary_var(spec["theta"], spec["alpha"])
        if family == "joint-var-es":
            return ScoreSpec.joint_var_es(
                _build_generator(spec["g"], "increasing"),
                _build_generator(spec["phi"], "convex"),
                spec["alpha"],
            )
        if family == "zero-hom-var-es":
            return ScoreSpec.zero_hom_var_es(spec["alpha"])
        if family == "expectile":
            return ScoreSpec.expectile(spec["tau"], _build_generator(spec["phi"], "convex"))
        if family == "entropic":
            return ScoreSpec.entropic(spec["gamma"], _build_generator(spec["phi"], "convex"))
        if family == "mean-variance":
            return ScoreSpec.mean_variance()
        if family == "zero-one":
            return ScoreSpec.zero_one()
        if family == "rvar-triplet":
            return ScoreSpec.rvar_triplet(
                _build_generator(spec.get("g1", {"kind": "identity"}), "increasing"),
                _build_generator(spec.get("g2", {"kind": "identity"}), "increasing"),
                _build_generator(spec["phi"], "convex"),
                spec["alpha"],
                spec["beta"],
            )
        raise ConfigError(f"unknown score family {family!r}")
    except KeyError as exc:
        raise ConfigError(f"score: missing parameter {exc.args[0]!r} for family {family}") from exc
    except ValueError as exc:
        raise ConfigError(f"score: {exc}") from exc


def _subsets(config):
    subsets = config.get("subsets")
    if not subsets:
        raise ConfigError("this command needs a non-empty 'subsets' list")
    return [tuple(sorted(set(s))) for s in subsets]


def _fmt(x):
    return f"{x:.10g}"


def _subset_label(subset):
    return "+".join(str(i) for i in subset)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _conditional_models(config, model, functional, score, subsets):
    """One ConditionalModel per subset: closed-form rules or freshly trained nets."""
    mode = config.get("conditionals", "closed-form")
    seed = config["seed"]
    conds = {}
    if mode == "closed-form":
        for subset in subsets:
            conds[subset] = ConditionalModel.from_rule(model.conditional_rule(functional, subset))
        return conds
    net_cfg = config.get("net", {})
    train_cfg = config.get("train", {})
    if functional.kind == "var":
        train_score = ScoreSpec.gpl(increasing_generator("identity"), functional.alpha)
    elif functional.kind == "var-es":
        train_score = ScoreSpec.zero_hom_var_es(functional.alpha)
    else:
        raise ConfigError(
            f"neural conditionals are available for var and var-es, not {functional.kind}"
        )
    for idx, subset in enumerate(subsets):
        tc = TrainConfig(seed=derive_seed(seed, 12, idx), **train_cfg)
        nc = None
        if net_cfg:
            head = net_cfg.get("output_head", "positive" if functional.kind == "var-es" else "linear")
            nc = NetConfig(
                input_dim=len(subset),
                hidden_layers=net_cfg.get("hidden_layers", 6),
                width=net_cfg.get("width", 20),
                output_head=head,
                seed=derive_seed(seed, 13, idx),
            )
        net = train(model, subset, train_score, net_config=nc, train_config=tc)
        conds[subset] = ConditionalModel.from_net(net, subset)
    return conds


def _baseline_and_eval(config, model, functional):
    samples = config.get("samples", {})
    n_base = samples.get("baseline", 100_000)
    n_eval = samples.get("evaluation", 10_000)
    seed = config["seed"]
    base_set = model.sample(n_base, derive_seed(seed, 10))
    eval_set = model.sample(n_eval, derive_seed(seed, 11))
    baseline = empirical_functional(functional, base_set.response)
    return baseline, eval_set


def _murphy_grid(config, functional, eval_set):
    spec = config["murphy"]
    if "values" in spec:
        return MurphyGrid(spec["axis"], np.asarray(spec["values"], dtype=float))
    if "lo" in spec and "hi" in spec:
        return MurphyGrid(
            spec["axis"], np.linspace(spec["lo"], spec["hi"], spec.get("points", 81))
        )
    family = "mean" if functional.kind == "mean" else "var"
    return murphy_grid_default(spec["axis"], eval_set.response, family=family)


_SVG_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")


def _write_murphy_svg(path, curve):
    """Minimal deterministic SVG line plot of a Murphy curve."""
    width, height = 720, 480
    ml, mr, mt, mb = 60, 160, 20, 45
    x = curve.grid.values
    finite = [v[np.isfinite(v)] for v in curve.curves.values() if np.isfinite(v).any()]
    ymin = min((v.min() for v in finite), default=0.0)
    ymax = max((v.max() for v in finite), default=1.0)
    ylo, yhi = min(0.0, ymin), max(1.0, ymax)
    xlo, xhi = float(x[0]), float(x[-1])

    def sx(v):
        return ml + (v - xlo) / (xhi - xlo or 1.0) * (width - ml - mr)

    def sy(v):
        return height - mb - (v - ylo) / (yhi - ylo or 1.0) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
    ]
    for i in range(5):
        xv = xlo + (xhi - xlo) * i / 4
        yv = ylo + (yhi - ylo) * i / 4
        parts.append(
            f'<text x="{sx(xv):.2f}" y="{height - mb + 18}" font-size="11" '
            f'text-anchor="middle">{xv:.6g}</text>'
        )
        parts.append(
            f'<text x="{ml - 6}" y="{sy(yv):.2f}" font-size="11" '
            f'text-anchor="end">{yv:.6g}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) / 2:.2f}" y="{height - 8}" font-size="12" '
        f'text-anchor="middle">{curve.grid.axis}</text>'
    )
    for idx, (subset, values) in enumerate(curve.curves.items()):
        color = _SVG_PALETTE[idx % len(_SVG_PALETTE)]
        points = " ".join(
            f"{sx(xv):.2f},{sy(yv):.2f}"
            for xv, yv in zip(x, values)
            if np.isfinite(yv)
        )
        if points:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
            )
        ly = mt + 16 * (idx + 1)
        parts.append(
            f'<line x1="{width - mr + 10}" y1="{ly}" x2="{width - mr + 34}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - mr + 40}" y="{ly + 4}" font-size="12">X{{{_subset_label(subset)}}}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _write_manifest(outdir, config, outputs):
    manifest = {
        "package": "scoresens",
        "version": __version__,
        "numpy": np.__version__,
        "seed": config["seed"],
        "derived_seeds": {
            "baseline": derive_seed(config["seed"], 10),
            "evaluation": derive_seed(config["seed"], 11),
        },
        "config": {k: v for k, v in config.items() if k != "output_dir"},
        "outputs": sorted(outputs),
    }
    path = os.path.join(outdir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def write_sample_csv(path, sample_set):
    """SampleSet as CSV (x_1..x_n, y) with full-precision floats so re-ingestion
    is bit-exact."""
    n = sample_set.n_factors
    header = [f"x_{j + 1}" for j in range(n)] + ["y"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, y in zip(sample_set.factors, sample_set.response):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def read_sample_csv(path, seed=0, model_id="csv"):
    """Re-ingest a simulate CSV as an evaluation SampleSet."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    if data.shape[1] != len(header):
        raise ValueError(f"malformed sample CSV {path}")
    return SampleSet(factors=data[:, :-1], response=data[:, -1], seed=seed, model_id=model_id)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(config, outdir):
    model = _build_model(config)
    n = config.get("n")
    if n is None:
        raise ConfigError("simulate needs 'n'")
    sample = model.sample(n, config["seed"])
    path = os.path.join(outdir, "samples.csv")
    write_sample_csv(path, sample)
    return [path]


def _sensitivity_rows(config, model, functional, score, subsets, conds, baseline, eval_set):
    rows = []
    for subset in subsets:
        est = estimate_sensitivity(score, functional, baseline, conds[subset], eval_set)
        ci_lo, ci_hi = est.ci90 if est.ci90 is not None else ("", "")
        rows.append([
            model.model_id,
            functional.label(),
            score.label(),
            _subset_label(subset),
            _fmt(est.value),
            _fmt(ci_lo) if ci_lo != "" else "",
            _fmt(ci_hi) if ci_hi != "" else "",
            str(est.m),
        ])
    return rows


def cmd_sensitivity(config, outdir):
    model = _build_model(config)
    functional = _build_functional(config)
    score = _build_score(config, functional)
    subsets = _subsets(config)
    baseline, eval_set = _baseline_and_eval(config, model, functional)
    conds = _conditional_models(config, model, functional, score, subsets)
    rows = _sensitivity_rows(config, model, functional, score, subsets, conds, baseline, eval_set)
    path = os.path.join(outdir, "sensitivities.csv")
    _write_csv(
        path,
        ["model", "functional", "score", "subset", "estimate", "ci_lo", "ci_hi", "m"],
        rows,
    )
    return [path]


def cmd_murphy(config, outdir):
    model = _build_model(config)
    functional = _build_functional(config)
    if "murphy" not in config:
        raise ConfigError("this command needs a 'murphy' section")
    subsets = _subsets(config)
    baseline, eval_set = _baseline_and_eval(config, model, functional)
    conds = _conditional_models(config, model, functional, None, subsets)
    grid = _murphy_grid(config, functional, eval_set)
    if grid.axis == "theta":
        curve = murphy_elementary(functional, grid, subsets, conds, eval_set, baseline)
    else:
        curve = murphy_homogeneous(functional, grid, subsets, conds, eval_set, baseline)
    rows = []
    for subset in subsets:
        values = curve.curves[subset]
        for param, value in zip(grid.values, values):
            defined = bool(np.isfinite(value))
            rows.append([
                grid.axis,
                _fmt(param),
                _subset_label(subset),
                _fmt(value) if defined else "",
                "true" if defined else "false",
            ])
    path = os.path.join(outdir, "murphy.csv")
    _write_csv(path, ["axis", "param", "subset", "sensitivity", "defined"], rows)
    outputs = [path]
    if config.get("plots"):
        svg = os.path.join(outdir, "murphy.svg")
        _write_murphy_svg(svg, curve)
        outputs.append(svg)
    return outputs


def cmd_interaction(config, outdir):
    model = _build_model(config)
    functional = _build_functional(config)
    score = _build_score(config, functional)
    pairs = config.get("interactions")
    if not pairs:
        raise ConfigError("this command needs a non-empty 'interactions' list")
    pairs = [(tuple(sorted(set(a))), tuple(sorted(set(b)))) for a, b in pairs]
    needed = []
    for a, b in pairs:
        joint = tuple(sorted(set(a) | set(b)))
        for s in (a, b, joint):
            if s not in needed:
                needed.append(s)
    baseline, eval_set = _baseline_and_eval(config, model, functional)
    conds = _conditional_models(config, model, functional, score, needed)
    xi = {
        s: estimate_sensitivity(score, functional, baseline, conds[s], eval_set).value
        for s in needed
    }
    rows = []
    for a, b in pairs:
        joint = tuple(sorted(set(a) | set(b)))
        rows.append([
            _subset_label(a),
            _subset_label(b),
            _fmt(xi[joint]),
            _fmt(xi[a]),
            _fmt(xi[b]),
            _fmt(interaction_information(xi[joint], xi[a], xi[b])),
        ])
    path = os.path.join(outdir, "interactions.csv")
    _write_csv(
        path,
        ["subset_a", "subset_b", "xi_joint", "xi_a", "xi_b", "interaction"],
        rows,
    )
    return [path]


def cmd_train(config, outdir):
    model = _build_model(config)
    functional = _build_functional(config)
    subset = config.get("subset")
    if subset is None:
        raise ConfigError("train needs a 'subset'")
    subset = tuple(sorted(set(subset)))
    if functional.kind == "var":
        score = ScoreSpec.gpl(increasing_generator("identity"), functional.alpha)
    elif functional.kind == "var-es":
        score = ScoreSpec.zero_hom_var_es(functional.alpha)
    else:
        raise ConfigError(f"train supports var and var-es functionals, not {functional.kind}")
    tc = TrainConfig(seed=derive_seed(config["seed"], 12, 0), **config.get("train", {}))
    net_cfg = config.get("net", {})
    nc = None
    if net_cfg:
        head = net_cfg.get("output_head", "positive" if functional.kind == "var-es" else "linear")
        nc = NetConfig(
            input_dim=len(subset),
            hidden_layers=net_cfg.get("hidden_layers", 6),
            width=net_cfg.get("width", 20),
            output_head=head,
            seed=derive_seed(config["seed"], 13, 0),
        )
    net = train(model, subset, score, net_config=nc, train_config=tc)
    net_path = os.path.join(outdir, "net.json")
    net.save(net_path)
    trace_path = os.path.join(outdir, "loss_trace.csv")
    _write_csv(
        trace_path,
        ["iteration", "loss"],
        [[str(i), _fmt(v)] for i, v in enumerate(net.loss_trace)],
    )
    return [net_path, trace_path]


def cmd_run(config, outdir):
    outputs = []
    if "score" in config and "subsets" in config:
        outputs += cmd_sensitivity(config, outdir)
    if "murphy" in config:
        outputs += cmd_murphy(config, outdir)
    if "interactions" in config:
        outputs += cmd_interaction(config, outdir)
    if not outputs:
        raise ConfigError(
            "run needs at least one of: score+subsets, murphy, interactions"
        )
    return outputs


def cmd_report(outdir):
    lines = ["# Sensitivity run report", ""]
    sens = os.path.join(outdir, "sensitivities.csv")
    if os.path.exists(sens):
        with open(sens, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            lines.append(f"## Sensitivities ({rows[0]['model']}, {rows[0]['functional']}, "
                         f"{rows[0]['score']})")
            lines.append("")
            by_subset = {r["subset"]: r for r in rows}
            singles = sorted(
                int(s) for s in by_subset if "+" not in s
            )
            if singles and any("+" in s for s in by_subset):
                header = "| |" + "|".join(f" X{j} " for j in singles) + "|"
                sep = "|---" * (len(singles) + 1) + "|"
                lines += [header, sep]
                for i in singles:
                    cells = []
                    for j in singles:
                        key = _subset_label(tuple(sorted({i, j})))
                        cells.append(by_subset[key]["estimate"] if key in by_subset and j >= i else "")
                    lines.append(f"| X{i} |" + "|".join(f" {c} " for c in cells) + "|")
                lines.append("")
            lines.append("| subset | estimate | ci_lo | ci_hi | m |")
            lines.append("|---|---|---|---|---|")
            for r in rows:
                lines.append(
                    f"| {r['subset']} | {r['estimate']} | {r['ci_lo']} | {r['ci_hi']} | {r['m']} |"
                )
            lines.append("")
    inter = os.path.join(outdir, "interactions.csv")
    if os.path.exists(inter):
        with open(inter, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        lines.append("## Interaction information")
        lines.append("")
        lines.append("| subset_a | subset_b | xi_joint | xi_a | xi_b | interaction |")
        lines.append("|---|---|---|---|---|---|")
        for r in rows:
            lines.append(
                f"| {r['subset_a']} | {r['subset_b']} | {r['xi_joint']} | {r['xi_a']} "
                f"| {r['xi_b']} | {r['interaction']} |"
            )
        lines.append("")
    murph = os.path.join(outdir, "murphy.csv")
    if os.path.exists(murph):
        with open(murph, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        n_defined = sum(r["defined"] == "true" for r in rows)
        lines.append("## Murphy diagram")
        lines.append("")
        lines.append(f"{len(rows)} grid rows, {n_defined} defined; see murphy.csv"
                     + (" and murphy.svg" if os.path.exists(os.path.join(outdir, "murphy.svg")) else ""))
        lines.append("")
    path = os.path.join(outdir, "report.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    return [path]


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scoresens",
        description="Score-based sensitivity experiments from a JSON config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "simulate", "sensitivity", "murphy", "interaction", "train"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output-dir", default=None, help="override the output directory")
    p = sub.add_parser("report")
    p.add_argument("--output-dir", default=None, help="directory holding prior outputs")
    args = parser.parse_args(argv)

    if args.command == "report":
        outdir = args.output_dir or os.environ.get(OUTPUT_DIR_ENV, ".")
        for path in cmd_report(outdir):
            print(path)
        return 0

    try:
        config = load_config(args.config, args.seed, args.output_dir)
        outdir = config["output_dir"]
        # resolve referenced ids before creating or writing anything
        _build_model(config)
        os.makedirs(outdir, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    handler = {
        "run": cmd_run,
        "simulate": cmd_simulate,
        "sensitivity": cmd_sensitivity,
        "murphy": cmd_murphy,
        "interaction": cmd_interaction,
        "train": cmd_train,
    }[args.command]
    try:
        outputs = handler(config, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    outputs.append(_write_manifest(outdir, config, outputs))
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
