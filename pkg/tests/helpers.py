"""Shared oracle machinery for the test suite: weighted-discrete population
functionals, rational discrete distributions, expected-score grid minimisers,
exact enumerated models, and brute-force conditional estimates."""

import numpy as np
from scipy.optimize import brentq

from scoresens import (
    ConditionalModel,
    FunctionalSpec,
    Prediction,
    SampleSet,
    empirical_functional,
    evaluate_many,
)
from scoresens.models import ConditionalRule

GRID_STEP = 1e-3


# ---------------------------------------------------------------------------
# weighted-discrete population functionals (independent of the library path)


def pop_mean(atoms, probs):
    return float(probs @ atoms)


def pop_var_quantile(atoms, probs, alpha):
    order = np.argsort(atoms)
    a, p = atoms[order], probs[order]
    cum = np.cumsum(p)
    return float(a[np.searchsorted(cum, alpha)])


def pop_es(atoms, probs, alpha):
    q = pop_var_quantile(atoms, probs, alpha)
    above = atoms > q
    tail = float(probs[above] @ atoms[above])
    p_above = float(probs[above].sum())
    return (tail + q * (1.0 - alpha - p_above)) / (1.0 - alpha)


def pop_expectile(atoms, probs, tau):
    lo, hi = float(atoms.min()), float(atoms.max())
    if hi == lo:
        return lo

    def foc(z):
        return tau * probs @ np.maximum(atoms - z, 0.0) - (1.0 - tau) * probs @ np.maximum(z - atoms, 0.0)

    return float(brentq(foc, lo, hi, xtol=1e-14))


def pop_entropic(atoms, probs, gamma):
    return float(np.log(probs @ np.exp(gamma * atoms)) / gamma)


def pop_mode(atoms, probs):
    return float(atoms[np.argmax(probs)])


def pop_rvar(atoms, probs, alpha, beta):
    order = np.argsort(atoms)
    a, p = atoms[order], probs[order]
    edges = np.concatenate([[0.0], np.cumsum(p)])
    width = np.clip(np.minimum(edges[1:], beta) - np.maximum(edges[:-1], alpha), 0.0, None)
    return float(width @ a) / (beta - alpha)


def pop_functional(spec, atoms, probs):
    kind = spec.kind
    if kind == "mean":
        return (pop_mean(atoms, probs),)
    if kind == "var":
        return (pop_var_quantile(atoms, probs, spec.alpha),)
    if kind == "var-es":
        return (pop_var_quantile(atoms, probs, spec.alpha), pop_es(atoms, probs, spec.alpha))
    if kind == "expectile":
        return (pop_expectile(atoms, probs, spec.tau),)
    if kind == "mode":
        return (pop_mode(atoms, probs),)
    if kind == "entropic":
        return (pop_entropic(atoms, probs, spec.gamma),)
    if kind == "mean-variance":
        m = pop_mean(atoms, probs)
        return (m, float(probs @ (atoms - m) ** 2))
    if kind == "rvar":
        return (
            pop_var_quantile(atoms, probs, spec.alpha),
            pop_var_quantile(atoms, probs, spec.beta),
            pop_rvar(atoms, probs, spec.alpha, spec.beta),
        )
    raise AssertionError(kind)


# ---------------------------------------------------------------------------
# randomized discrete distributions with lattice atoms and rational weights


def random_discrete(rng, max_atoms=6, lo=0.05, hi=1.5, denom=48, unique_mode=False):
    """Atoms on the 1e-3 lattice in [lo, hi]; probabilities k/denom.  Returns
    (atoms, probs, expanded_sample) where the expanded sample realises the
    distribution exactly by repetition."""
    n = int(rng.integers(2, max_atoms + 1))
    lattice_lo = int(round(lo / GRID_STEP))
    lattice_hi = int(round(hi / GRID_STEP))
    while True:
        idx = rng.choice(np.arange(lattice_lo, lattice_hi + 1), size=n, replace=False)
        atoms = np.sort(idx) * GRID_STEP
        counts = rng.multinomial(denom - n, np.full(n, 1.0 / n)) + 1
        if unique_mode and (counts == counts.max()).sum() > 1:
            continue
        probs = counts / denom
        expanded = np.repeat(atoms, counts)
        return atoms, probs, expanded


def expected_score(score, atoms, probs, z):
    """Exact expected score at prediction(s) z by enumeration over atoms."""
    z = np.asarray(z, dtype=float)
    rows = z.shape[0] if z.ndim > 1 else (z.shape[0] if score.prediction_dim == 1 else 1)
    if score.prediction_dim > 1 and z.ndim == 1:
        rows = 1
    total = np.zeros(rows)
    for y, p in zip(atoms, probs):
        total += p * evaluate_many(score, z, np.full(rows, y))
    return total


def lattice_grid(lo, hi, step=GRID_STEP):
    """Grid of exact lattice multiples covering [lo, hi]."""
    return np.arange(int(round(lo / step)), int(round(hi / step)) + 1) * step


def argmin_expected_scalar(score, atoms, probs, grid):
    return float(grid[np.argmin(expected_score(score, atoms, probs, grid))])


def argmin_expected_2d(score, atoms, probs, grid1, grid2):
    """Brute-force argmin over a 2-component prediction grid."""
    z1, z2 = np.meshgrid(grid1, grid2, indexing="ij")
    flat = np.column_stack([z1.ravel(), z2.ravel()])
    values = expected_score(score, atoms, probs, flat).reshape(z1.shape)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    return float(grid1[i]), float(grid2[j])


def argmin_expected_rvar(score, atoms, probs, grid1, grid2, grid3):
    """Exact grid argmin for the rvar triplet using the conditional additivity
    of the expected score in (z1, z2) given z3."""
    ref1 = float(np.median(grid1))
    ref2 = float(np.median(grid2))

    def table(ga, gb, fixed, slot_a, slot_b, slot_fixed):
        za, zb = np.meshgrid(ga, gb, indexing="ij")
        cols = [None, None, None]
        cols[slot_a] = za.ravel()
        cols[slot_b] = zb.ravel()
        cols[slot_fixed] = np.full(za.size, fixed)
        flat = np.column_stack(cols)
        return expected_score(score, atoms, probs, flat).reshape(za.shape)

    # E(z1, ref2, z3), E(ref1, z2, z3), E(ref1, ref2, z3)
    e1 = table(grid1, grid3, ref2, 0, 2, 1)
    e2 = table(grid2, grid3, ref1, 1, 2, 0)
    mid = expected_score(
        score,
        atoms,
        probs,
        np.column_stack([
            np.full(grid3.size, ref1),
            np.full(grid3.size, ref2),
            grid3,
        ]),
    )
    total = e1.min(axis=0) + e2.min(axis=0) - mid
    k = int(np.argmin(total))
    i = int(np.argmin(e1[:, k]))
    j = int(np.argmin(e2[:, k]))
    return float(grid1[i]), float(grid2[j]), float(grid3[k])


# ---------------------------------------------------------------------------
# exact enumerated product models (full enumeration, no sampling)


def expand_product(atom_lists, count_lists, aggregate):
    """Expanded factor matrix for independent discrete factors with rational
    weights count/denominator, every joint combination repeated exactly."""
    grids = np.meshgrid(*[np.repeat(a, c) for a, c in zip(atom_lists, count_lists)], indexing="ij")
    factors = np.column_stack([g.ravel() for g in grids])
    response = aggregate(factors)
    return factors, np.asarray(response, dtype=float)


def exact_conditional(functional, subset, factors, response):
    """Exact conditional-functional rule on an enumerated sample: group rows by
    the conditioning columns and evaluate the functional per group."""
    cols = [i - 1 for i in subset]
    keys = [tuple(row) for row in factors[:, cols]]
    table = {}
    for key in set(keys):
        mask = np.array([k == key for k in keys])
        table[key] = empirical_functional(functional, response[mask]).values

    dim = functional.prediction_dim

    def fn(x_sub):
        out = np.empty((x_sub.shape[0], dim))
        for r, row in enumerate(x_sub):
            out[r] = table[tuple(row)]
        return out

    return ConditionalModel.from_rule(
        ConditionalRule(functional=functional, subset=tuple(subset), fn=fn)
    )


def enumerated_sample_set(factors, response):
    return SampleSet(factors=factors, response=response, seed=0, model_id="enumerated")


def exact_xi(score, functional, factors, response, cond):
    """Exact sensitivity by full enumeration on an expanded sample."""
    baseline = empirical_functional(functional, response)
    s_cond = evaluate_many(score, cond.predict(factors), response)
    s_base = evaluate_many(score, baseline.as_array(), response)
    return 1.0 - float(s_cond.mean()) / float(s_base.mean())


# ---------------------------------------------------------------------------
# brute-force conditional oracle (Monte Carlo, batched standard errors)


def brute_conditional_check(model, functional, subset, x_values, rng, n=1_000_000, blocks=10):
    """For each conditioning point, estimate the conditional functional by
    simulating the complementary factors and compare against the registered
    rule within 3 batch-mean standard errors.  Returns (rule values, MC means,
    MC standard errors)."""
    from scoresens.simulation import sample_factors

    subset = tuple(sorted(subset))
    cols = [i - 1 for i in subset]
    other = [j for j in range(model.n_factors) if j not in cols]
    rule = model.conditional_rule(functional, subset)

    # complementary draws; their law must not depend on x_I
    if model.model_id == "normal-sum":
        # X2 | X1 = x is N(rho x, 1 - rho^2): reuse one standard normal block
        z = np.random.Generator(np.random.Philox(int(rng.integers(2 ** 63)))).standard_normal(n)
        rho = model.rho

        def complement(x_row):
            return (rho * x_row[0] + np.sqrt(1.0 - rho ** 2) * z)[:, None]

    else:
        marginals = [model.marginals[j] for j in other]
        base = sample_factors(marginals, None, n, int(rng.integers(2 ** 63)))
        shifts = model.factor_shifts
        if shifts is not None:
            base = base + np.asarray([shifts[j] for j in other])

        def complement(x_row):
            return base

    x_values = np.atleast_2d(np.asarray(x_values, dtype=float))
    rule_vals = rule.predict(x_values)
    mc_means = np.empty_like(rule_vals)
    mc_ses = np.empty_like(rule_vals)
    block = n // blocks
    for r, x_row in enumerate(x_values):
        full = np.empty((n, model.n_factors))
        full[:, cols] = x_row
        full[:, other] = complement(x_row)
        y = model.aggregate_rows(full)
        per_block = np.array([
            empirical_functional(functional, y[b * block:(b + 1) * block]).values
            for b in range(blocks)
        ])
        mc_means[r] = per_block.mean(axis=0)
        mc_ses[r] = per_block.std(axis=0, ddof=1) / np.sqrt(blocks)
    return rule_vals, mc_means, mc_ses


def gauss_legendre_expectation(fn, n_dims, nodes=80):
    """Tensor-product Gauss-Legendre expectation over independent U[-pi, pi]
    coordinates of a vectorised function of an (M, n_dims) matrix."""
    u, w = np.polynomial.legendre.leggauss(nodes)
    pts = np.pi * u
    wts = w / 2.0
    grids = np.meshgrid(*([pts] * n_dims), indexing="ij")
    wgrids = np.meshgrid(*([wts] * n_dims), indexing="ij")
    x = np.column_stack([g.ravel() for g in grids])
    weight = np.prod(np.column_stack([wg.ravel() for wg in wgrids]), axis=1)
    return float(weight @ fn(x))
