import numpy as np
import pytest

from scoresens import (
    FunctionalSpec,
    MurphyGrid,
    ScoreSpec,
    convex_generator,
    empirical_functional,
    evaluate,
    evaluate_many,
    increasing_generator,
    mixture_weight_check,
    murphy_grid_default,
)

import helpers


def _identity():
    return increasing_generator("identity")


def _square():
    return convex_generator("square")


def test_pinball_example():
    spec = ScoreSpec.gpl(_identity(), 0.9)
    assert evaluate(spec, 0.0, 1.0) == pytest.approx(0.9)


def test_patton_b2_reduces_to_half_squared_loss():
    spec = ScoreSpec.patton(2.0)
    assert evaluate(spec, 1.0, 3.0) == pytest.approx(2.0)
    # extends to the whole line only because t^2/2 is convex everywhere
    assert evaluate(spec, -1.0, 2.0) == pytest.approx(4.5)


def test_elementary_mean_example():
    spec = ScoreSpec.elementary_mean(1.0)
    assert evaluate(spec, 2.0, 0.0) == 1.0
    assert evaluate(spec, 2.0, 5.0) == 0.0  # theta outside [2, 5) start... inside? 1 < 2
    assert evaluate(ScoreSpec.elementary_mean(3.0), 2.0, 5.0) == 2.0


def test_zero_hom_var_es_vanishes_at_point_mass():
    spec = ScoreSpec.zero_hom_var_es(0.9)
    assert evaluate(spec, (5.0, 5.0), 5.0) == 0.0


def test_bregman_square_is_squared_error():
    rng = np.random.default_rng(3)
    spec = ScoreSpec.bregman(_square())
    for _ in range(20):
        z, y = rng.normal(size=2) * 3.0
        # hand expansion of the generic form with phi(t) = t^2
        assert evaluate(spec, z, y) == pytest.approx((z - y) ** 2, rel=1e-12, abs=1e-12)


def _point_mass_prediction(spec, y):
    k = spec.prediction_dim
    if spec.family == "mean-variance":
        return (y, 0.0)
    return (y,) * k


def _all_specs():
    return [
        ScoreSpec.bregman(_square()),
        ScoreSpec.bregman(convex_generator("neg-log")),
        ScoreSpec.bregman(convex_generator("neg-entropy")),
        ScoreSpec.bregman(convex_generator("piecewise-power", b=3.0, d1=2.0, d2=0.5)),
        ScoreSpec.gpl(_identity(), 0.7),
        ScoreSpec.gpl(increasing_generator("log"), 0.35),
        ScoreSpec.gpl(increasing_generator("power", b=2.0, d=1.5), 0.5),
        ScoreSpec.patton(0.0),
        ScoreSpec.patton(0.5),
        ScoreSpec.patton(1.0),
        ScoreSpec.patton(2.0),
        ScoreSpec.var_homogeneous(-1.0, 0.8),
        ScoreSpec.var_homogeneous(0.0, 0.6),
        ScoreSpec.var_homogeneous(1.5, 0.9),
        ScoreSpec.elementary_mean(0.8),
        ScoreSpec.elementary_var(0.8, 0.9),
        ScoreSpec.joint_var_es(_identity(), convex_generator("neg-log"), 0.85),
        ScoreSpec.zero_hom_var_es(0.9),
        ScoreSpec.expectile(0.3, _square()),
        ScoreSpec.entropic(1.0, _square()),
        ScoreSpec.mean_variance(),
        ScoreSpec.zero_one(),
        ScoreSpec.rvar_triplet(
            _identity(), _identity(), convex_generator("pseudo-huber", c=0.2), 0.3, 0.7
        ),
    ]


@pytest.mark.parametrize("spec", _all_specs(), ids=lambda s: s.label())
def test_point_mass_normalization(spec):
    rng = np.random.default_rng(11)
    for y in rng.uniform(0.2, 3.0, size=25):
        s = evaluate(spec, _point_mass_prediction(spec, y), y)
        if spec.family == "rvar-triplet":
            # float re-association residue only; every other family is exact
            assert abs(s) < 1e-13
        else:
            assert s == 0.0


@pytest.mark.parametrize("spec", _all_specs(), ids=lambda s: s.label())
def test_non_negativity_on_random_pairs(spec):
    rng = np.random.default_rng(12)
    m = 1000
    y = rng.uniform(0.2, 3.0, size=m)
    k = spec.prediction_dim
    if k == 1:
        preds = rng.uniform(0.2, 3.0, size=m)
    else:
        cols = [rng.uniform(0.2, 3.0, size=m) for _ in range(k)]
        if spec.family in ("joint-var-es", "zero-hom-var-es"):
            cols[1] = cols[0] + rng.uniform(0.0, 1.0, size=m)  # ES above VaR
        preds = np.column_stack(cols)
    s = evaluate_many(spec, preds, y)
    assert np.all(s >= 0.0)
    assert np.all(np.isfinite(s))


def test_homogeneity_of_patton_and_var_scores():
    rng = np.random.default_rng(13)
    for b in (0.0, 0.5, 1.0, 2.0, 3.0):
        spec = ScoreSpec.patton(b)
        for _ in range(20):
            z, y = rng.uniform(0.3, 4.0, size=2)
            base = evaluate(spec, z, y)
            for c in (0.5, 2.0, 10.0):
                scaled = evaluate(spec, c * z, c * y)
                assert scaled == pytest.approx(c ** b * base, rel=1e-12)
    for b in (-1.0, 0.0, 0.5, 1.0, 2.0):
        spec = ScoreSpec.var_homogeneous(b, 0.8, d=2.0)
        for _ in range(20):
            z, y = rng.uniform(0.3, 4.0, size=2)
            base = evaluate(spec, z, y)
            for c in (0.5, 2.0, 10.0):
                scaled = evaluate(spec, c * z, c * y)
                assert scaled == pytest.approx(c ** b * base, rel=1e-12, abs=1e-15)


def test_var_homogeneous_negative_arguments_when_b_positive():
    # b > 0 scores live on the whole line via the sign-split g
    spec = ScoreSpec.var_homogeneous(2.0, 0.9, d=3.0)
    s = evaluate(spec, -1.0, -2.0)
    # g(-1) = -3, g(-2) = -12, indicator 1: (1 - 0.9) * (-3 + 12)
    assert s == pytest.approx(0.1 * 9.0)


def test_gpl_expected_score_identity():
    # exact expected pinball-type score at the true VaR equals
    # (1 - alpha) (ES_alpha(g(Y)) - E[g(Y)]) by enumeration
    rng = np.random.default_rng(14)
    for g in (_identity(), increasing_generator("log"), increasing_generator("power", b=2.0)):
        for _ in range(20):
            atoms, probs, expanded = helpers.random_discrete(rng)
            alpha = float(rng.uniform(0.1, 0.9))
            score = ScoreSpec.gpl(g, alpha)
            q = helpers.pop_var_quantile(atoms, probs, alpha)
            lhs = helpers.expected_score(score, atoms, probs, np.array([q]))[0]
            g_atoms = np.asarray(g.value(atoms))
            es_g = helpers.pop_es(g_atoms, probs, alpha)
            rhs = (1.0 - alpha) * (es_g - probs @ g_atoms)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_bregman_expected_score_identity():
    # exact expected Bregman score at the true mean equals E[phi(Y)] - phi(E[Y])
    rng = np.random.default_rng(15)
    for phi in (_square(), convex_generator("neg-log"), convex_generator("neg-entropy")):
        for _ in range(20):
            atoms, probs, _ = helpers.random_discrete(rng)
            score = ScoreSpec.bregman(phi)
            m = float(probs @ atoms)
            lhs = helpers.expected_score(score, atoms, probs, np.array([m]))[0]
            rhs = float(probs @ phi.value(atoms)) - float(phi.value(np.array([m]))[0])
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_mixture_check_bregman_square():
    spec = ScoreSpec.bregman(_square())
    grid = MurphyGrid("theta", np.linspace(0.0, 3.0, 10_000))
    assert evaluate(spec, 1.0, 3.0) == pytest.approx(4.0)
    assert mixture_weight_check(spec, grid, 1.0, 3.0) < 1e-3


def test_mixture_check_gpl_identity():
    spec = ScoreSpec.gpl(_identity(), 0.5)
    grid = MurphyGrid("theta", np.linspace(0.0, 2.0, 10_000))
    assert evaluate(spec, 0.0, 2.0) == pytest.approx(1.0)
    assert mixture_weight_check(spec, grid, 0.0, 2.0) < 1e-3


def test_mixture_check_degenerate_pair_is_exact():
    spec = ScoreSpec.bregman(_square())
    grid = MurphyGrid("theta", np.linspace(-1.0, 1.0, 100))
    assert mixture_weight_check(spec, grid, 0.5, 0.5) == 0.0


def test_mixture_residual_shrinks_linearly():
    spec = ScoreSpec.bregman(convex_generator("neg-entropy"))
    coarse = mixture_weight_check(spec, MurphyGrid("theta", np.linspace(0.4, 2.6, 1000)), 0.5, 2.5)
    fine = mixture_weight_check(spec, MurphyGrid("theta", np.linspace(0.4, 2.6, 10_000)), 0.5, 2.5)
    assert fine < coarse / 4.0


def test_mixture_check_requires_covering_grid():
    spec = ScoreSpec.bregman(_square())
    grid = MurphyGrid("theta", np.linspace(0.0, 1.0, 50))
    with pytest.raises(ValueError, match="cover"):
        mixture_weight_check(spec, grid, 0.5, 2.0)


def test_murphy_grid_defaults():
    grid = murphy_grid_default("theta", np.arange(11.0))
    assert len(grid) == 201
    assert grid.values[0] == pytest.approx(-0.1)
    assert grid.values[-1] == pytest.approx(10.1)

    grid = murphy_grid_default("b", np.arange(1.0, 5.0), family="patton")
    assert 2.0 in grid.values
    assert grid.values[0] == 0.0 and grid.values[-1] == 4.0 and len(grid) == 81

    grid = murphy_grid_default("b", np.arange(1.0, 5.0), family="var")
    assert grid.values[0] == -2.0 and grid.values[-1] == 6.0 and len(grid) == 81
    assert 0.0 in grid.values and 4.0 in grid.values

    with pytest.raises(ValueError, match="constant"):
        murphy_grid_default("theta", np.ones(10))


def test_murphy_grid_validation():
    with pytest.raises(ValueError, match="increasing"):
        MurphyGrid("theta", [1.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="non-empty"):
        MurphyGrid("b", [])
    with pytest.raises(ValueError, match="axis"):
        MurphyGrid("x", [1.0])


def test_domain_violations_named():
    with pytest.raises(ValueError, match="patton score with b = 0.5"):
        evaluate(ScoreSpec.patton(0.5), -1.0, 2.0)
    with pytest.raises(ValueError, match="patton score with b = 3"):
        evaluate(ScoreSpec.patton(3.0), 1.0, -2.0)
    with pytest.raises(ValueError, match="zero-hom-var-es requires y > 0"):
        evaluate(ScoreSpec.zero_hom_var_es(0.9), (1.0, 2.0), -1.0)
    with pytest.raises(ValueError, match="zero-hom-var-es requires z2 > 0"):
        evaluate(ScoreSpec.zero_hom_var_es(0.9), (1.0, -2.0), 1.0)
    with pytest.raises(ValueError, match="var-homogeneous score with b = 0"):
        evaluate(ScoreSpec.var_homogeneous(0.0, 0.9), -1.0, 1.0)
    with pytest.raises(ValueError, match="requires z > 0"):
        evaluate(ScoreSpec.bregman(convex_generator("neg-log")), -1.0, 1.0)


def test_unregistered_generators_rejected():
    with pytest.raises(ValueError, match="unknown convex generator"):
        convex_generator("cubic")
    with pytest.raises(ValueError, match="unknown increasing generator"):
        increasing_generator("exp")
    with pytest.raises(ValueError, match="b > 1"):
        convex_generator("piecewise-power", b=1.0)
    with pytest.raises(ValueError, match="neg-log"):
        ScoreSpec.joint_var_es(_identity(), _square(), 0.9)
    with pytest.raises(ValueError, match="pseudo-huber"):
        ScoreSpec.rvar_triplet(_identity(), _identity(), _square(), 0.2, 0.7)
    with pytest.raises(ValueError, match="c <= beta - alpha"):
        ScoreSpec.rvar_triplet(
            _identity(), _identity(), convex_generator("pseudo-huber", c=1.0), 0.2, 0.7
        )
    with pytest.raises(ValueError, match="expected a registered convex"):
        ScoreSpec.bregman(_identity())


def test_prediction_dim_mismatch_rejected():
    with pytest.raises(ValueError, match="2-component"):
        evaluate_many(ScoreSpec.zero_hom_var_es(0.9), np.ones(5), np.ones(5))
    with pytest.raises(ValueError, match="scalar"):
        evaluate_many(ScoreSpec.patton(2.0), np.ones((5, 2)), np.ones(5))


def test_evaluate_broadcasts_baseline_prediction():
    spec = ScoreSpec.gpl(_identity(), 0.5)
    y = np.array([0.0, 1.0, 2.0])
    s = evaluate_many(spec, 1.0, y)
    assert s == pytest.approx([0.5, 0.0, 0.5])


def test_expectile_score_consistency_with_functional():
    rng = np.random.default_rng(21)
    atoms, probs, expanded = helpers.random_discrete(rng)
    tau = 0.25
    spec = ScoreSpec.expectile(tau, _square())
    grid = helpers.lattice_grid(atoms.min(), atoms.max())
    best = helpers.argmin_expected_scalar(spec, atoms, probs, grid)
    target = empirical_functional(FunctionalSpec.expectile(tau), expanded).scalar
    assert abs(best - target) <= helpers.GRID_STEP + 1e-12
