"""
Tests for analytic Shapley values, Weight of Evidence, multiclass scores and global importances
"""

import numpy as np
import pytest

from conftest import LOG4, LOG_1_5, X_AAA, Y0, Y1, make_synth3, random_instance, random_model
from bayes_attrib.exceptions import UsageError, ZeroSumAttributionError
from bayes_attrib.models.schemas import ColumnSpec, Schema
from bayes_attrib.services.explainer import AttributionExplainer, normalize
from bayes_attrib.services.naive_bayes import NaiveBayesModel
from bayes_attrib.services.oracle import shapley_bruteforce
from bayes_attrib.services.synthetic import sample_parts, synthetic_preprocessor

SYNTH3_PHI = [1.386294, 0.405465, 0.0]


def test_expectation_term_golden_values():
    assert AttributionExplainer(make_synth3()).expectation_term(0, Y1, Y0) == pytest.approx(0.0, abs=1e-15)
    skewed = AttributionExplainer(make_synth3(marginal_x1=(0.7, 0.3)))
    assert skewed.expectation_term(0, Y1, Y0) == pytest.approx(0.554518, abs=1e-6)


def test_expectation_term_is_zero_for_identical_conditionals():
    explainer = AttributionExplainer(make_synth3(marginal_x1=(0.9, 0.1)))
    assert explainer.expectation_term(2, Y1, Y0) == 0.0


def test_shapley_golden_vector(synth3):
    attribution = AttributionExplainer(synth3).shapley_analytic(X_AAA, Y1, Y0)
    assert attribution.method == "shapley"
    assert attribution.values == pytest.approx(SYNTH3_PHI, abs=1e-6)


def test_woe_golden_vector_and_marginal_shift():
    assert AttributionExplainer(make_synth3()).woe(X_AAA, Y1, Y0).values == pytest.approx(SYNTH3_PHI, abs=1e-6)
    skewed = AttributionExplainer(make_synth3(marginal_x1=(0.7, 0.3)))
    assert skewed.woe(X_AAA, Y1, Y0).values[0] == pytest.approx(1.386294, abs=1e-6)
    assert skewed.shapley_analytic(X_AAA, Y1, Y0).values[0] == pytest.approx(0.831776, abs=1e-6)


def test_null_player_and_zero_weight(all_parts3):
    explainer = AttributionExplainer(make_synth3(weights=(0.0, 1.0, 1.0)))
    for x in all_parts3:
        values = explainer.shapley_analytic(x, Y1, Y0).values
        assert values[0] == 0.0
        assert values[2] == 0.0


def test_efficiency_constant_golden_values(synth3):
    assert AttributionExplainer(synth3).efficiency_constant(Y1, Y0) == pytest.approx(0.0, abs=1e-15)
    skewed_priors = AttributionExplainer(make_synth3(priors=(0.75, 0.25)))
    assert skewed_priors.efficiency_constant(Y0, Y1) == pytest.approx(np.log(3.0), abs=1e-12)


def test_efficiency_identity_on_random_instances():
    """log_odds(x) = constant + sum of phi(x) on 10,000 instances"""
    for seed in range(10):
        model = random_model(seed)
        explainer = AttributionExplainer(model)
        parts = sample_parts(model, 1000, seed=seed)
        phi = explainer.explain_all(parts, "shapley", 1, 0)
        gap = model.log_odds_batch(parts, 1, 0) - phi.sum(axis=1) - explainer.efficiency_constant(1, 0)
        assert np.max(np.abs(gap)) < 1e-10


def test_shapley_has_zero_expectation_under_the_stored_marginal(random_models):
    for model in random_models:
        explainer = AttributionExplainer(model)
        for m, (marginal, count) in enumerate(zip(model.marginal, model.part_counts)):
            parts = np.zeros((count, model.n_features), dtype=int)
            parts[:, m] = np.arange(count)
            phi_m = explainer.explain_all(parts, "shapley", 1, 0)[:, m]
            assert abs(float(marginal @ phi_m)) < 1e-10


def test_class_swap_antisymmetry(random_models):
    rng = np.random.default_rng(0)
    for model in random_models[:30]:
        explainer = AttributionExplainer(model)
        x = random_instance(model, rng)
        forward = np.array(explainer.shapley_analytic(x, 1, 0).values)
        backward = np.array(explainer.shapley_analytic(x, 0, 1).values)
        assert np.max(np.abs(forward + backward)) <= 1e-12


def test_woe_minus_shapley_is_instance_independent(random_models):
    """WoE_m(x) - phi_m(x) = w_m * expectation term of m for every x"""
    for model in random_models[:30]:
        explainer = AttributionExplainer(model)
        parts = sample_parts(model, 50, seed=1)
        gap = explainer.explain_all(parts, "woe", 1, 0) - explainer.explain_all(parts, "shapley", 1, 0)
        assert np.max(gap.max(axis=0) - gap.min(axis=0)) < 1e-12
        expected = model.weights * np.array([explainer.expectation_term(m, 1, 0) for m in range(model.n_features)])
        assert gap[0] == pytest.approx(expected, abs=1e-12)


def test_information_terms_rewrite_shapley(random_models):
    rng = np.random.default_rng(5)
    for model in random_models[:30]:
        explainer = AttributionExplainer(model)
        x = random_instance(model, rng)
        pos_terms, neg_terms = explainer.information_terms(x, 1, 0)
        phi = np.array(explainer.shapley_analytic(x, 1, 0).values)
        assert model.weights * (neg_terms - pos_terms) == pytest.approx(phi, abs=1e-10)


def test_information_terms_on_synth3(synth3):
    pos_terms, neg_terms = AttributionExplainer(synth3).information_terms(X_AAA, Y1, Y0)
    # x1 = a: -log 0.8 + 0.5 (log 0.8 + log 0.2) under Y1
    assert pos_terms[0] == pytest.approx(-np.log(0.8) + 0.5 * np.log(0.16), abs=1e-12)
    assert neg_terms[0] - pos_terms[0] == pytest.approx(LOG4, abs=1e-12)


def test_weight_scaling_is_linear():
    model = random_model(21)
    scaled_weights = model.weights.copy()
    scaled_weights[0] *= 0.5
    scaled = model.with_weights(scaled_weights)
    x = np.zeros(model.n_features, dtype=int)
    for method in ("shapley_analytic", "woe"):
        base = getattr(AttributionExplainer(model), method)(x, 1, 0).values
        half = getattr(AttributionExplainer(scaled), method)(x, 1, 0).values
        assert half[0] == 0.5 * base[0]
        assert half[1:] == base[1:]


def test_multiclass_with_two_classes_doubles_the_magnitude(synth3, all_parts3):
    explainer = AttributionExplainer(synth3)
    for x in all_parts3:
        multiclass = explainer.shapley_multiclass(x)
        phi = np.array(explainer.shapley_analytic(x, Y1, Y0).values)
        assert multiclass.values == pytest.approx(2 * np.abs(phi), abs=1e-12)
        assert len(multiclass.per_class) == 2


def three_class_model() -> NaiveBayesModel:
    """x0 separates class 0 from the others; x1 is only mildly informative"""
    prep = synthetic_preprocessor([2, 2])
    schema = Schema(
        columns=[ColumnSpec(name=n, kind="categorical") for n in ("x0", "x1", "y")],
        target="y",
        class_labels=["A", "B", "C"],
    )
    cond = (
        np.array([[0.9, 0.1], [0.2, 0.8], [0.2, 0.8]]),
        np.array([[0.5, 0.5], [0.55, 0.45], [0.45, 0.55]]),
    )
    priors = np.full(3, 1.0 / 3.0)
    return NaiveBayesModel(
        schema=schema,
        preprocessor=prep,
        priors=priors,
        cond=cond,
        marginal=tuple(priors @ c for c in cond),
        weights=np.ones(2),
        smoothing=0.0,
    )


def test_multiclass_ranks_the_class_specific_variable_first():
    explainer = AttributionExplainer(three_class_model())
    for x in ([0, 0], [0, 1], [1, 0], [1, 1]):
        attribution = explainer.shapley_multiclass(np.array(x))
        assert attribution.method == "shapley_multiclass"
        assert attribution.values[0] > attribution.values[1] >= 0.0
        per_class = np.array(attribution.per_class)
        assert attribution.values == pytest.approx(np.abs(per_class).sum(axis=0), abs=1e-15)


def test_one_vs_rest_vectors_match_bruteforce_against_the_pooled_rest():
    model = three_class_model()
    explainer = AttributionExplainer(model)
    for x in ([0, 0], [0, 1], [1, 0], [1, 1]):
        x = np.array(x)
        per_class = explainer.shapley_multiclass(x).per_class
        for c in range(3):
            exhaustive = shapley_bruteforce(model, x, c, None).values
            assert per_class[c] == pytest.approx(exhaustive, abs=1e-12)


def test_multiclass_explain_all_matches_single_rows():
    explainer = AttributionExplainer(three_class_model())
    parts = np.array([[0, 0], [1, 1], [0, 1]])
    matrix = explainer.explain_all(parts, "multiclass")
    for row, x in zip(matrix, parts):
        assert row == pytest.approx(explainer.shapley_multiclass(x).values, abs=1e-15)


def test_normalize():
    assert normalize([2.0, 1.0, 1.0]) == [0.5, 0.25, 0.25]
    with pytest.raises(ZeroSumAttributionError):
        normalize([0.0, 0.0, 0.0])


def test_normalize_synth3(synth3):
    attribution = AttributionExplainer(synth3).shapley_analytic(X_AAA, Y1, Y0)
    assert normalize(attribution) == pytest.approx([0.773976, 0.226024, 0.0], abs=1e-6)


def test_global_importance_golden_values(synth3, all_parts3):
    explainer = AttributionExplainer(synth3)
    importance = explainer.global_importance(all_parts3, "shapley", Y1, Y0)
    assert importance.n_rows == 8
    assert importance.values == pytest.approx([LOG4, LOG_1_5, 0.0], abs=1e-12)
    single = explainer.global_importance(np.array([[1, 0, 1]]), "shapley", Y1, Y0)
    assert single.values == pytest.approx(np.abs(explainer.shapley_analytic([1, 0, 1], Y1, Y0).values))


def test_explain_all_matches_per_row_shapley(synth3, all_parts3):
    explainer = AttributionExplainer(synth3)
    matrix = explainer.explain_all(all_parts3, "shapley", Y1, Y0)
    for row, x in zip(matrix, all_parts3):
        assert row.tolist() == explainer.shapley_analytic(x, Y1, Y0).values


def test_select_by_probability(synth3, all_parts3):
    """Rows whose posterior is closest to each target; the first row wins ties"""
    indices = AttributionExplainer(synth3).select_by_probability(all_parts3, Y1, [0.99, 0.5, 0.01])
    assert indices[0] == 0
    assert indices[2] == 6
    proba = synth3.predict_proba_batch(all_parts3)[:, Y1]
    assert abs(proba[indices[1]] - 0.5) == np.min(np.abs(proba - 0.5))


def test_unknown_method_and_missing_sampling_config(synth3):
    explainer = AttributionExplainer(synth3)
    with pytest.raises(UsageError, match="Unknown method"):
        explainer.explain_all(np.array([X_AAA]), "lime", Y1, Y0)
    with pytest.raises(UsageError, match="sampling configuration"):
        explainer.explain_all(np.array([X_AAA]), "sampling", Y1, Y0)
