#!/usr/bin/env python3
"""
Synthetic Models
Random naive Bayes models and part datasets used for timing runs and verification suites
"""

import logging
from typing import Optional, Sequence

import numpy as np

from ..models.schemas import ColumnSpec, Schema
from .naive_bayes import NaiveBayesModel
from .preprocessor import Preprocessor, VariablePartition

logger = logging.getLogger(__name__)


def synthetic_preprocessor(part_counts: Sequence[int]) -> Preprocessor:
    """Categorical partitions x0..x{d-1} whose values v0..v{P-1} map onto parts 0..P-1"""
    return Preprocessor(
        partitions=tuple(
            VariablePartition(
                variable=f"x{i}",
                kind="groups",
                groups={f"v{p}": p for p in range(count)},
                n_groups=count,
            )
            for i, count in enumerate(part_counts)
        )
    )


def synthetic_model(
    part_counts: Sequence[int],
    n_classes: int = 2,
    seed: int = 0,
    concentration: float = 1.0,
    weights: Optional[Sequence[float]] = None,
    priors: Optional[Sequence[float]] = None,
) -> NaiveBayesModel:
    """
    Model with conditionals drawn from a symmetric Dirichlet

    Args:
        part_counts: P_i for each variable
        n_classes: Number of classes
        seed: Generator seed
        concentration: Dirichlet concentration of every conditional row
        weights: Per-variable weights, default all 1.0
        priors: Class priors, default uniform

    Returns:
        NaiveBayesModel: marginals are the prior-weighted mixture of the conditionals
    """
    rng = np.random.default_rng(seed)
    prep = synthetic_preprocessor(part_counts)
    labels = [f"Y{k}" for k in range(n_classes)]
    schema = Schema(
        columns=[ColumnSpec(name=name, kind="categorical") for name in prep.feature_names + ["y"]],
        target="y",
        class_labels=labels,
    )
    priors = np.full(n_classes, 1.0 / n_classes) if priors is None else np.asarray(priors, dtype=np.float64)
    cond = []
    for count in part_counts:
        table = rng.dirichlet(np.full(count, concentration), size=n_classes)
        # keep every probability strictly positive and every row summing to 1
        table = np.maximum(table, 1e-12)
        cond.append(table / table.sum(axis=1, keepdims=True))
    marginal = [priors @ c for c in cond]
    return NaiveBayesModel(
        schema=schema,
        preprocessor=prep,
        priors=priors,
        cond=tuple(cond),
        marginal=tuple(m / m.sum() for m in marginal),
        weights=np.ones(len(part_counts)) if weights is None else np.asarray(weights, dtype=np.float64),
        smoothing=0.0,
        marginal_mode="mixture",
    )


def sample_parts(model: NaiveBayesModel, n_rows: int, seed: int = 0) -> np.ndarray:
    """Draw classes from the priors and then each variable's part from its class conditional"""
    rng = np.random.default_rng(seed)
    labels = rng.choice(model.n_classes, size=n_rows, p=model.priors)
    parts = np.zeros((n_rows, model.n_features), dtype=np.int64)
    for i, cond in enumerate(model.cond):
        cumulative = np.cumsum(cond, axis=1)[labels]
        draws = rng.random(n_rows)
        parts[:, i] = np.minimum((draws[:, None] > cumulative).sum(axis=1), cond.shape[1] - 1)
    logger.debug(f"Sampled {n_rows} synthetic rows over {model.n_features} variables")
    return parts
