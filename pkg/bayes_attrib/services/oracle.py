#!/usr/bin/env python3
"""
Oracle Service
Coalition value function, exhaustive Shapley enumeration, variable deprivation and a seeded permutation estimator
"""

import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, Iterable, List, Optional

import numpy as np
from scipy.special import logsumexp

from ..exceptions import OracleBudgetError, UsageError
from ..models.schemas import Attribution, SamplingConfig
from .naive_bayes import NaiveBayesModel

logger = logging.getLogger(__name__)

MAX_BRUTEFORCE_VARIABLES = 20


@dataclass(frozen=True)
class Coalition:
    """Subset of the d variables; bit m of mask is set when variable m belongs to it"""

    mask: int
    n_variables: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >= 1 << self.n_variables:
            raise UsageError(f"Coalition mask {self.mask} outside the {self.n_variables}-variable range")

    @classmethod
    def of(cls, members: Iterable[int], n_variables: int) -> "Coalition":
        mask = 0
        for m in members:
            if not 0 <= m < n_variables:
                raise UsageError(f"Variable {m} outside 0..{n_variables - 1}")
            mask |= 1 << m
        return cls(mask=mask, n_variables=n_variables)

    def __contains__(self, m: int) -> bool:
        return bool(self.mask >> m & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def members(self) -> List[int]:
        return [m for m in range(self.n_variables) if m in self]

    def with_member(self, m: int) -> "Coalition":
        return Coalition(mask=self.mask | 1 << m, n_variables=self.n_variables)


def _instance_deltas(model: NaiveBayesModel, x: np.ndarray, pos: int, neg: Optional[int]):
    """Empty-coalition value and the per-variable change w_k * (instance ratio - expectation)"""
    tables = model.contrast(pos, neg)
    instance = np.array([ratio[x[k]] for k, ratio in enumerate(tables.log_ratios)])
    empty = tables.prior_log_ratio + float(np.sum(model.weights * tables.expectations))
    return empty, model.weights * instance, model.weights * tables.expectations


def value_function(model: NaiveBayesModel, x: np.ndarray, u: Coalition, pos: int, neg: Optional[int]) -> float:
    """
    Expected log-odds with the variables of u fixed to the instance and the others averaged out

    Args:
        model: Fitted model
        x: Part vector of the instance
        u: Conditioned variables
        pos: Positive class index
        neg: Negative class index, None for the pooled rest

    Returns:
        float: v(u)
    """
    x = model.check_parts(x)
    tables = model.contrast(pos, neg)
    value = tables.prior_log_ratio
    for k in range(model.n_features):
        term = tables.log_ratios[k][x[k]] if k in u else tables.expectations[k]
        value += model.weights[k] * term
    return float(value)


def coalition_values(model: NaiveBayesModel, x: np.ndarray, pos: int, neg: Optional[int]) -> np.ndarray:
    """v(u) for every coalition, indexed by bitmask (lexicographic order)"""
    x = model.check_parts(x)
    d = model.n_features
    if d > MAX_BRUTEFORCE_VARIABLES:
        raise OracleBudgetError(
            f"Enumerating coalitions of {d} variables costs O(2^{d}); the limit is {MAX_BRUTEFORCE_VARIABLES}"
        )
    tables = model.contrast(pos, neg)
    values = np.full(1 << d, tables.prior_log_ratio)
    for k in range(d):
        view = values.reshape(-1, 2, 1 << k)
        view[:, 0, :] += model.weights[k] * tables.expectations[k]
        view[:, 1, :] += model.weights[k] * tables.log_ratios[k][x[k]]
    return values


def _coalition_sizes(d: int) -> np.ndarray:
    sizes = np.zeros(1 << d, dtype=np.int64)
    for k in range(d):
        sizes.reshape(-1, 2, 1 << k)[:, 1, :] += 1
    return sizes


def marginal_contributions(model: NaiveBayesModel, x: np.ndarray, m: int, pos: int, neg: Optional[int]) -> np.ndarray:
    """v(u + m) - v(u) for every u not containing m, in increasing bitmask order"""
    if not 0 <= m < model.n_features:
        raise UsageError(f"Variable {m} outside 0..{model.n_features - 1}")
    view = coalition_values(model, x, pos, neg).reshape(-1, 2, 1 << m)
    return (view[:, 1, :] - view[:, 0, :]).ravel()


def shapley_bruteforce(
    model: NaiveBayesModel, x: np.ndarray, pos: int, neg: Optional[int], instance_index: Optional[int] = None
) -> Attribution:
    """
    Shapley values by full enumeration of the 2^d coalitions

    Args:
        model: Fitted model with at most 20 variables
        x: Part vector of the instance
        pos: Positive class index
        neg: Negative class index, None for the pooled rest

    Returns:
        Attribution: method "bruteforce"
    """
    d = model.n_features
    values = coalition_values(model, x, pos, neg)
    sizes = _coalition_sizes(d)
    size_weights = np.array([1.0 / (d * comb(d - 1, s)) for s in range(d)])

    phi = np.zeros(d)
    for m in range(d):
        view = values.reshape(-1, 2, 1 << m)
        without = sizes.reshape(-1, 2, 1 << m)[:, 0, :]
        phi[m] = float(np.sum(size_weights[without] * (view[:, 1, :] - view[:, 0, :])))

    logger.debug(f"Brute-force Shapley over {len(values)} coalitions: {phi.tolist()}")
    return Attribution(
        method="bruteforce", pos_class=pos, neg_class=neg, values=phi.tolist(), instance_index=instance_index
    )


def deprive(model: NaiveBayesModel, x: np.ndarray, m: int) -> np.ndarray:
    """Posterior P(Y | x without variable m): the factor of m is summed out of the joint"""
    x = model.check_parts(x)
    if not 0 <= m < model.n_features:
        raise UsageError(f"Variable {m} outside 0..{model.n_features - 1}")
    scores = model.log_priors.copy()
    for k, log_cond in enumerate(model.log_cond):
        if k != m:
            scores += model.weights[k] * log_cond[:, x[k]]
    return np.exp(scores - logsumexp(scores))


def woe_via_deprivation(model: NaiveBayesModel, x: np.ndarray, m: int, pos: int, neg: Optional[int]) -> float:
    """
    Log ratio between the posterior odds with and without variable m

    The deprived odds already differ from the full odds by the weighted factor of m, so no
    extra weight is applied. neg must name a class unless the model has two classes.
    """
    pos = model.check_class(pos)
    if neg is None:
        if model.n_classes != 2:
            raise UsageError("Deprivation odds need an explicit negative class when K > 2")
        neg = 1 - pos
    neg = model.check_class(neg)
    if neg == pos:
        raise UsageError(f"Positive and negative class must differ, both are {pos}")
    full = model.predict_proba(x)
    deprived = deprive(model, x, m)
    return float(np.log(full[pos] / full[neg]) - np.log(deprived[pos] / deprived[neg]))


class PermutationSampler:
    """
    Monte-Carlo Shapley estimator over random variable orderings

    Permutation t draws its ordering from a generator seeded with (seed, t) and Monte-Carlo
    draws for coalition u are seeded with (seed, mask of u), so estimates do not depend on
    how rows are spread across workers.
    """

    def __init__(self, model: NaiveBayesModel, config: SamplingConfig, background: Optional[np.ndarray] = None):
        self.model = model
        self.config = config
        self.background = None
        if config.background == "knowledge" and config.value_fn == "posterior":
            if background is None or len(background) == 0:
                raise UsageError("Knowledge background requires rows to draw the knowledge table from")
            background = model.check_parts(np.atleast_2d(background))
            rng = np.random.default_rng([config.seed, len(background)])
            size = min(config.knowledge_rows, len(background))
            self.background = background[np.sort(rng.choice(len(background), size=size, replace=False))]
        logger.debug(
            f"Permutation sampler initialized: {config.n_permutations} permutations, value_fn={config.value_fn}, "
            f"background={config.background}"
        )

    def shapley_sampling(
        self, x: np.ndarray, pos: int, neg: Optional[int], instance_index: Optional[int] = None
    ) -> Attribution:
        """
        Average marginal contribution of each variable over seeded random orderings

        Args:
            x: Part vector of the instance
            pos: Positive class index
            neg: Negative class index (used by the log-odds value function), None for the pooled rest

        Returns:
            Attribution: method "sampling"
        """
        model = self.model
        x = model.check_parts(x)
        pos = model.check_class(pos)
        d = model.n_features
        cache: Dict[int, float] = {}

        if self.config.value_fn == "log_odds":
            empty, instance, expectation = _instance_deltas(model, x, pos, neg)

            def value(mask: int) -> float:
                members = np.array([mask >> k & 1 for k in range(d)], dtype=bool)
                return empty + float(np.sum(instance[members] - expectation[members]))
        else:

            def value(mask: int) -> float:
                return self._posterior_value(x, mask, pos)

        def cached(mask: int) -> float:
            if mask not in cache:
                cache[mask] = value(mask)
            return cache[mask]

        phi = np.zeros(d)
        for t in range(self.config.n_permutations):
            order = np.random.default_rng([self.config.seed, t]).permutation(d)
            mask, previous = 0, cached(0)
            for m in order:
                mask |= 1 << int(m)
                current = cached(mask)
                phi[m] += current - previous
                previous = current
        phi /= self.config.n_permutations

        return Attribution(
            method="sampling", pos_class=pos, neg_class=neg, values=phi.tolist(), instance_index=instance_index
        )

    def _posterior_value(self, x: np.ndarray, mask: int, pos: int) -> float:
        """E[P(Y_pos | X) | X_u = x_u] under the configured background"""
        model = self.model
        fixed = np.array([mask >> k & 1 for k in range(model.n_features)], dtype=bool)
        free = np.flatnonzero(~fixed)

        if self.background is not None:
            rows = self.background.copy()
            rows[:, fixed] = x[fixed]
            return float(model.predict_proba_batch(rows)[:, pos].mean())

        if free.size == 0:
            return float(model.predict_proba(x)[pos])

        counts = [model.part_counts[k] for k in free]
        if np.prod(counts, dtype=float) <= self.config.exact_limit:
            return self._exact_posterior_value(x, fixed, free, pos)

        rng = np.random.default_rng([self.config.seed, mask])
        rows = np.tile(x, (self.config.mc_draws, 1))
        for k in free:
            rows[:, k] = rng.choice(model.part_counts[k], size=self.config.mc_draws, p=model.marginal[k])
        return float(model.predict_proba_batch(rows)[:, pos].mean())

    def _exact_posterior_value(self, x: np.ndarray, fixed: np.ndarray, free: np.ndarray, pos: int) -> float:
        model = self.model
        base = model.log_priors.copy()
        for k in np.flatnonzero(fixed):
            base += model.weights[k] * model.log_cond[k][:, x[k]]
        # a single-part variable has marginal 1 and a class-wise constant factor, so it needs no grid axis
        single = np.array([model.part_counts[k] == 1 for k in free], dtype=bool)
        for k in free[single]:
            base += model.weights[k] * model.log_cond[k][:, 0]
        free = free[~single]
        if free.size == 0:
            return float(np.exp(base - logsumexp(base))[pos])

        # scores[k, p_1, ..., p_r] over every combination of the free variables' parts
        scores = base.reshape(-1, *([1] * free.size))
        probability = np.ones([1] * free.size)
        for axis, k in enumerate(free):
            shape = [1] * free.size
            shape[axis] = model.part_counts[k]
            scores = scores + model.weights[k] * model.log_cond[k].reshape(-1, *shape)
            probability = probability * model.marginal[k].reshape(shape)

        scores = scores.reshape(model.n_classes, -1)
        posterior = np.exp(scores - logsumexp(scores, axis=0, keepdims=True))
        return float(posterior[pos] @ probability.ravel())
