#!/usr/bin/env python3
"""
Attribution Explainer Service
Analytic Shapley values, Weight of Evidence, multiclass scores and global importances for a weighted naive Bayes model
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ..exceptions import UsageError, ZeroSumAttributionError
from ..models.schemas import Attribution, GlobalImportance, SamplingConfig
from .naive_bayes import NaiveBayesModel
from .oracle import PermutationSampler, shapley_bruteforce

logger = logging.getLogger(__name__)

ANALYTIC_METHODS = ("shapley", "woe", "shapley_multiclass")
ORACLE_METHODS = ("bruteforce", "sampling")
_METHOD_ALIASES = {"multiclass": "shapley_multiclass"}


def canonical_method(method: str) -> str:
    """Map a command-line method name onto an attribution method tag"""
    method = _METHOD_ALIASES.get(method, method)
    if method not in ANALYTIC_METHODS + ORACLE_METHODS:
        raise UsageError(
            f"Unknown method '{method}'; choose one of shapley, woe, multiclass, sampling, bruteforce"
        )
    return method


def normalize(attribution: Union[Attribution, Sequence[float]]) -> List[float]:
    """
    Divide each value by the sum of the vector

    Raises ZeroSumAttributionError when the sum vanishes (below 1e-12 in magnitude).
    """
    values = np.asarray(attribution.values if isinstance(attribution, Attribution) else attribution, dtype=np.float64)
    total = float(values.sum())
    if abs(total) < 1e-12:
        raise ZeroSumAttributionError(f"Attribution {values.tolist()} sums to {total}; normalization is undefined")
    return (values / total).tolist()


def _explain_rows(
    model: NaiveBayesModel,
    rows: np.ndarray,
    offset: int,
    method: str,
    pos: int,
    neg: Optional[int],
    sampling: Optional[SamplingConfig],
    background: Optional[np.ndarray],
) -> np.ndarray:
    """Oracle attributions for a block of rows; runs inside a joblib worker"""
    sampler = PermutationSampler(model, sampling, background) if method == "sampling" else None
    out = np.zeros(rows.shape, dtype=np.float64)
    for i, x in enumerate(rows):
        if sampler is not None:
            attribution = sampler.shapley_sampling(x, pos, neg, instance_index=offset + i)
        else:
            attribution = shapley_bruteforce(model, x, pos, neg, instance_index=offset + i)
        out[i] = attribution.values
    return out


class AttributionExplainer:
    """Service computing per-instance and global attributions from a fitted model"""

    def __init__(self, model: NaiveBayesModel, n_jobs: int = 1):
        self.model = model
        self.n_jobs = max(1, int(n_jobs))
        self._phi_tables: Dict[Tuple[int, Optional[int]], Tuple[np.ndarray, ...]] = {}
        logger.info(
            f"Attribution explainer initialized: {model.n_features} variables, {model.n_classes} classes, "
            f"{self.n_jobs} worker(s)"
        )

    def expectation_term(self, m: int, pos: int, neg: Optional[int]) -> float:
        """
        Marginal expectation of the log-likelihood ratio of variable m

        Args:
            m: Variable index
            pos: Positive class index
            neg: Negative class index, None for the pooled rest

        Returns:
            float: sum over parts of marginal(m, p) * log(cond(m, pos, p) / cond(m, neg, p))
        """
        self._check_variable(m)
        return float(self.model.contrast(pos, neg).expectations[m])

    def efficiency_constant(self, pos: int, neg: Optional[int]) -> float:
        """Prior log ratio plus the weighted expectation terms; log_odds(x) minus the sum of phi(x)"""
        tables = self.model.contrast(pos, neg)
        return tables.prior_log_ratio + float(np.sum(self.model.weights * tables.expectations))

    def _shapley_tables(self, pos: int, neg: Optional[int]) -> Tuple[np.ndarray, ...]:
        key = (pos, neg)
        if key not in self._phi_tables:
            tables = self.model.contrast(pos, neg)
            self._phi_tables[key] = tuple(
                w * (ratio - e) for w, ratio, e in zip(self.model.weights, tables.log_ratios, tables.expectations)
            )
        return self._phi_tables[key]

    def shapley_analytic(
        self, x: np.ndarray, pos: int, neg: Optional[int], instance_index: Optional[int] = None
    ) -> Attribution:
        """
        Exact Shapley values of the log-odds game

        Args:
            x: Part vector of the instance
            pos: Positive class index
            neg: Negative class index, None for the pooled rest
            instance_index: Optional row reference stored on the result

        Returns:
            Attribution: phi_m = w_m * (log-ratio of m at x_m - expectation term of m)
        """
        x = self.model.check_parts(x)
        tables = self._shapley_tables(pos, neg)
        values = [float(table[x[m]]) for m, table in enumerate(tables)]
        return Attribution(method="shapley", pos_class=pos, neg_class=neg, values=values, instance_index=instance_index)

    def woe(self, x: np.ndarray, pos: int, neg: Optional[int], instance_index: Optional[int] = None) -> Attribution:
        """Weight of Evidence: w_m * log-ratio of m at x_m"""
        x = self.model.check_parts(x)
        tables = self.model.contrast(pos, neg)
        values = [float(w * ratio[x[m]]) for m, (w, ratio) in enumerate(zip(self.model.weights, tables.log_ratios))]
        return Attribution(method="woe", pos_class=pos, neg_class=neg, values=values, instance_index=instance_index)

    def shapley_multiclass(self, x: np.ndarray, instance_index: Optional[int] = None) -> Attribution:
        """
        Sum over classes of the absolute one-vs-rest Shapley values

        The signed one-vs-rest vectors are kept in per_class.
        """
        per_class = [self.shapley_analytic(x, c, None).values for c in range(self.model.n_classes)]
        values = np.abs(np.asarray(per_class)).sum(axis=0)
        return Attribution(
            method="shapley_multiclass",
            values=values.tolist(),
            instance_index=instance_index,
            per_class=per_class,
        )

    def information_terms(self, x: np.ndarray, pos: int, neg: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Information content of x_m under each class, centered on its marginal expectation

        Args:
            x: Part vector of the instance
            pos: Positive class index
            neg: Negative class index, None for the pooled rest

        Returns:
            Tuple[np.ndarray, np.ndarray]: per-variable terms for pos and for neg; phi_m / w_m = neg_term - pos_term
        """
        model = self.model
        x = model.check_parts(x)
        tables = model.contrast(pos, neg)
        pos_terms = np.zeros(model.n_features)
        neg_terms = np.zeros(model.n_features)
        for m, (log_cond, ratio, marg) in enumerate(zip(model.log_cond, tables.log_ratios, model.marginal)):
            surprise_pos = -log_cond[pos]
            surprise_neg = -(log_cond[pos] - ratio)
            pos_terms[m] = surprise_pos[x[m]] - marg @ surprise_pos
            neg_terms[m] = surprise_neg[x[m]] - marg @ surprise_neg
        return pos_terms, neg_terms

    def explain_all(
        self,
        parts: np.ndarray,
        method: str,
        pos: Optional[int] = None,
        neg: Optional[int] = None,
        sampling: Optional[SamplingConfig] = None,
        background: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        Attributions for every row of an encoded dataset

        Args:
            parts: N x d part indices
            method: shapley, woe, multiclass, sampling or bruteforce
            pos: Positive class index (ignored for multiclass)
            neg: Negative class index, None for the pooled rest
            sampling: Estimator settings, required for method "sampling"
            background: Rows the knowledge table is drawn from when sampling uses one

        Returns:
            np.ndarray: N x d attribution matrix, rows in input order
        """
        method = canonical_method(method)
        parts = self.model.check_parts(np.atleast_2d(parts))
        n, d = parts.shape
        if method != "shapley_multiclass" and pos is None:
            raise UsageError(f"Method '{method}' needs a positive class")

        if method == "shapley":
            tables = self._shapley_tables(pos, neg)
            result = np.column_stack([tables[m][parts[:, m]] for m in range(d)]) if d else np.zeros((n, 0))
        elif method == "woe":
            contrast = self.model.contrast(pos, neg)
            result = np.column_stack(
                [self.model.weights[m] * contrast.log_ratios[m][parts[:, m]] for m in range(d)]
            ) if d else np.zeros((n, 0))
        elif method == "shapley_multiclass":
            result = np.zeros((n, d))
            for c in range(self.model.n_classes):
                result += np.abs(self.explain_all(parts, "shapley", c, None))
        else:
            if method == "sampling" and sampling is None:
                raise UsageError("Method 'sampling' needs a sampling configuration")
            result = self._explain_with_oracle(parts, method, pos, neg, sampling, background)

        logger.debug(f"Explained {n} rows with method={method}")
        return result

    def _explain_with_oracle(self, parts, method, pos, neg, sampling, background) -> np.ndarray:
        if len(parts) == 0:
            return np.zeros(parts.shape)
        blocks = np.array_split(np.arange(len(parts)), min(self.n_jobs, len(parts)))
        with Parallel(n_jobs=self.n_jobs) as parallel:
            results = parallel(
                delayed(_explain_rows)(self.model, parts[block], int(block[0]), method, pos, neg, sampling, background)
                for block in blocks
            )
        return np.vstack(results)

    def explain(
        self,
        x: np.ndarray,
        method: str,
        pos: Optional[int] = None,
        neg: Optional[int] = None,
        sampling: Optional[SamplingConfig] = None,
        background: Optional[np.ndarray] = None,
        instance_index: Optional[int] = None,
    ) -> Attribution:
        """Single-instance dispatch over every attribution method"""
        method = canonical_method(method)
        if method == "shapley":
            return self.shapley_analytic(x, pos, neg, instance_index)
        if method == "woe":
            return self.woe(x, pos, neg, instance_index)
        if method == "shapley_multiclass":
            return self.shapley_multiclass(x, instance_index)
        if method == "bruteforce":
            return shapley_bruteforce(self.model, x, pos, neg, instance_index)
        if sampling is None:
            raise UsageError("Method 'sampling' needs a sampling configuration")
        return PermutationSampler(self.model, sampling, background).shapley_sampling(x, pos, neg, instance_index)

    def global_importance(self, parts: np.ndarray, method: str, pos: Optional[int] = None, neg: Optional[int] = None,
                          sampling: Optional[SamplingConfig] = None,
                          background: Optional[np.ndarray] = None) -> GlobalImportance:
        """
        Mean absolute attribution per variable over a dataset

        Args:
            parts: N x d part indices, N >= 1
            method: Any method accepted by explain_all

        Returns:
            GlobalImportance: non-negative per-variable means
        """
        parts = np.atleast_2d(parts)
        if len(parts) == 0:
            raise UsageError("Global importance needs at least one row")
        matrix = self.explain_all(parts, method, pos, neg, sampling, background)
        return GlobalImportance(
            method=canonical_method(method), values=np.abs(matrix).mean(axis=0).tolist(), n_rows=len(parts)
        )

    def select_by_probability(self, parts: np.ndarray, pos: int, targets: Sequence[float]) -> List[int]:
        """Row index whose P(Y_pos | x) is closest to each target probability (first row on ties)"""
        proba = self.model.predict_proba_batch(parts)[:, self.model.check_class(pos)]
        return [int(np.argmin(np.abs(proba - t))) for t in targets]

    def _check_variable(self, m: int) -> None:
        if not 0 <= m < self.model.n_features:
            raise UsageError(f"Variable {m} outside 0..{self.model.n_features - 1}")
