#!/usr/bin/env python3
"""
Naive Bayes Service
Weighted naive Bayes fitting, log-space posterior prediction, log-odds scores and model persistence
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata

from ..exceptions import FitError, ModelFormatError, ModelVersionError, UsageError
from ..models.schemas import Schema
from .preprocessor import PartDataset, Preprocessor
from .storage import write_json

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = "bayes-attrib-model/1"
_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ContrastTables:
    """
    Per-variable log-likelihood ratios of a class pair

    neg is None when the negative side pools every class other than pos.
    """

    pos: int
    neg: Optional[int]
    prior_log_ratio: float
    log_ratios: Tuple[np.ndarray, ...]
    expectations: np.ndarray


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """
    Weighted naive Bayes over discretized parts

    cond[i] has shape (K, P_i) and holds P(X_i = p | Y_k); marginal[i] has shape (P_i,).
    """

    schema: Schema
    preprocessor: Preprocessor
    priors: np.ndarray
    cond: Tuple[np.ndarray, ...]
    marginal: Tuple[np.ndarray, ...]
    weights: np.ndarray
    smoothing: float
    marginal_mode: str = "empirical"
    training: Optional[Dict[str, Any]] = None
    _contrasts: Dict[Tuple[int, Optional[int]], ContrastTables] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        cond = tuple(np.asarray(c, dtype=np.float64) for c in self.cond)
        marginal = tuple(np.asarray(m, dtype=np.float64) for m in self.marginal)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "cond", cond)
        object.__setattr__(self, "marginal", marginal)
        object.__setattr__(self, "weights", weights)
        self._validate()
        object.__setattr__(self, "log_priors", np.log(priors))
        object.__setattr__(self, "log_cond", tuple(np.log(c) for c in cond))

    def _validate(self) -> None:
        k = self.schema.n_classes
        d = len(self.preprocessor.partitions)
        if self.schema.feature_names != self.preprocessor.feature_names:
            raise ModelFormatError("Schema features do not match the preprocessor partitions")
        if self.priors.shape != (k,):
            raise ModelFormatError(f"Expected {k} priors, got shape {self.priors.shape}")
        if abs(self.priors.sum() - 1.0) > _SUM_TOLERANCE:
            raise ModelFormatError(f"Priors sum to {self.priors.sum()!r}, not 1")
        if not (len(self.cond) == len(self.marginal) == d and self.weights.shape == (d,)):
            raise ModelFormatError(f"Conditional, marginal and weight tables must cover {d} variables")
        for name, p, cond, marg in zip(self.schema.feature_names, self.preprocessor.part_counts, self.cond, self.marginal):
            if cond.shape != (k, p) or marg.shape != (p,):
                raise ModelFormatError(f"Tables of '{name}' do not match its {p} parts")
            if np.any(np.abs(cond.sum(axis=1) - 1.0) > _SUM_TOLERANCE):
                raise ModelFormatError(f"Conditional rows of '{name}' do not sum to 1")
            if abs(marg.sum() - 1.0) > _SUM_TOLERANCE:
                raise ModelFormatError(f"Marginal of '{name}' does not sum to 1")
            if np.any(cond <= 0) or np.any(marg <= 0):
                raise ModelFormatError(f"Tables of '{name}' contain non-positive probabilities")
        if np.any(self.priors <= 0):
            raise ModelFormatError("Priors must be strictly positive")
        if np.any((self.weights < 0) | (self.weights > 1)):
            raise ModelFormatError(f"Weights must lie in [0, 1], got {self.weights.tolist()}")

    @property
    def n_features(self) -> int:
        return len(self.cond)

    @property
    def n_classes(self) -> int:
        return self.schema.n_classes

    @property
    def class_labels(self) -> List[str]:
        return list(self.schema.class_labels)

    @property
    def feature_names(self) -> List[str]:
        return self.schema.feature_names

    @property
    def part_counts(self) -> List[int]:
        return [c.shape[1] for c in self.cond]

    def check_parts(self, parts: np.ndarray) -> np.ndarray:
        """Validate a part vector (d,) or matrix (N, d) against the part counts"""
        parts = np.asarray(parts, dtype=np.int64)
        if parts.shape[-1] != self.n_features:
            raise UsageError(f"Expected {self.n_features} part indices per row, got {parts.shape[-1]}")
        limits = np.asarray(self.part_counts)
        if np.any(parts < 0) or np.any(parts >= limits):
            raise UsageError(f"Part indices out of range for part counts {self.part_counts}")
        return parts

    def check_class(self, k: int) -> int:
        if not 0 <= k < self.n_classes:
            raise UsageError(f"Class index {k} out of range for {self.n_classes} classes")
        return int(k)

    def log_joint_batch(self, parts: np.ndarray) -> np.ndarray:
        """log P(Y_k) + sum_i w_i log P(x_i | Y_k) for every row, shape (N, K)"""
        parts = self.check_parts(np.atleast_2d(parts))
        scores = np.tile(self.log_priors, (parts.shape[0], 1))
        for i, log_cond in enumerate(self.log_cond):
            scores += self.weights[i] * log_cond[:, parts[:, i]].T
        return scores

    def predict_proba_batch(self, parts: np.ndarray) -> np.ndarray:
        scores = self.log_joint_batch(parts)
        return np.exp(scores - logsumexp(scores, axis=1, keepdims=True))

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """
        Posterior class probabilities of one part vector

        Args:
            x: Part indices, one per variable

        Returns:
            np.ndarray: K probabilities ordered by class labels
        """
        return self.predict_proba_batch(np.asarray(x)[None, :])[0]

    def contrast(self, pos: int, neg: Optional[int]) -> ContrastTables:
        """
        Log-likelihood ratio tables of pos against neg (or against the pooled rest when neg is None)

        Cached per class pair; the pooled rest is the prior-weighted mixture of its classes.
        """
        key = (int(pos), None if neg is None else int(neg))
        cached = self._contrasts.get(key)
        if cached is not None:
            return cached

        pos = self.check_class(pos)
        if neg is not None:
            neg = self.check_class(neg)
            if neg == pos:
                raise UsageError(f"Positive and negative class must differ, both are {pos}")

        rest = [j for j in range(self.n_classes) if j != pos] if neg is None else [neg]
        if len(rest) == 1:
            j = rest[0]
            prior_log_ratio = float(self.log_priors[pos] - self.log_priors[j])
            log_ratios = tuple(lc[pos] - lc[j] for lc in self.log_cond)
        else:
            rest_priors = self.priors[rest]
            rest_mass = rest_priors.sum()
            prior_log_ratio = float(self.log_priors[pos] - np.log(rest_mass))
            log_ratios = tuple(
                lc[pos] - np.log(rest_priors @ c[rest] / rest_mass) for lc, c in zip(self.log_cond, self.cond)
            )

        # E_m = sum_p marginal(m, p) * log-ratio(m, p), computed once per pair
        expectations = np.array([float(m @ r) for m, r in zip(self.marginal, log_ratios)])
        tables = ContrastTables(
            pos=pos, neg=key[1], prior_log_ratio=prior_log_ratio, log_ratios=log_ratios, expectations=expectations
        )
        self._contrasts[key] = tables
        return tables

    def log_odds_batch(self, parts: np.ndarray, pos: int, neg: Optional[int]) -> np.ndarray:
        parts = self.check_parts(np.atleast_2d(parts))
        tables = self.contrast(pos, neg)
        score = np.full(parts.shape[0], tables.prior_log_ratio)
        for i, ratio in enumerate(tables.log_ratios):
            score += self.weights[i] * ratio[parts[:, i]]
        return score

    def log_odds(self, x: np.ndarray, pos: int, neg: Optional[int]) -> float:
        """Natural log of P(Y_pos | x) / P(Y_neg | x) through the prior and per-variable ratios"""
        return float(self.log_odds_batch(np.asarray(x)[None, :], pos, neg)[0])

    def with_weights(self, weights: Sequence[float]) -> "NaiveBayesModel":
        return replace(self, weights=np.asarray(weights, dtype=np.float64))


def resolve_weights(weights: Union[str, Sequence[float], Dict[str, float]], feature_names: List[str]) -> np.ndarray:
    """
    Turn a weights argument into a d-vector

    Args:
        weights: "uniform", a sequence of d values, or a mapping variable -> weight (others 1.0)
        feature_names: Variables in model order
    """
    d = len(feature_names)
    if isinstance(weights, str):
        if weights != "uniform":
            raise UsageError(f"Unknown weights specification '{weights}'")
        vector = np.ones(d)
    elif isinstance(weights, dict):
        unknown = sorted(set(weights) - set(feature_names))
        if unknown:
            raise UsageError(f"Weights given for unknown variables {unknown}")
        vector = np.array([float(weights.get(name, 1.0)) for name in feature_names])
    else:
        vector = np.asarray(list(weights), dtype=np.float64)
        if vector.shape != (d,):
            raise UsageError(f"Expected {d} weights, got {vector.size}")
    if np.any(~np.isfinite(vector)) or np.any((vector < 0) | (vector > 1)):
        raise UsageError(f"Weights must lie in [0, 1], got {vector.tolist()}")
    return vector


def load_weights_file(path: str) -> Dict[str, float]:
    """Read a JSON object mapping variable names to weights"""
    if not os.path.isfile(path):
        raise UsageError(f"Weights file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as e:
        raise UsageError(f"Weights file {path} is not valid JSON: {str(e)}")
    if not isinstance(doc, dict):
        raise UsageError(f"Weights file {path} must hold a JSON object of variable -> weight")
    return {str(k): float(v) for k, v in doc.items()}


def roc_auc(scores: np.ndarray, positive: np.ndarray) -> Optional[float]:
    """Area under the ROC curve from the rank-sum statistic; None when a side is empty"""
    n_pos = int(positive.sum())
    n_neg = int(positive.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


class NaiveBayesTrainer:
    """Service estimating a weighted naive Bayes model from encoded data"""

    def __init__(self, smoothing: float = 0.5, marginal_mode: str = "empirical"):
        if smoothing < 0 or not np.isfinite(smoothing):
            raise FitError(f"Smoothing must be a non-negative number, got {smoothing}")
        if marginal_mode not in ("empirical", "mixture"):
            raise FitError(f"Unknown marginal mode '{marginal_mode}'")
        self.smoothing = float(smoothing)
        self.marginal_mode = marginal_mode

    def fit(
        self,
        parts: PartDataset,
        prep: Preprocessor,
        weights: Union[str, Sequence[float], Dict[str, float]] = "uniform",
    ) -> NaiveBayesModel:
        """
        Estimate priors, conditionals and marginals with pseudo-count smoothing

        Args:
            parts: Encoded training rows with class labels
            prep: Preprocessor that produced the encoding
            weights: "uniform", d values in [0, 1], or a mapping variable -> weight

        Returns:
            NaiveBayesModel: fitted model carrying its training accuracy and AUC
        """
        if parts.labels is None:
            raise FitError("Training data has no class column")
        n = parts.n_rows
        if n < 1:
            raise FitError("Cannot fit a model on an empty dataset")

        schema = parts.schema
        k = schema.n_classes
        lam = self.smoothing
        labels = parts.labels
        class_counts = np.bincount(labels, minlength=k).astype(np.float64)
        if lam == 0 and np.any(class_counts == 0):
            missing = [schema.class_labels[j] for j in np.flatnonzero(class_counts == 0)]
            raise FitError(f"Smoothing 0 with classes never observed: {missing}")

        cond, marginal = [], []
        for i, (name, p) in enumerate(zip(prep.feature_names, prep.part_counts)):
            joint = np.zeros((k, p))
            np.add.at(joint, (labels, parts.parts[:, i]), 1.0)
            if lam == 0 and np.any(joint == 0):
                klass, part = np.argwhere(joint == 0)[0]
                raise FitError(
                    f"Smoothing 0 with a zero count: variable '{name}', class '{schema.class_labels[klass]}', "
                    f"part {part} would give log(0)"
                )
            cond.append((joint + lam) / (class_counts[:, None] + lam * p))
            marginal.append((joint.sum(axis=0) + lam) / (n + lam * p))

        priors = (class_counts + lam) / (n + lam * k)
        if self.marginal_mode == "mixture":
            marginal = [priors @ c for c in cond]

        model = NaiveBayesModel(
            schema=schema,
            preprocessor=prep,
            priors=priors,
            cond=tuple(cond),
            marginal=tuple(marginal),
            weights=resolve_weights(weights, prep.feature_names),
            smoothing=lam,
            marginal_mode=self.marginal_mode,
        )
        summary = self._training_summary(model, parts)
        logger.info(
            f"Trained naive Bayes on {n} rows, {model.n_features} variables, {k} classes; "
            f"accuracy={summary['accuracy']:.4f} auc={summary['auc']}"
        )
        return replace(model, training=summary)

    def _training_summary(self, model: NaiveBayesModel, parts: PartDataset) -> Dict[str, Any]:
        proba = model.predict_proba_batch(parts.parts)
        labels = parts.labels
        accuracy = float(np.mean(proba.argmax(axis=1) == labels))
        if model.n_classes == 2:
            auc = roc_auc(proba[:, 1], labels == 1)
        else:
            per_class = [roc_auc(proba[:, c], labels == c) for c in range(model.n_classes)]
            defined = [a for a in per_class if a is not None]
            auc = float(np.mean(defined)) if defined else None
        return {"accuracy": accuracy, "auc": auc, "n_rows": parts.n_rows}


def model_to_dict(model: NaiveBayesModel) -> Dict[str, Any]:
    return {
        "version": MODEL_FORMAT_VERSION,
        "schema": model.schema.model_dump(),
        "class_labels": model.class_labels,
        "variables": model.feature_names,
        "priors": model.priors.tolist(),
        "partitions": model.preprocessor.to_dict(),
        "cond": [c.tolist() for c in model.cond],
        "marginal": [m.tolist() for m in model.marginal],
        "weights": model.weights.tolist(),
        "smoothing": model.smoothing,
        "marginal_mode": model.marginal_mode,
        "training": model.training,
    }


def model_from_dict(doc: Dict[str, Any]) -> NaiveBayesModel:
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("Model document has no version tag")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise ModelVersionError(f"Unsupported model format version '{doc['version']}', expected '{MODEL_FORMAT_VERSION}'")
    try:
        schema = Schema.model_validate(doc["schema"])
        if list(doc["class_labels"]) != schema.class_labels:
            raise ModelFormatError("class_labels disagree with the stored schema")
        return NaiveBayesModel(
            schema=schema,
            preprocessor=Preprocessor.from_dict(doc["partitions"]),
            priors=np.asarray(doc["priors"], dtype=np.float64),
            cond=tuple(np.asarray(c, dtype=np.float64) for c in doc["cond"]),
            marginal=tuple(np.asarray(m, dtype=np.float64) for m in doc["marginal"]),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            smoothing=float(doc["smoothing"]),
            marginal_mode=str(doc.get("marginal_mode", "empirical")),
            training=doc.get("training"),
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"Malformed model document: {str(e)}")


def save_model(model: NaiveBayesModel, path: str) -> None:
    """
    Write the model file

    Probabilities are JSON numbers in shortest round-trip form: up to 17 significant digits,
    as many as a value needs to read back bit-exact (0.5 stays "0.5").
    """
    write_json(path, model_to_dict(model))
    logger.info(f"Saved model to {path}")


def load_model(path: str) -> NaiveBayesModel:
    """Read a model file and re-check every model invariant"""
    if not os.path.isfile(path):
        raise ModelFormatError(f"Model file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Model file {path} is not valid JSON: {str(e)}")
    model = model_from_dict(doc)
    logger.info(f"Loaded model from {path}: {model.n_features} variables, classes {model.class_labels}")
    return model
