#!/usr/bin/env python3
"""
Agreement Service
Kendall tau-b and Pearson correlations between attribution methods, row by row and on global importances
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..exceptions import UndefinedCorrelationError, UsageError
from ..models.schemas import AgreementReport, SamplingConfig
from .explainer import AttributionExplainer, canonical_method

logger = logging.getLogger(__name__)


def _paired(a: Sequence[float], b: Sequence[float]):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise UsageError(f"Correlation needs two vectors of equal length, got shapes {a.shape} and {b.shape}")
    if a.size < 2:
        raise UsageError(f"Correlation needs at least 2 values, got {a.size}")
    return a, b


def kendall_tau_b(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Kendall rank correlation with tie correction

    Args:
        a: First vector
        b: Second vector of the same length

    Returns:
        float: (C - D) / sqrt((n0 - t_a)(n0 - t_b)) in [-1, 1]
    """
    a, b = _paired(a, b)
    upper = np.triu_indices(a.size, k=1)
    sign_a = np.sign(a[:, None] - a[None, :])[upper]
    sign_b = np.sign(b[:, None] - b[None, :])[upper]
    # pairs untied on a side are exactly n0 - t for that side
    untied_a = float(np.count_nonzero(sign_a))
    untied_b = float(np.count_nonzero(sign_b))
    if untied_a == 0 or untied_b == 0:
        raise UndefinedCorrelationError(f"Kendall tau-b undefined: one side is fully tied ({a.tolist()} / {b.tolist()})")
    score = float(np.sum(sign_a * sign_b))
    return max(-1.0, min(1.0, score / math.sqrt(untied_a * untied_b)))


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Product-moment correlation; zero variance on either side is undefined"""
    a, b = _paired(a, b)
    da = a - a.mean()
    db = b - b.mean()
    ss_a = float(da @ da)
    ss_b = float(db @ db)
    if ss_a == 0.0 or ss_b == 0.0:
        raise UndefinedCorrelationError("Pearson correlation undefined: a side has zero variance")
    return max(-1.0, min(1.0, float(da @ db) / math.sqrt(ss_a * ss_b)))


def rowwise_agreement(a: np.ndarray, b: np.ndarray, method_a: str = "a", method_b: str = "b") -> AgreementReport:
    """
    Mean and population standard deviation of the per-row Kendall tau-b

    Args:
        a: N x d attributions of the first method
        b: N x d attributions of the second method

    Returns:
        AgreementReport: row-wise fields filled; rows with an undefined tau are skipped and counted
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise UsageError(f"Attribution matrices differ in shape: {a.shape} vs {b.shape}")
    if a.shape[1] < 2:
        raise UsageError(f"Row-wise agreement needs at least 2 variables, got {a.shape[1]}")

    taus = []
    skipped = 0
    for row_a, row_b in zip(a, b):
        try:
            taus.append(kendall_tau_b(row_a, row_b))
        except UndefinedCorrelationError:
            skipped += 1
    if not taus:
        raise UndefinedCorrelationError(f"Kendall tau-b is undefined on all {len(a)} rows")
    if skipped:
        logger.warning(f"Skipped {skipped} of {len(a)} rows with an undefined Kendall tau-b")

    mean = math.fsum(taus) / len(taus)
    std = math.sqrt(math.fsum((t - mean) ** 2 for t in taus) / len(taus))
    return AgreementReport(
        method_a=method_a,
        method_b=method_b,
        n_rows=len(a),
        skipped_rows=skipped,
        rowwise_kendall_mean=max(-1.0, min(1.0, mean)),
        rowwise_kendall_std=std,
    )


def global_agreement(
    explainer: AttributionExplainer,
    parts: np.ndarray,
    method_a: str,
    method_b: str,
    pos: Optional[int] = None,
    neg: Optional[int] = None,
    sampling: Optional[SamplingConfig] = None,
    background: Optional[np.ndarray] = None,
) -> AgreementReport:
    """Pearson and Kendall correlations between the global importance vectors of two methods"""
    global_a = explainer.global_importance(parts, method_a, pos, neg, sampling, background).values
    global_b = explainer.global_importance(parts, method_b, pos, neg, sampling, background).values
    return AgreementReport(
        method_a=canonical_method(method_a),
        method_b=canonical_method(method_b),
        n_rows=len(parts),
        global_pearson=pearson(global_a, global_b),
        global_kendall=kendall_tau_b(global_a, global_b),
        global_a=global_a,
        global_b=global_b,
    )


def compare_methods(
    explainer: AttributionExplainer,
    parts: np.ndarray,
    method_a: str,
    method_b: str,
    pos: Optional[int] = None,
    neg: Optional[int] = None,
    sampling: Optional[SamplingConfig] = None,
    background: Optional[np.ndarray] = None,
) -> AgreementReport:
    """
    Full agreement report: row-wise tau-b plus correlations of the global importances

    Each attribution matrix is computed once and reused for both halves of the report.
    """
    matrix_a = explainer.explain_all(parts, method_a, pos, neg, sampling, background)
    matrix_b = explainer.explain_all(parts, method_b, pos, neg, sampling, background)
    rowwise = rowwise_agreement(matrix_a, matrix_b, canonical_method(method_a), canonical_method(method_b))

    global_a = np.abs(matrix_a).mean(axis=0).tolist()
    global_b = np.abs(matrix_b).mean(axis=0).tolist()
    correlations = {}
    for name, fn in (("global_pearson", pearson), ("global_kendall", kendall_tau_b)):
        try:
            correlations[name] = fn(global_a, global_b)
        except UndefinedCorrelationError as e:
            logger.warning(f"{name} left empty: {str(e)}")
            correlations[name] = None

    report = rowwise.model_copy(update={"global_a": global_a, "global_b": global_b, **correlations})
    logger.info(
        f"Agreement {report.method_a} vs {report.method_b}: row-wise tau-b "
        f"{report.rowwise_kendall_mean:.4f} +/- {report.rowwise_kendall_std:.4f}, "
        f"global pearson={report.global_pearson} kendall={report.global_kendall}"
    )
    return report
