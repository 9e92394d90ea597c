#!/usr/bin/env python3
"""
Benchmark Service
Wall-clock timing of explain-all on synthetic data across dimensions and sampling budgets
"""

import logging
import time
from typing import List, Sequence

import numpy as np
import pandas as pd

from ..models.schemas import SamplingConfig
from .explainer import AttributionExplainer
from .storage import atomic_write_text
from .synthetic import sample_parts, synthetic_model

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["method", "n", "d", "p", "budget", "seconds"]


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


class BenchmarkRunner:
    """Service timing analytic and sampled attributions on generated data"""

    def __init__(self, seed: int = 42, n_jobs: int = 1, knowledge_rows: int = 100, repeats: int = 3):
        self.seed = seed
        self.n_jobs = n_jobs
        self.knowledge_rows = knowledge_rows
        self.repeats = repeats
        logger.info(f"Benchmark runner initialized (seed={seed}, workers={n_jobs})")

    def time_explain_all(self, n_rows: int, d: int, p: int, method: str) -> float:
        """Best of several explain-all runs over N x d synthetic rows with p parts per variable"""
        model = synthetic_model([p] * d, seed=self.seed + d)
        parts = sample_parts(model, n_rows, seed=self.seed)
        explainer = AttributionExplainer(model)
        explainer.explain_all(parts[:1], method, 1, 0)
        return min(_timed(lambda: explainer.explain_all(parts, method, 1, 0)) for _ in range(self.repeats))

    def time_sampling(self, n_rows: int, d: int, p: int, budget: int) -> float:
        """Posterior-mode permutation sampling against a knowledge table drawn from the synthetic rows"""
        model = synthetic_model([p] * d, seed=self.seed + d)
        background = sample_parts(model, max(n_rows, self.knowledge_rows), seed=self.seed + 1)
        parts = background[:n_rows]
        config = SamplingConfig(
            n_permutations=budget,
            seed=self.seed,
            value_fn="posterior",
            background="knowledge",
            knowledge_rows=self.knowledge_rows,
        )
        explainer = AttributionExplainer(model, n_jobs=self.n_jobs)
        return _timed(lambda: explainer.explain_all(parts, "sampling", 1, 0, config, background))

    def run(
        self,
        rows: int,
        dims: Sequence[int],
        p: int,
        budgets: Sequence[int],
        sampling_rows: int,
    ) -> pd.DataFrame:
        """
        Time every configuration

        Args:
            rows: N for the analytic and WoE timings
            dims: Variable counts d
            p: Parts per variable
            budgets: Permutation budgets for the sampling estimator
            sampling_rows: Rows explained per sampling timing (run at the smallest d)

        Returns:
            pd.DataFrame: one row per (method, n, d, p, budget) with its seconds
        """
        records: List[dict] = []
        for d in dims:
            for method in ("shapley", "woe"):
                seconds = self.time_explain_all(rows, d, p, method)
                records.append({"method": method, "n": rows, "d": d, "p": p, "budget": 0, "seconds": seconds})
                logger.info(f"{method}: N={rows} d={d} P={p} took {seconds:.4f}s")

        d_min = min(dims)
        for budget in budgets:
            seconds = self.time_sampling(sampling_rows, d_min, p, budget)
            records.append(
                {"method": "sampling", "n": sampling_rows, "d": d_min, "p": p, "budget": budget, "seconds": seconds}
            )
            logger.info(f"sampling: N={sampling_rows} d={d_min} budget={budget} took {seconds:.4f}s")

        return pd.DataFrame.from_records(records, columns=BENCH_COLUMNS)


def write_bench_csv(frame: pd.DataFrame, path: str) -> None:
    text = frame.to_csv(index=False, lineterminator="\n", float_format="%.6f")
    atomic_write_text(path, text)
    logger.info(f"Wrote {len(frame)} timing rows to {path}")


def linear_slope_ratio(frame: pd.DataFrame, method: str = "shapley") -> float:
    """Largest ratio between seconds-per-variable across the timed dimensions (1.0 is perfectly linear)"""
    subset = frame[frame["method"] == method]
    per_variable = (subset["seconds"] / subset["d"]).to_numpy()
    return float(np.max(per_variable) / np.min(per_variable))
