#!/usr/bin/env python3
"""
Preprocessor Service
Equal-frequency intervals for numeric variables, frequency-based value groups for categorical ones
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import EncodingError, FitError, ModelFormatError
from ..models.schemas import Schema
from .data_loader import Dataset, Instance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariablePartition:
    """
    Discrete parts of one variable

    Interval parts are indexed 0..len(cuts) with right-open boundaries; group parts are
    indexed 0..n_groups-1. A dedicated missing part, when present, takes the next index.
    """

    variable: str
    kind: Literal["intervals", "groups"]
    cuts: Tuple[float, ...] = ()
    groups: Dict[str, int] = field(default_factory=dict)
    n_groups: int = 0
    fallback: Optional[int] = None
    missing_part: Optional[int] = None

    def __post_init__(self):
        if self.kind == "intervals":
            if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
                raise ModelFormatError(f"Cut points of '{self.variable}' are not strictly ascending: {self.cuts}")
        else:
            if self.n_groups < 1:
                raise ModelFormatError(f"Variable '{self.variable}' has no value group")
            if any(not 0 <= g < self.n_groups for g in self.groups.values()):
                raise ModelFormatError(f"Group index out of range for '{self.variable}'")
            if self.fallback is not None and not 0 <= self.fallback < self.n_groups:
                raise ModelFormatError(f"Fallback group out of range for '{self.variable}'")
        if self.missing_part is not None and self.missing_part != self.base_parts:
            raise ModelFormatError(f"Missing part of '{self.variable}' must be {self.base_parts}")

    @property
    def base_parts(self) -> int:
        return len(self.cuts) + 1 if self.kind == "intervals" else self.n_groups

    @property
    def part_count(self) -> int:
        return self.base_parts + (1 if self.missing_part is not None else 0)

    def encode_values(self, values: pd.Series) -> np.ndarray:
        """Map a column of raw values onto part indices"""
        missing = values.isna().to_numpy()
        if missing.any() and self.missing_part is None:
            row = int(np.flatnonzero(missing)[0])
            raise EncodingError(f"Missing value in '{self.variable}' (row {row}) but the variable has no missing part")

        if self.kind == "intervals":
            try:
                numbers = values.to_numpy(dtype=np.float64, na_value=np.nan)
            except (TypeError, ValueError):
                raise EncodingError(f"Non-numeric value in numeric variable '{self.variable}'")
            parts = np.searchsorted(np.asarray(self.cuts, dtype=np.float64), numbers, side="right")
        else:
            codes = values.map(self.groups)
            unseen = codes.isna().to_numpy() & ~missing
            if unseen.any():
                if self.fallback is None:
                    row = int(np.flatnonzero(unseen)[0])
                    raise EncodingError(
                        f"Unseen category '{values.iloc[row]}' in '{self.variable}' (row {row}) "
                        "and the partition has no fallback group"
                    )
                codes = codes.where(~unseen, self.fallback)
            parts = codes.fillna(-1).to_numpy(dtype=np.int64)

        parts = np.asarray(parts, dtype=np.int64)
        if missing.any():
            parts[missing] = self.missing_part
        return parts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variable": self.variable,
            "kind": self.kind,
            "cuts": list(self.cuts),
            "groups": dict(self.groups),
            "n_groups": self.n_groups,
            "fallback": self.fallback,
            "missing_part": self.missing_part,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "VariablePartition":
        return cls(
            variable=doc["variable"],
            kind=doc["kind"],
            cuts=tuple(float(c) for c in doc.get("cuts", [])),
            groups={str(k): int(v) for k, v in doc.get("groups", {}).items()},
            n_groups=int(doc.get("n_groups", 0)),
            fallback=doc.get("fallback"),
            missing_part=doc.get("missing_part"),
        )


@dataclass(frozen=True, eq=False)
class PartDataset:
    """Dataset encoded as part indices, one column per feature"""

    schema: Schema
    parts: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def n_rows(self) -> int:
        return int(self.parts.shape[0])


@dataclass(frozen=True)
class Preprocessor:
    """One partition per feature column, in schema feature order"""

    partitions: Tuple[VariablePartition, ...]

    @property
    def feature_names(self) -> List[str]:
        return [p.variable for p in self.partitions]

    @property
    def part_counts(self) -> List[int]:
        return [p.part_count for p in self.partitions]

    def encode(self, dataset: Dataset) -> PartDataset:
        """
        Encode every row of a dataset

        Args:
            dataset: Dataset whose feature columns match the partitions

        Returns:
            PartDataset: N x d part indices plus class indices when the data is labeled
        """
        if dataset.schema.feature_names != self.feature_names:
            raise EncodingError(
                f"Dataset features {dataset.schema.feature_names} do not match the preprocessor {self.feature_names}"
            )
        columns = [p.encode_values(dataset.frame[p.variable]) for p in self.partitions]
        parts = np.column_stack(columns) if columns else np.zeros((dataset.n_rows, 0), dtype=np.int64)
        return PartDataset(schema=dataset.schema, parts=parts.astype(np.int64), labels=dataset.labels)

    def encode_instance(self, instance: Instance) -> np.ndarray:
        if len(instance.values) != len(self.partitions):
            raise EncodingError(f"Instance has {len(instance.values)} values, expected {len(self.partitions)}")
        return np.array(
            [
                p.encode_values(pd.Series([value], dtype=object if p.kind == "groups" else None))[0]
                for p, value in zip(self.partitions, instance.values)
            ],
            dtype=np.int64,
        )

    def to_dict(self) -> List[Dict[str, Any]]:
        return [p.to_dict() for p in self.partitions]

    @classmethod
    def from_dict(cls, docs: List[Dict[str, Any]]) -> "Preprocessor":
        return cls(partitions=tuple(VariablePartition.from_dict(doc) for doc in docs))


class PartitionFitter:
    """Service fitting a Preprocessor on a loaded dataset"""

    def __init__(self, max_bins: int = 10, max_groups: int = 10, strict: bool = False):
        if max_bins < 1 or max_groups < 1:
            raise FitError(f"max_bins and max_groups must be >= 1, got {max_bins} and {max_groups}")
        self.max_bins = max_bins
        self.max_groups = max_groups
        self.strict = strict

    def fit(self, dataset: Dataset) -> Preprocessor:
        """
        Fit one partition per feature column

        Args:
            dataset: Training rows

        Returns:
            Preprocessor: intervals for numeric columns, value groups for categorical columns
        """
        if dataset.n_rows == 0:
            raise FitError("Cannot fit partitions on an empty dataset")

        partitions = []
        for spec in dataset.schema.feature_columns:
            column = dataset.frame[spec.name]
            if spec.kind == "numeric":
                partitions.append(self._fit_intervals(spec.name, column))
            else:
                partitions.append(self._fit_groups(spec.name, column))

        prep = Preprocessor(partitions=tuple(partitions))
        logger.info(f"Fitted {len(partitions)} partitions, {sum(prep.part_counts)} parts in total")
        return prep

    def _fit_intervals(self, name: str, column: pd.Series) -> VariablePartition:
        values = column.to_numpy(dtype=np.float64)
        present = values[~np.isnan(values)]
        cuts: Sequence[float] = ()
        if present.size and self.max_bins > 1:
            quantiles = np.quantile(present, np.arange(1, self.max_bins) / self.max_bins)
            candidates = np.unique(quantiles)
            # a cut at or below the minimum would leave part 0 empty
            cuts = tuple(float(c) for c in candidates[candidates > present.min()])
        has_missing = present.size < values.size
        return VariablePartition(
            variable=name,
            kind="intervals",
            cuts=tuple(cuts),
            missing_part=len(cuts) + 1 if has_missing else None,
        )

    def _fit_groups(self, name: str, column: pd.Series) -> VariablePartition:
        missing = column.isna()
        present = column[~missing].astype(str)
        counts = present.value_counts()
        first_seen = {value: i for i, value in enumerate(pd.unique(present))}
        ordered = sorted(first_seen, key=lambda v: (-int(counts[v]), first_seen[v]))

        kept = ordered[: self.max_groups - 1]
        pooled = ordered[self.max_groups - 1:]
        groups = {value: i for i, value in enumerate(kept)}
        if pooled:
            fallback: Optional[int] = len(kept)
            groups.update({value: fallback for value in pooled})
            n_groups = len(kept) + 1
        elif kept:
            n_groups = len(kept)
            fallback = None if self.strict else n_groups - 1
        else:
            n_groups, fallback = 1, 0

        return VariablePartition(
            variable=name,
            kind="groups",
            groups=groups,
            n_groups=n_groups,
            fallback=fallback,
            missing_part=n_groups if bool(missing.any()) else None,
        )
