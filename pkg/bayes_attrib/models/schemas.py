#!/usr/bin/env python3
"""
Schemas
Typed documents for datasets, attributions, sampling, agreement reports and run configuration
"""

import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ColumnKind = Literal["numeric", "categorical"]
AttributionMethod = Literal["shapley", "woe", "shapley_multiclass", "bruteforce", "sampling"]


class ColumnSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, description="Header name")
    kind: ColumnKind = Field(..., description="numeric or categorical")


class Schema(BaseModel):
    """Column layout of a tabular classification dataset"""

    model_config = ConfigDict(frozen=True)

    columns: List[ColumnSpec] = Field(..., description="Every column in file order, target included")
    target: str = Field(..., description="Name of the class column")
    class_labels: List[str] = Field(..., description="Class labels in first-appearance order")

    @model_validator(mode="after")
    def _check_layout(self) -> "Schema":
        names = [column.name for column in self.columns]
        if len(set(names)) != len(names):
            duplicates = sorted({name for name in names if names.count(name) > 1})
            raise ValueError(f"Duplicate column names: {duplicates}")
        if names.count(self.target) != 1:
            raise ValueError(f"Target '{self.target}' must appear exactly once among {names}")
        if len(self.class_labels) < 2:
            raise ValueError(f"At least 2 class labels required, got {self.class_labels}")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise ValueError(f"Class labels must be unique: {self.class_labels}")
        return self

    @property
    def feature_columns(self) -> List[ColumnSpec]:
        return [column for column in self.columns if column.name != self.target]

    @property
    def feature_names(self) -> List[str]:
        return [column.name for column in self.feature_columns]

    @property
    def n_features(self) -> int:
        return len(self.feature_columns)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def class_index(self, label: str) -> int:
        try:
            return self.class_labels.index(label)
        except ValueError:
            raise ValueError(f"Unknown class label '{label}'; valid labels: {self.class_labels}")

    def restrict(self, keep: List[str]) -> "Schema":
        """Schema keeping only the named feature columns (target always kept)"""
        unknown = [name for name in keep if name not in self.feature_names]
        if unknown:
            raise ValueError(f"Unknown feature columns {unknown}; available: {self.feature_names}")
        columns = [c for c in self.columns if c.name == self.target or c.name in keep]
        return Schema(columns=columns, target=self.target, class_labels=list(self.class_labels))


class Attribution(BaseModel):
    """Per-instance, per-variable contribution vector"""

    method: AttributionMethod
    pos_class: Optional[int] = Field(None, description="Positive class index; None for multiclass sums")
    neg_class: Optional[int] = Field(None, description="Negative class index; None means the pooled rest")
    values: List[float]
    instance_index: Optional[int] = None
    per_class: Optional[List[List[float]]] = Field(
        None, description="Signed one-vs-rest vectors, one per class (multiclass only)"
    )

    @model_validator(mode="after")
    def _check_values(self) -> "Attribution":
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("Attribution values must be finite")
        if self.method == "shapley_multiclass" and any(v < 0 for v in self.values):
            raise ValueError("Multiclass attribution values must be non-negative")
        return self


class GlobalImportance(BaseModel):
    """Mean absolute attribution per variable over a dataset"""

    method: str
    values: List[float]
    n_rows: int = Field(..., ge=1)

    @field_validator("values")
    @classmethod
    def _non_negative(cls, values: List[float]) -> List[float]:
        if any(v < 0 for v in values):
            raise ValueError("Global importances must be non-negative")
        return values


class SamplingConfig(BaseModel):
    """Budget and semantics of the permutation estimator"""

    n_permutations: int = Field(..., ge=1, description="Number of random variable orderings")
    seed: int = Field(42, ge=0, lt=2**64)
    value_fn: Literal["log_odds", "posterior"] = "posterior"
    background: Literal["marginal", "knowledge"] = "marginal"
    knowledge_rows: int = Field(100, ge=1, description="Knowledge-table size N_k")
    mc_draws: int = Field(2000, ge=1, description="Draws per coalition when exact summation is too large")
    exact_limit: int = Field(10**6, ge=1, description="Largest part product summed exactly")


class AgreementReport(BaseModel):
    """Row-wise and global agreement between two attribution methods"""

    method_a: str
    method_b: str
    n_rows: int = Field(0, ge=0)
    skipped_rows: int = Field(0, ge=0)
    std_kind: Literal["population"] = "population"
    rowwise_kendall_mean: Optional[float] = None
    rowwise_kendall_std: Optional[float] = Field(None, ge=0.0)
    global_pearson: Optional[float] = None
    global_kendall: Optional[float] = None
    global_a: Optional[List[float]] = None
    global_b: Optional[List[float]] = None

    @field_validator("rowwise_kendall_mean", "global_pearson", "global_kendall")
    @classmethod
    def _in_unit_range(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
            raise ValueError(f"Correlation {value} outside [-1, 1]")
        return value


class RunConfig(BaseModel):
    """Validated command-line invocation"""

    command: Literal["train", "explain", "verify", "compare", "global", "bench"]
    data: Optional[str] = None
    model: Optional[str] = None
    out: Optional[str] = None
    csv: Optional[str] = None
    target: Optional[str] = None
    columns: Optional[List[str]] = None
    bins: int = Field(10, ge=1)
    max_groups: int = Field(10, ge=1)
    strict: bool = False
    smoothing: float = Field(0.5, ge=0.0)
    marginal: Literal["empirical", "mixture"] = "empirical"
    weights: Optional[str] = None
    method: str = "shapley"
    method_b: Optional[str] = None
    class_label: Optional[str] = None
    against: Optional[str] = None
    value_fn: Literal["log_odds", "posterior"] = "posterior"
    background: Literal["marginal", "knowledge"] = "marginal"
    knowledge_rows: int = Field(100, ge=1)
    budget: int = Field(200, ge=1)
    seed: int = Field(42, ge=0, lt=2**64)
    rows: int = Field(20, ge=1)
    tol: float = Field(1e-9, gt=0.0)
    missing: List[str] = Field(default_factory=lambda: ["", "?"])
    threads: int = Field(1, ge=1)
    normalize: bool = False
    near_proba: Optional[List[float]] = None
    bench_rows: int = Field(50_000, ge=1)
    bench_d: List[int] = Field(default_factory=lambda: [10, 20, 40, 80])
    bench_p: int = Field(5, ge=1)
    bench_budgets: List[int] = Field(default_factory=lambda: [50, 100, 200])
    sampling_rows: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _required_paths(self) -> "RunConfig":
        required = {
            "train": ["data", "target", "out"],
            "explain": ["model", "data", "out"],
            "verify": ["model", "data"],
            "compare": ["model", "data", "out"],
            "global": ["model", "data", "out"],
            "bench": ["out"],
        }[self.command]
        missing = [name for name in required if getattr(self, name) in (None, "")]
        if missing:
            flags = ", ".join(f"--{name}" for name in missing)
            raise ValueError(f"'{self.command}' requires {flags}")
        if self.command == "compare" and not self.method_b:
            raise ValueError("'compare' requires --b")
        if self.near_proba is not None and not all(0.0 <= p <= 1.0 for p in self.near_proba):
            raise ValueError(f"--near-proba values must lie in [0, 1], got {self.near_proba}")
        if any(d < 1 for d in self.bench_d) or any(b < 1 for b in self.bench_budgets):
            raise ValueError("--d and --budgets values must be positive")
        return self
