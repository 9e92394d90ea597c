"""
Shared fixtures: the three-variable toy model, random models and small CSV files
"""

import numpy as np
import pytest

from bayes_attrib.models.schemas import ColumnSpec, Schema
from bayes_attrib.services.naive_bayes import NaiveBayesModel
from bayes_attrib.services.preprocessor import Preprocessor, VariablePartition
from bayes_attrib.services.synthetic import synthetic_model

LOG4 = float(np.log(4.0))
LOG_1_5 = float(np.log(1.5))
X_AAA = np.array([0, 0, 0])
Y0, Y1 = 0, 1


def binary_preprocessor(names):
    return Preprocessor(
        partitions=tuple(
            VariablePartition(variable=name, kind="groups", groups={"a": 0, "b": 1}, n_groups=2, fallback=1)
            for name in names
        )
    )


def make_synth3(marginal_x1=(0.5, 0.5), priors=(0.5, 0.5), weights=(1.0, 1.0, 1.0)) -> NaiveBayesModel:
    """Uniform priors; x1, x2, x3 with P(a | Y1) = 0.8, 0.6, 0.5 and P(a | Y0) = 0.2, 0.4, 0.5"""
    names = ["x1", "x2", "x3"]
    schema = Schema(
        columns=[ColumnSpec(name=n, kind="categorical") for n in names] + [ColumnSpec(name="y", kind="categorical")],
        target="y",
        class_labels=["Y0", "Y1"],
    )
    cond = (
        np.array([[0.2, 0.8], [0.8, 0.2]]),
        np.array([[0.4, 0.6], [0.6, 0.4]]),
        np.array([[0.5, 0.5], [0.5, 0.5]]),
    )
    marginal = (np.array(marginal_x1), np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    return NaiveBayesModel(
        schema=schema,
        preprocessor=binary_preprocessor(names),
        priors=np.array(priors),
        cond=cond,
        marginal=marginal,
        weights=np.array(weights),
        smoothing=0.5,
    )


@pytest.fixture
def synth3() -> NaiveBayesModel:
    return make_synth3()


@pytest.fixture
def all_parts3() -> np.ndarray:
    """The 8 part combinations of three binary variables"""
    return np.array([[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)])


def random_model(seed: int, d=None, n_classes: int = 2) -> NaiveBayesModel:
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 11)) if d is None else d
    counts = rng.integers(2, 6, size=d).tolist()
    priors = rng.dirichlet(np.full(n_classes, 2.0))
    return synthetic_model(counts, n_classes=n_classes, seed=seed, weights=rng.random(d), priors=priors)


def random_instance(model: NaiveBayesModel, rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.integers(0, p) for p in model.part_counts])


@pytest.fixture
def random_models():
    return [random_model(seed) for seed in range(100)]


@pytest.fixture
def mixed_csv(tmp_path):
    """Numeric, categorical and missing cells with a two-class target"""
    path = tmp_path / "mixed.csv"
    lines = ["age,color,class"]
    colors = ["red", "blue", "red", "green", "red", "blue", "?", "red", "blue", "red"]
    for i in range(20):
        label = "yes" if i % 3 == 0 else "no"
        age = "" if i == 5 else str(20 + i)
        lines.append(f"{age},{colors[i % 10]},{label}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
