"""
Bayes Attrib Services Package
Core services for data loading, discretization, naive Bayes modeling, attribution and agreement analysis
"""

from .data_loader import Dataset, DatasetLoader, Instance
from .preprocessor import PartDataset, PartitionFitter, Preprocessor, VariablePartition
from .naive_bayes import ContrastTables, NaiveBayesModel, NaiveBayesTrainer, load_model, save_model
from .explainer import AttributionExplainer, normalize
from .oracle import Coalition, PermutationSampler
from .agreement import compare_methods, kendall_tau_b, pearson, rowwise_agreement
from .benchmark import BenchmarkRunner

__all__ = [
    "Dataset",
    "DatasetLoader",
    "Instance",
    "PartDataset",
    "PartitionFitter",
    "Preprocessor",
    "VariablePartition",
    "ContrastTables",
    "NaiveBayesModel",
    "NaiveBayesTrainer",
    "load_model",
    "save_model",
    "AttributionExplainer",
    "normalize",
    "Coalition",
    "PermutationSampler",
    "compare_methods",
    "kendall_tau_b",
    "pearson",
    "rowwise_agreement",
    "BenchmarkRunner",
]
