"""
Bayes Attrib Data Models
Pydantic schemas shared by services and the command line
"""

from .schemas import (
    AgreementReport,
    Attribution,
    ColumnSpec,
    GlobalImportance,
    RunConfig,
    SamplingConfig,
    Schema,
)

__all__ = [
    "AgreementReport",
    "Attribution",
    "ColumnSpec",
    "GlobalImportance",
    "RunConfig",
    "SamplingConfig",
    "Schema",
]
