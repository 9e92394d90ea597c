#!/usr/bin/env python3
"""
Configuration
Environment-driven settings, loaded once from the process environment and an optional .env file
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    """Process-wide defaults; command-line flags take precedence"""

    threads: int = Field(default=1, ge=1, description="Worker count used when --threads is absent")
    log_level: str = Field(default="INFO", description="Root logging level")
    seed: int = Field(default=42, description="Default seed for every sampled computation")


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    return int(raw)


def get_settings() -> Settings:
    """Read settings from the environment (BAYES_ATTRIB_* variables)"""
    return Settings(
        threads=_env_int("BAYES_ATTRIB_THREADS", os.cpu_count() or 1),
        log_level=os.getenv("BAYES_ATTRIB_LOG_LEVEL", "INFO").upper(),
        seed=_env_int("BAYES_ATTRIB_SEED", 42),
    )
