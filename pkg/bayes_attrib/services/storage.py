#!/usr/bin/env python3
"""
Storage Helpers
Atomic file output shared by the model store, reports and CSV writers
"""

import json
import logging
import os
import tempfile
from typing import Any, Dict

logger = logging.getLogger(__name__)


def atomic_write_text(path: str, text: str) -> None:
    """
    Write text to path through a temporary file in the same directory and a rename

    Args:
        path: Destination file
        text: Full file content
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(prefix=".tmp_", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_path, path)
    except Exception:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    logger.debug(f"Wrote {len(text)} characters to {path}")


def dump_json(document: Dict[str, Any]) -> str:
    """Serialize with sorted keys; floats use the shortest exact round-trip representation"""
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str, document: Dict[str, Any]) -> None:
    atomic_write_text(path, dump_json(document))
