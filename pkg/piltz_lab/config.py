"""
Configuration for the Piltz divisor laboratory.
"""
import hashlib
import json
import os
from typing import Literal, Optional

from pydantic import BaseModel, Field

# --- Configuration ---
# Every knob can be overridden from the environment, with local defaults.
CACHE_DIR = os.getenv("PILTZ_CACHE_DIR", "./.piltz_cache")
BLOCK_SIZE = int(float(os.getenv("PILTZ_BLOCK_SIZE", str(2**20))))
CHECKPOINT_STRIDE = int(float(os.getenv("PILTZ_CHECKPOINT_STRIDE", "1e6")))
LOG_LEVEL = os.getenv("PILTZ_LOG_LEVEL", "INFO")
REDIS_URL = os.getenv("REDIS_URL", "redis://redis:6379/0")

# --- Fixed constants ---
TOOL_VERSION = "0.1.0"
MAX_K = 6
CHECKPOINT_FORMAT_VERSION = 1
# c in the admissible range 0 < alpha <= c * W^(1/k) of the near-integer count
GAP_ALPHA_CONSTANT = 4.0

# Execution-only knobs never change results, so they stay out of the hash.
_EXECUTION_FIELDS = {"threads", "backend", "out", "record_timing"}


class RunConfig(BaseModel):
    """Fully resolved parameters of one CLI run."""

    command: str
    k: Optional[int] = None
    x: Optional[float] = None
    X: Optional[float] = None
    h: Optional[float] = None
    T: Optional[float] = None
    H: Optional[float] = None
    m: Optional[int] = None
    Y: Optional[float] = None
    eta_frac: Optional[float] = None
    xi: Optional[float] = None
    mode: Literal["exact", "sample"] = "exact"
    samples: int = 1000
    seed: int = 0
    threads: int = 1
    backend: Literal["local", "celery"] = "local"
    cache_dir: str = Field(default_factory=lambda: CACHE_DIR)
    stride: int = Field(default_factory=lambda: CHECKPOINT_STRIDE)
    block_size: int = Field(default_factory=lambda: BLOCK_SIZE)
    out: Optional[str] = None
    record_timing: bool = False
    extra: dict = Field(default_factory=dict)

    def canonical(self) -> dict:
        """The result-relevant part of the config, in canonical key order."""
        data = self.model_dump(exclude=_EXECUTION_FIELDS)
        return json.loads(json.dumps(data, sort_keys=True))

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
