"""
Persisted exact prefix sums S_k(n) at stride points.

A checkpoint file is a CSV:

    k,stride,limit
    3,10000,1000000
    n,S
    10000,...
    ...
    sha256:<hex of everything above this line>

S is written as a decimal string; LF line endings throughout.
"""
import bisect
import io
import logging
import math
import os
import time

import numpy as np
import pandas as pd

from piltz_lab import config
from piltz_lab.artifacts import frame_to_csv, sha256_hex, write_text_atomic
from piltz_lab.divisor.sieve import check_order, range_sum
from piltz_lab.errors import ChecksumError, CoverageError, DomainError, VerificationError
from piltz_lab.parallel import map_ordered

logger = logging.getLogger(__name__)

_CHECKSUM_PREFIX = "sha256:"
_MAX_ENTRIES = 10**6
_VERIFY_FRACTION = 0.01
# strides per worker between partial-file flushes
CELLS_PER_FLUSH = 64


def stride_sum(k: int, lo: int, hi: int, block_size: int = None) -> int:
    """Work unit of a checkpoint build: Σ_{lo <= n < hi} d_k(n)."""
    return range_sum(k, lo, hi, block_size)


class SummatoryCheckpoint:
    """
    Exact S_k(n) at n = stride, 2*stride, ..., limit.

    S_k(0) = 0 is implicit, so every n in [0, limit] has an entry at or below it.
    """

    def __init__(self, k: int, stride: int, limit: int, entries, path: str = None, checksum: str = None):
        self.k = k
        self.stride = stride
        self.limit = limit
        self.entries = [(0, 0)] + [(int(n), int(s)) for n, s in entries]
        self.path = path
        self.checksum = checksum
        self._points = [n for n, _ in self.entries]
        for (n0, s0), (n1, s1) in zip(self.entries, self.entries[1:]):
            if not (n1 > n0 and s1 > s0):
                raise ChecksumError(f"checkpoint entries not strictly increasing at n={n1}")

    @property
    def coverage(self) -> int:
        return self.limit

    def floor_entry(self, n: int):
        """The (m, S_k(m)) with the largest m <= n."""
        idx = bisect.bisect_right(self._points, n) - 1
        return self.entries[idx]

    def describe(self) -> dict:
        return {
            "file": os.path.basename(self.path) if self.path else None,
            "k": self.k,
            "stride": self.stride,
            "limit": self.limit,
            "sha256": self.checksum,
        }

    def __len__(self):
        return len(self.entries) - 1

    def __repr__(self):
        return f"SummatoryCheckpoint(k={self.k}, stride={self.stride}, limit={self.limit})"


# --- File format ---
def checkpoint_filename(k: int, stride: int, limit: int) -> str:
    """Content address: (k, stride, limit, format version)."""
    return f"piltz_k{k}_s{stride}_l{limit}_v{config.CHECKPOINT_FORMAT_VERSION}.csv"


def render_checkpoint(k: int, stride: int, limit: int, entries) -> str:
    header = frame_to_csv(pd.DataFrame([{"k": k, "stride": stride, "limit": limit}]))
    rows = pd.DataFrame(
        {"n": [str(n) for n, _ in entries], "S": [str(s) for _, s in entries]},
        columns=["n", "S"],
    )
    payload = header + frame_to_csv(rows)
    return payload + _CHECKSUM_PREFIX + sha256_hex(payload) + "\n"


def save_checkpoints(checkpoint: SummatoryCheckpoint, cache_dir: str) -> str:
    path = os.path.join(cache_dir, checkpoint_filename(checkpoint.k, checkpoint.stride, checkpoint.limit))
    text = render_checkpoint(checkpoint.k, checkpoint.stride, checkpoint.limit, checkpoint.entries[1:])
    write_text_atomic(path, text)
    checkpoint.path = path
    checkpoint.checksum = text.rsplit(_CHECKSUM_PREFIX, 1)[1].strip()
    return path


def load_checkpoints(path: str) -> SummatoryCheckpoint:
    """Read and checksum-verify a checkpoint file."""
    if not os.path.exists(path):
        raise ChecksumError(f"checkpoint file {path} is missing")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        text = handle.read()
    payload, sep, tail = text.rpartition(_CHECKSUM_PREFIX)
    if not sep:
        raise ChecksumError(f"{path}: no checksum line")
    checksum = tail.strip()
    if sha256_hex(payload) != checksum:
        raise ChecksumError(f"{path}: payload does not match its checksum")

    lines = payload.split("\n")
    meta = pd.read_csv(io.StringIO("\n".join(lines[:2])), dtype=str).iloc[0]
    rows = pd.read_csv(io.StringIO("\n".join(lines[2:])), dtype=str)
    entries = list(zip(map(int, rows["n"]), map(int, rows["S"])))
    return SummatoryCheckpoint(
        int(meta["k"]), int(meta["stride"]), int(meta["limit"]), entries, path=path, checksum=checksum
    )


# --- Building ---
def _cell_bounds(stride: int, first: int, cells: int):
    return [(c * stride + 1, (c + 1) * stride + 1) for c in range(first, cells)]


def _stride_sums(k, bounds, block_size, threads, backend):
    if backend == "celery":
        from celery import group

        from piltz_lab.worker import stride_sum_task

        job = group(stride_sum_task.s(k, lo, hi, block_size) for lo, hi in bounds)
        return [int(total) for total in job.apply_async().get()]
    return map_ordered(stride_sum, [(k, lo, hi, block_size) for lo, hi in bounds], threads)


def partial_filename(k: int, stride: int, limit: int) -> str:
    return checkpoint_filename(k, stride, limit)[: -len(".csv")] + ".partial.csv"


def _load_partial(path: str, k: int, stride: int, limit: int):
    """Finished prefix of an interrupted build, or [] when absent or unusable."""
    if not os.path.exists(path):
        return []
    try:
        partial = load_checkpoints(path)
    except (ChecksumError, ValueError, KeyError) as exc:
        logger.warning("Discarding unreadable partial checkpoint %s: %s", path, exc)
        return []
    entries = partial.entries[1:]
    expected = [(c + 1) * stride for c in range(len(entries))]
    if (partial.k, partial.stride, partial.limit) != (k, stride, limit) or [n for n, _ in entries] != expected:
        logger.warning("Discarding partial checkpoint %s: it belongs to another build", path)
        return []
    return entries


def _verify_sample(checkpoint: SummatoryCheckpoint, block_size: int) -> int:
    """Recompute a random 1% (at least one) of the stride sums."""
    cells = len(checkpoint)
    sample = max(1, math.ceil(cells * _VERIFY_FRACTION))
    rng = np.random.default_rng(checkpoint.k * 1_000_003 + cells)
    picks = np.sort(rng.choice(cells, size=min(sample, cells), replace=False))
    for c in picks:
        c = int(c)
        n0, s0 = checkpoint.entries[c]
        n1, s1 = checkpoint.entries[c + 1]
        recomputed = stride_sum(checkpoint.k, n0 + 1, n1 + 1, block_size)
        if recomputed != s1 - s0:
            raise VerificationError(
                f"checkpoint k={checkpoint.k} stride ({n0}, {n1}]: stored {s1 - s0}, recomputed {recomputed}"
            )
    return len(picks)


def build_checkpoints(
    k: int,
    limit: int,
    stride: int,
    cache_dir: str = None,
    threads: int = 1,
    backend: str = "local",
    block_size: int = None,
) -> SummatoryCheckpoint:
    """
    Build, persist and spot-verify S_k at every multiple of stride up to limit.

    An existing file for the same (k, stride, limit, format) is reused after
    its checksum is verified. Finished strides are flushed to a checksummed
    partial file as the build goes, and an interrupted build resumes from it.
    """
    check_order(k)
    limit, stride = int(limit), int(stride)
    if stride < 1 or limit < stride or limit % stride:
        raise DomainError(f"limit {limit} must be a positive multiple of stride {stride}")
    cells = limit // stride
    if cells > _MAX_ENTRIES:
        raise DomainError(f"{cells} checkpoint entries requested; raise the stride")
    cache_dir = config.CACHE_DIR if cache_dir is None else cache_dir
    block_size = config.BLOCK_SIZE if block_size is None else block_size

    path = os.path.join(cache_dir, checkpoint_filename(k, stride, limit))
    if os.path.exists(path):
        logger.info("Reusing checkpoint %s", path)
        return load_checkpoints(path)

    partial_path = os.path.join(cache_dir, partial_filename(k, stride, limit))
    entries = _load_partial(partial_path, k, stride, limit)
    if entries:
        logger.info("Resuming d_%d build at stride %d of %d from %s", k, len(entries), cells, partial_path)
    started = time.perf_counter()
    batch = CELLS_PER_FLUSH * max(1, threads)
    while len(entries) < cells:
        first = len(entries)
        bounds = _cell_bounds(stride, first, min(cells, first + batch))
        running = entries[-1][1] if entries else 0
        for c, part in enumerate(_stride_sums(k, bounds, block_size, threads, backend), start=first + 1):
            running += int(part)
            entries.append((c * stride, running))
        if len(entries) < cells:
            write_text_atomic(partial_path, render_checkpoint(k, stride, limit, entries))
            logger.debug("d_%d build: %d of %d strides flushed", k, len(entries), cells)
    logger.info(
        "Sieved d_%d up to %d in %.1fs (%d strides, backend=%s)",
        k, limit, time.perf_counter() - started, cells, backend,
    )

    save_checkpoints(SummatoryCheckpoint(k, stride, limit, entries), cache_dir)
    if os.path.exists(partial_path):
        os.remove(partial_path)
    reloaded = load_checkpoints(path)
    checked = _verify_sample(reloaded, block_size)
    logger.info("Checkpoint %s written; %d strides re-verified", path, checked)
    return reloaded


def ensure_checkpoints(k: int, need: int, stride: int = None, cache_dir: str = None, **kwargs) -> SummatoryCheckpoint:
    """A checkpoint whose coverage reaches need, rounded up to whole strides."""
    stride = config.CHECKPOINT_STRIDE if stride is None else int(stride)
    limit = max(1, -(-int(need) // stride)) * stride
    return build_checkpoints(k, limit, stride, cache_dir=cache_dir, **kwargs)


def summatory(k: int, x, checkpoints: SummatoryCheckpoint, block_size: int = None) -> int:
    """S_k(floor(x)) exactly: nearest checkpoint at or below, plus one partial sieve."""
    if checkpoints.k != k:
        raise DomainError(f"checkpoint is for k={checkpoints.k}, not k={k}")
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    n = math.floor(x)
    if n > checkpoints.coverage:
        raise CoverageError(f"x = {x} is beyond checkpoint coverage {checkpoints.coverage}")
    base_n, base_s = checkpoints.floor_entry(n)
    return base_s + range_sum(k, base_n + 1, n + 1, block_size)
