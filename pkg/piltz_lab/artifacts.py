"""
Persistence for every file the lab writes: atomic replacement, checksums and
provenance headers.
"""
import hashlib
import io
import json
import logging
import os
import tempfile

import pandas as pd

from piltz_lab import config

logger = logging.getLogger(__name__)


# --- Low-level writes ---
def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_text_atomic(path: str, text: str) -> str:
    """Write text to path via a temp file in the same directory and os.replace."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug("Wrote %s (%d bytes)", path, len(text))
    return path


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


# --- Provenance ---
def provenance(run_config, checkpoint=None) -> dict:
    """Tool version, config hash, resolved config and checkpoint identity."""
    record = {
        "tool_version": config.TOOL_VERSION,
        "config_hash": run_config.config_hash(),
        "config": run_config.canonical(),
    }
    if checkpoint is not None:
        record["checkpoint"] = checkpoint.describe()
    return record


def render_csv(frame: pd.DataFrame, run_config, checkpoint=None, summary: dict = None) -> str:
    """CSV text preceded by '#'-prefixed provenance lines and an optional scalar summary."""
    meta = provenance(run_config, checkpoint)
    lines = [
        f"# tool_version={meta['tool_version']}",
        f"# config_hash={meta['config_hash']}",
        "# config=" + json.dumps(meta["config"], sort_keys=True, separators=(",", ":")),
    ]
    if "checkpoint" in meta:
        lines.append("# checkpoint=" + json.dumps(meta["checkpoint"], sort_keys=True, separators=(",", ":")))
    if summary is not None:
        lines.append("# summary=" + json.dumps(summary, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n" + frame_to_csv(frame)


def render_json(result, run_config, checkpoint=None) -> str:
    """JSON text with a top-level provenance object next to the result."""
    document = {"provenance": provenance(run_config, checkpoint), "result": result}
    return json.dumps(document, sort_keys=True, indent=2) + "\n"
