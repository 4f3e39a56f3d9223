"""Atomic file writes: write a sibling temp file, then rename over the target."""

from __future__ import annotations

import os
from pathlib import Path


def atomic_write_text(path: Path | str, content: str) -> Path:
    """Write ``content`` to ``path`` so readers never observe a partial file.

    Returns:
        The destination path.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(f"{target.name}.tmp-{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()
    return target
