"""Resource ceilings shared by the pipelines.

`PROJANN_CEILING` overrides the default limit of 10**6 on matrix cells, table
entries and polynomial terms.
"""

from __future__ import annotations

import os

DEFAULT_CEILING = 10**6


def ceiling() -> int:
    raw = os.environ.get("PROJANN_CEILING", "").strip()
    if not raw:
        return DEFAULT_CEILING
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"PROJANN_CEILING must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("PROJANN_CEILING must be positive")
    return value
