"""Helpers for machine-readable diagnostics.

All summary statistics are emitted as ``key=value`` lines on the
diagnostic (logging / stderr) stream, never into output files.
"""

import logging


def kv_line(**fields) -> str:
    """Format fields as a single ``key=value`` diagnostic line."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        else:
            parts.append(f"{key}={value}")
    return " ".join(parts)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
