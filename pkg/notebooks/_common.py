"""Shared helpers for the narrative scripts: output folder and optional plotting."""

import os
from pathlib import Path

OUT = Path(os.environ.get("INSIDERLAB_OUT", Path(__file__).resolve().parent / "output"))
OUT.mkdir(parents=True, exist_ok=True)


def pyplot():
    """Return matplotlib's pyplot with a file backend, or None if it is missing."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping figures")
        return None
    return plt
