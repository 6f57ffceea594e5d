"""CSV schema checks shared by every figure script."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input CSV does not match the figure's declared schema."""


@dataclass(frozen=True)
class FigureSpec:
    """Declared inputs for one figure kind."""

    kind: str
    inputs: tuple            # (path, expected columns or None) pairs
    output: Path
    xlabel: str = ""
    ylabel: str = ""
    log_x: bool = False

    def validate(self) -> None:
        for path, columns in self.inputs:
            p = Path(path)
            if not p.exists():
                raise SchemaError("%s input not found: %s" % (self.kind, p))
            if columns is not None:
                header = p.read_text().split("\n", 1)[0].split(",")
                if header != list(columns):
                    raise SchemaError(
                        "%s: %s has columns %s, expected %s"
                        % (self.kind, p, header, list(columns)))


def read_table(path, columns=None) -> np.ndarray:
    """Load a headered numeric CSV, optionally enforcing its columns."""
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln != ""]
    header = lines[0].split(",")
    if columns is not None and header != list(columns):
        raise SchemaError("%s has columns %s, expected %s"
                          % (path, header, list(columns)))
    rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
    return np.array(rows, dtype=np.float64)
