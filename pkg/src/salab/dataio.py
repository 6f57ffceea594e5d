"""External data formats: MNIST IDX, Stockholm alignments, numeric CSV.

Parsers are strict and byte-faithful; every error names where in the
input it happened. CSV is the interchange format for all experiment
outputs (LF line endings, '.' decimal, values printed with their
shortest round-trip representation).
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .memory import MemoryMatrix, normalize_columns

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
GAP = "-"
_AA_INDEX = {a: i for i, a in enumerate(AMINO_ACIDS)}


class ParseError(ValueError):
    """Malformed external input; `where` names the byte offset or row/col."""

    def __init__(self, message: str, where=None):
        super().__init__(message if where is None else "%s (at %s)" % (message, where))
        self.where = where


# ---------------------------------------------------------------------------
# IDX (MNIST container)

@dataclass(frozen=True)
class IdxImageSet:
    count: int
    rows: int
    cols: int
    pixels: np.ndarray  # (count, rows*cols) uint8


def parse_idx_images(data: bytes) -> IdxImageSet:
    if len(data) < 16:
        raise ParseError("truncated IDX header", where="offset %d" % len(data))
    magic, n, r, c = struct.unpack(">IIII", data[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise ParseError("bad image magic 0x%08x" % magic, where="offset 0")
    need = 16 + n * r * c
    if len(data) < need:
        raise ParseError("truncated IDX payload: need %d bytes" % need,
                         where="offset %d" % len(data))
    if len(data) > need:
        raise ParseError("IDX payload longer than header declares",
                         where="offset %d" % need)
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, r * c)
    return IdxImageSet(n, r, c, pixels)


def parse_idx_labels(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise ParseError("truncated IDX header", where="offset %d" % len(data))
    magic, n = struct.unpack(">II", data[:8])
    if magic != IDX_LABELS_MAGIC:
        raise ParseError("bad label magic 0x%08x" % magic, where="offset 0")
    if len(data) != 8 + n:
        raise ParseError("label payload length mismatch: need %d bytes" % (8 + n),
                         where="offset %d" % min(len(data), 8 + n))
    return np.frombuffer(data, dtype=np.uint8, offset=8).copy()


def serialize_idx_images(images: IdxImageSet) -> bytes:
    head = struct.pack(">IIII", IDX_IMAGES_MAGIC, images.count, images.rows, images.cols)
    return head + images.pixels.astype(np.uint8).tobytes()


def serialize_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", IDX_LABELS_MAGIC, labels.size) + labels.tobytes()


def load_idx_images(path) -> IdxImageSet:
    return parse_idx_images(_read_maybe_gzip(path))


def load_idx_labels(path) -> np.ndarray:
    return parse_idx_labels(_read_maybe_gzip(path))


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def select_class(images: IdxImageSet, labels: np.ndarray, class_id: int,
                 count: int, seed: int | None = None) -> MemoryMatrix:
    """Memory matrix from `count` images of one class, unit-normalized.

    Takes the first `count` in dataset order, or a uniform
    without-replacement subsample when a seed is given. Pixels are used
    as raw byte values; unit normalization removes the global scale.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != images.count:
        raise ValueError("labels and images disagree on count")
    members = np.nonzero(labels == class_id)[0]
    if members.size < count:
        raise ValueError("class %d has only %d members, need %d"
                         % (class_id, members.size, count))
    if seed is None:
        chosen = members[:count]
    else:
        s = rng.Stream(rng.derive(seed, rng.SELECT))
        chosen = members[np.sort(s.choice_without_replacement(members.size, count))]
    cols = images.pixels[chosen].astype(np.float64).T  # (rows*cols, count)
    return normalize_columns(cols, center=False)


# ---------------------------------------------------------------------------
# Stockholm alignments

@dataclass(frozen=True)
class Alignment:
    ids: tuple
    rows: tuple  # aligned residue strings of equal length

    @property
    def K(self) -> int:
        return len(self.rows)

    @property
    def L(self) -> int:
        return len(self.rows[0]) if self.rows else 0


def _clean_residues(seq: str) -> str:
    out = []
    for ch in seq.upper():
        if ch == ".":
            out.append(GAP)
        elif ch in _AA_INDEX or ch == GAP:
            out.append(ch)
        else:
            out.append(GAP)  # nonstandard residues (X, B, Z, ...) become gaps
    return "".join(out)


def parse_stockholm(text: str) -> Alignment:
    """Parse one Stockholm alignment, concatenating wrapped blocks."""
    lines = text.splitlines()
    if not any(ln.startswith("# STOCKHOLM 1.0") for ln in lines[:5]):
        raise ParseError("missing '# STOCKHOLM 1.0' header", where="line 1")
    chunks: dict[str, list] = {}
    order = []
    for ln in lines:
        s = ln.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("//"):
            break
        parts = s.split()
        if len(parts) != 2:
            raise ParseError("malformed sequence line %r" % s[:40])
        name, seq = parts
        if name not in chunks:
            chunks[name] = []
            order.append(name)
        chunks[name].append(_clean_residues(seq))
    if not order:
        raise ParseError("no sequence lines found")
    rows = ["".join(chunks[name]) for name in order]
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ParseError("ragged alignment after concatenation: lengths %s"
                         % sorted(lengths))
    return Alignment(tuple(order), tuple(rows))


def alignment_matrix(a: Alignment) -> np.ndarray:
    """Rows as a (K, L) array of single characters."""
    return np.array([list(r) for r in a.rows])


def filter_alignment(a: Alignment, max_col_gap: float = 0.5,
                     max_seq_gap: float = 0.3) -> Alignment:
    """Drop gappy columns, then gappy sequences.

    Columns whose gap fraction exceeds max_col_gap go first; sequence
    gap fractions are then re-evaluated on the surviving columns.
    """
    if a.K == 0:
        raise ValueError("empty alignment")
    m = alignment_matrix(a)
    gaps = m == GAP
    col_keep = gaps.mean(axis=0) <= max_col_gap
    if not col_keep.any():
        raise ValueError("all columns exceed the gap threshold")
    m = m[:, col_keep]
    seq_keep = (m == GAP).mean(axis=1) <= max_seq_gap
    if not seq_keep.any():
        raise ValueError("all sequences exceed the gap threshold")
    ids = tuple(i for i, k in zip(a.ids, seq_keep) if k)
    rows = tuple("".join(r) for r in m[seq_keep])
    return Alignment(ids, rows)


def one_hot_encode(a: Alignment) -> np.ndarray:
    """(20 L) x K one-hot matrix; gap positions are all-zero blocks."""
    if a.K == 0:
        raise ValueError("empty alignment")
    d = 20 * a.L
    out = np.zeros((d, a.K))
    for k, row in enumerate(a.rows):
        for pos, ch in enumerate(row):
            if ch != GAP:
                out[20 * pos + _AA_INDEX[ch], k] = 1.0
    return out


def one_hot_decode(x: np.ndarray) -> str:
    """Per-position argmax over the 20 channels; ties go to the lowest index.

    A position decodes to a gap only when its block is degenerate: every
    channel <= 0 and all channels equal within 1e-12.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size % 20:
        raise ValueError("decode input length must be a multiple of 20")
    blocks = x.reshape(-1, 20)
    out = []
    for block in blocks:
        if block.max() <= 0.0 and np.ptp(block) <= 1e-12:
            out.append(GAP)
        else:
            out.append(AMINO_ACIDS[int(np.argmax(block))])
    return "".join(out)


# ---------------------------------------------------------------------------
# CSV

def read_csv_matrix(path, has_header: bool = False) -> np.ndarray:
    """Rectangular numeric CSV as a float matrix (header row skipped).

    Writes use LF endings; reads tolerate CRLF input.
    """
    text = Path(path).read_text().replace("\r\n", "\n")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if has_header:
        if not lines:
            raise ParseError("empty CSV", where="row 1")
        lines = lines[1:]
    rows = []
    width = None
    for i, ln in enumerate(lines):
        cells = ln.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError("ragged row: %d cells, expected %d" % (len(cells), width),
                             where="row %d" % (i + 1))
        vals = []
        for j, cell in enumerate(cells):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError("non-numeric cell %r" % cell,
                                 where="row %d, col %d" % (i + 1, j + 1)) from None
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows, dtype=np.float64)


def format_cell(v) -> str:
    """Shortest representation that round-trips a float64."""
    if isinstance(v, str):
        return v
    f = float(v)
    if np.isfinite(f) and f == int(f) and abs(f) < 1e16:
        return str(int(f))
    return repr(f)


def write_csv(path, table, header=None) -> None:
    """Write rows of numbers (or strings) with LF endings."""
    out = []
    if header is not None:
        out.append(",".join(str(h) for h in header))
    for row in np.atleast_2d(np.asarray(table, dtype=object)):
        out.append(",".join(format_cell(v) for v in row))
    Path(path).write_text("\n".join(out) + "\n")
