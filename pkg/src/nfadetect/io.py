"""Score map, mask and detection-list I/O.

Supported score-map formats:

* PGM ``P2`` (ASCII) and ``P5`` (binary), maxval <= 65535.  Integer pixel
  values are normalized to [0, 1] by dividing by maxval.
* PNG, 8-bit or 16-bit single-channel grayscale, normalized by 255 or 65535.
* ``raw-f32``: an ASCII header line ``SMAP <width> <height>\\n`` followed by
  width*height little-endian IEEE-754 32-bit floats, row-major.  Values are
  used as-is and must be finite and inside [0, 1].

Masks are stored as PGM P5 with maxval 255 (0 = background, 255 = target);
any nonzero value loads as 1.

Detection lists are plain UTF-8 text: a header line ``x y w h z0 zlen kappa
nu S`` and one space-separated record per detection, sorted by descending
significance, with S printed to 6 significant digits.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .detector import Box3D, Detection

DETECTION_HEADER = "x y w h z0 zlen kappa nu S"

_PGM_MAXVAL_LIMIT = 65535


class FormatError(ValueError):
    """A file does not parse under its declared format."""


class RangeError(ValueError):
    """A raw-f32 payload value is non-finite or outside [0, 1]."""


@dataclass(frozen=True)
class ScoreMap:
    """2D grid of real-valued detection scores in [0, 1], row-major."""

    scores: np.ndarray  # float64, shape (height, width)

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"scores must be a non-empty 2D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("scores must be finite and within [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def height(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """2D grid of {0, 1} values, row-major."""

    values: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2D grid, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def _infer_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".pnm"):
        return "pgm"
    if ext == ".png":
        return "png-gray"
    return "raw-f32"


def load_scoremap(path: str, fmt: str = "auto") -> ScoreMap:
    """Load a score map; ``fmt`` is one of pgm, png-gray, raw-f32 or auto."""
    if fmt == "auto":
        fmt = _infer_format(path)
    if fmt == "pgm":
        values, maxval = _read_pgm(path)
        return ScoreMap(values.astype(np.float64) / float(maxval))
    if fmt == "png-gray":
        return _load_png_gray(path)
    if fmt == "raw-f32":
        return _load_raw_f32(path)
    raise ValueError(f"unknown score-map format {fmt!r}")


def save_scoremap(smap: ScoreMap, path: str) -> None:
    """Write a score map in the raw-f32 format (lossless for float32 data)."""
    with open(path, "wb") as fh:
        fh.write(f"SMAP {smap.width} {smap.height}\n".encode("ascii"))
        fh.write(smap.scores.astype("<f4").tobytes())


def _load_raw_f32(path: str) -> ScoreMap:
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3 or parts[0] != b"SMAP":
            raise FormatError(f"{path}: bad raw-f32 header {header!r}")
        try:
            width, height = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: bad raw-f32 dimensions in {header!r}") from exc
        if width < 1 or height < 1:
            raise FormatError(f"{path}: non-positive dimensions {width}x{height}")
        payload = fh.read()
    expected = width * height * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: expected {expected} payload bytes, got {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    bad = ~np.isfinite(values) | (values < 0.0) | (values > 1.0)
    if bad.any():
        i = int(np.argmax(bad))
        raise RangeError(f"{path}: value {values[i]!r} at index {i} outside [0, 1]")
    return ScoreMap(values.reshape(height, width))


def _read_pgm(path: str) -> tuple[np.ndarray, int]:
    """Return (uint values as (h, w) int array, maxval) from a P2/P5 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")

    # Header tokens may be separated by whitespace and '#' comments.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric PGM header fields {tokens}") from exc
    if width < 1 or height < 1 or not (1 <= maxval <= _PGM_MAXVAL_LIMIT):
        raise FormatError(f"{path}: bad PGM dimensions/maxval {width} {height} {maxval}")

    if magic == b"P2":
        fields = data[pos:].split()
        if len(fields) != width * height:
            raise FormatError(
                f"{path}: expected {width * height} samples, got {len(fields)}"
            )
        try:
            values = np.array([int(f) for f in fields], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric P2 sample") from exc
    else:
        pos += 1  # single whitespace byte after maxval
        if maxval < 256:
            raw = np.frombuffer(data, dtype=np.uint8, offset=pos)
        else:
            raw = np.frombuffer(data[pos:], dtype=">u2")
        if raw.size != width * height:
            raise FormatError(
                f"{path}: expected {width * height} samples, got {raw.size}"
            )
        values = raw.astype(np.int64)
    if values.min() < 0 or values.max() > maxval:
        raise FormatError(f"{path}: sample outside [0, maxval={maxval}]")
    return values.reshape(height, width), maxval


def _load_png_gray(path: str) -> ScoreMap:
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise FormatError(f"{path}: not a readable PNG ({exc})") from exc
    if img.format != "PNG":
        raise FormatError(f"{path}: not a PNG file (format {img.format})")
    if img.mode == "L":
        maxval = 255
    elif img.mode in ("I", "I;16"):
        maxval = 65535
    else:
        raise FormatError(
            f"{path}: only single-channel grayscale PNG supported, got mode {img.mode}"
        )
    values = np.asarray(img, dtype=np.int64)
    if values.min() < 0 or values.max() > maxval:
        raise FormatError(f"{path}: sample outside [0, {maxval}]")
    return ScoreMap(values.astype(np.float64) / float(maxval))


def load_mask(path: str) -> BinaryMask:
    """Load a binary mask from a PGM file; any nonzero sample becomes 1."""
    values, _ = _read_pgm(path)
    return BinaryMask((values > 0).astype(np.uint8))


def save_mask(mask: BinaryMask, path: str) -> None:
    """Write a binary mask as PGM P5 with maxval 255."""
    with open(path, "wb") as fh:
        fh.write(f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii"))
        fh.write((mask.values * np.uint8(255)).tobytes())


def save_detections(detections: list[Detection], path: str) -> None:
    """Write detections, sorted by descending significance, one per line."""
    ordered = sorted(detections, key=lambda d: (-d.significance, d.rank))
    lines = [DETECTION_HEADER]
    for det in ordered:
        b = det.box
        lines.append(
            f"{b.x0} {b.y0} {b.w} {b.h} {b.z0} {b.zlen} {b.kappa} {b.nu} "
            f"{det.significance:.6g}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_detections(path: str) -> list[Detection]:
    """Read a detection file written by :func:`save_detections`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != DETECTION_HEADER:
        raise FormatError(f"{path}: missing detection header line")
    out = []
    for rank, line in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != 9:
            raise FormatError(f"{path}: bad detection record {line!r}")
        try:
            x0, y0, w, h, z0, zlen, kappa, nu = (int(f) for f in fields[:8])
            sig = float(fields[8])
        except ValueError as exc:
            raise FormatError(f"{path}: bad detection record {line!r}") from exc
        box = Box3D(x0=x0, y0=y0, w=w, h=h, z0=z0, zlen=zlen, kappa=kappa)
        if box.nu != nu:
            raise FormatError(f"{path}: inconsistent volume in record {line!r}")
        out.append(Detection(box=box, significance=sig, rank=rank))
    return out
