"""Label taxonomies and label-map I/O.

The pipeline ingests per-pixel label maps produced by an upstream pixel
classifier. Ten raw codes describe the typography in detail; layout logic
only consumes the six-way grouping defined by ``to_informative``.

Supported interchange formats:
  * format A: binary PGM (P5), maxval 255, pixel value = raw code;
  * format B: indexed PNG plus a JSON sidecar mapping palette index to raw code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from io import BytesIO
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np
from PIL import Image


class RawLabel(IntEnum):
    """Raw per-pixel codes used on disk (canonical code table, version 1)."""

    BACKGROUND = 0
    CHARACTER = 1
    INTER_CHARACTER = 2
    INTER_WORD = 3
    TITLE_CHARACTER = 4
    TITLE_INTER_CHARACTER = 5
    TITLE_INTER_WORD = 6
    VERTICAL_SEPARATOR = 7
    HORIZONTAL_SEPARATOR = 8
    NOISE = 9


class InformativeLabel(IntEnum):
    """Six-way grouping consumed by all layout logic."""

    BACKGROUND = 0
    TEXT_LINE = 1
    TITLE = 2
    VERTICAL_SEPARATOR = 3
    HORIZONTAL_SEPARATOR = 4
    NOISE = 5


N_RAW_LABELS = 10

# Raw code -> informative code. The three title-family codes collapse to TITLE,
# the three text-family codes to TEXT_LINE, the rest map one-to-one.
RAW_TO_INFORMATIVE = np.array(
    [
        InformativeLabel.BACKGROUND,
        InformativeLabel.TEXT_LINE,
        InformativeLabel.TEXT_LINE,
        InformativeLabel.TEXT_LINE,
        InformativeLabel.TITLE,
        InformativeLabel.TITLE,
        InformativeLabel.TITLE,
        InformativeLabel.VERTICAL_SEPARATOR,
        InformativeLabel.HORIZONTAL_SEPARATOR,
        InformativeLabel.NOISE,
    ],
    dtype=np.uint8,
)


def to_informative(raw: int) -> InformativeLabel:
    """Map one raw code to its informative label. Total over valid codes."""
    if not 0 <= int(raw) < N_RAW_LABELS:
        raise ValueError(f"raw label code out of range: {raw}")
    return InformativeLabel(int(RAW_TO_INFORMATIVE[int(raw)]))


def canonical_code_table() -> dict:
    """The shipped, versioned raw-code table (see data/label_codes.json)."""
    with resources.files("newsgrid").joinpath("data/label_codes.json").open("rb") as fh:
        return json.load(fh)


class LabelMapError(Exception):
    """Base class for label-map ingestion failures."""


class MalformedHeader(LabelMapError):
    pass


class TruncatedData(LabelMapError):
    pass


class InvalidLabelCode(LabelMapError):
    def __init__(self, position: tuple[int, int], value: int):
        self.position = position
        self.value = value
        super().__init__(f"invalid label code {value} at (x={position[0]}, y={position[1]})")


@dataclass
class LabelImage:
    """Dense per-pixel raw label grid. Immutable by convention after load."""

    labels: np.ndarray  # uint8, shape (height, width)
    dpi: Optional[int] = None

    def __post_init__(self) -> None:
        if self.labels.ndim != 2 or self.labels.size == 0:
            raise ValueError("label grid must be a non-empty 2D array")
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def validate(self) -> None:
        bad = np.argwhere(self.labels >= N_RAW_LABELS)
        if bad.size:
            y, x = bad[0]
            raise InvalidLabelCode((int(x), int(y)), int(self.labels[y, x]))

    def informative(self) -> np.ndarray:
        """Informative-code view of the grid (uint8, same shape)."""
        return RAW_TO_INFORMATIVE[self.labels]


def _read_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skips whitespace and '#' comment lines, per the netpbm header grammar.
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise MalformedHeader("unexpected end of PGM header")
    return data[start:pos], pos


def load_pgm(source: Union[bytes, BinaryIO, str, Path]) -> LabelImage:
    """Load a format-A label map (PGM P5, maxval 255, pixel value = raw code)."""
    data = _as_bytes(source)
    if not data.startswith(b"P5"):
        raise MalformedHeader("not a P5 PGM stream")
    pos = 2
    try:
        wtok, pos = _read_pgm_token(data, pos)
        htok, pos = _read_pgm_token(data, pos)
        mtok, pos = _read_pgm_token(data, pos)
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except ValueError as exc:
        raise MalformedHeader(f"non-numeric PGM header field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise MalformedHeader(f"maxval must be 255, got {maxval}")
    pos += 1  # single whitespace byte separates header from raster
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise TruncatedData(f"expected {width * height} pixels, got {len(raster)}")
    grid = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    img = LabelImage(grid.copy())
    img.validate()
    return img


def save_pgm(img: LabelImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.labels.tobytes()


def load_indexed_png(
    png_source: Union[bytes, BinaryIO, str, Path],
    palette_source: Union[bytes, BinaryIO, str, Path],
) -> LabelImage:
    """Load a format-B label map: indexed PNG + JSON palette sidecar."""
    pil = Image.open(BytesIO(_as_bytes(png_source)))
    if pil.mode != "P":
        raise MalformedHeader(f"expected indexed (mode P) PNG, got mode {pil.mode}")
    indices = np.asarray(pil, dtype=np.uint8)

    try:
        table = json.loads(_as_bytes(palette_source))
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"palette sidecar is not valid JSON: {exc}") from exc
    if not isinstance(table, dict) or not table:
        raise MalformedHeader("palette sidecar must be a non-empty object")

    lut = np.full(256, 255, dtype=np.uint8)  # 255 marks unmapped palette slots
    for key, value in table.items():
        try:
            idx = int(key)
        except ValueError as exc:
            raise MalformedHeader(f"non-integer palette index {key!r}") from exc
        if not 0 <= idx <= 255:
            raise MalformedHeader(f"palette index {idx} out of range")
        if not isinstance(value, int) or not 0 <= value < N_RAW_LABELS:
            raise MalformedHeader(f"palette entry {idx} maps to invalid raw code {value!r}")
        lut[idx] = value

    mapped = lut[indices]
    bad = np.argwhere(mapped >= N_RAW_LABELS)
    if bad.size:
        y, x = bad[0]
        raise InvalidLabelCode((int(x), int(y)), int(indices[y, x]))
    img = LabelImage(mapped)
    img.validate()
    return img


def save_indexed_png(img: LabelImage) -> tuple[bytes, bytes]:
    """Serialize to format B: (png bytes, palette sidecar bytes). Identity palette."""
    pil = Image.fromarray(img.labels, mode="P")
    # Grayscale ramp palette keeps the file viewable; indices equal raw codes.
    ramp = []
    for i in range(256):
        v = min(255, i * 25)
        ramp.extend([v, v, v])
    pil.putpalette(ramp)
    buf = BytesIO()
    pil.save(buf, format="PNG")
    palette = {str(code): code for code in range(N_RAW_LABELS)}
    sidecar = json.dumps(palette, indent=2, sort_keys=True).encode("ascii") + b"\n"
    return buf.getvalue(), sidecar


def load_label_image(
    source: Union[bytes, BinaryIO, str, Path],
    fmt: str = "pgm",
    palette_source: Union[bytes, BinaryIO, str, Path, None] = None,
) -> LabelImage:
    """Dispatch on the declared format: 'pgm' (format A) or 'png' (format B)."""
    if fmt == "pgm":
        return load_pgm(source)
    if fmt == "png":
        if palette_source is None:
            if isinstance(source, (str, Path)):
                palette_source = Path(source).with_suffix(".palette.json")
            else:
                raise MalformedHeader("format B requires a palette sidecar")
        return load_indexed_png(source, palette_source)
    raise ValueError(f"unknown label map format: {fmt}")


def load_label_image_path(path: Union[str, Path]) -> LabelImage:
    """Load by file extension (.pgm -> format A, .png -> format B)."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".pgm":
        return load_pgm(path)
    if ext == ".png":
        return load_indexed_png(path, path.with_suffix(".palette.json"))
    raise ValueError(f"unrecognized label map extension: {path.name}")


def _as_bytes(source: Union[bytes, BinaryIO, str, Path]) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()
