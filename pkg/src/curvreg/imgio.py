"""Grayscale image reading and writing.

PGM (P2 ASCII and P5 binary) is the canonical format: dependency-free,
diffable, and lossless for 8-bit data. Loaded values are mapped linearly to
[0, 255] whatever the file's maxval, so downstream code sees one intensity
convention. PNG input (8- or 16-bit grayscale) is supported when Pillow is
installed.
"""

from __future__ import annotations

import os

import numpy as np

from curvreg.errors import CorruptFileError, UnsupportedFormatError
from curvreg.fields import ScalarField

__all__ = ["load_image", "save_pgm"]

_WHITESPACE = b" \t\r\n\x0b\x0c"
_MAX_DIM = 1 << 20


class _Tokens:
    """PGM header tokenizer that remembers byte offsets for error messages."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def skip_separators(self) -> None:
        blob = self.blob
        n = len(blob)
        while self.pos < n:
            c = blob[self.pos:self.pos + 1]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == b"#":
                while self.pos < n and blob[self.pos:self.pos + 1] != b"\n":
                    self.pos += 1
            else:
                return

    def next_token(self, what: str) -> tuple[bytes, int]:
        self.skip_separators()
        if self.pos >= len(self.blob):
            raise CorruptFileError(f"unexpected end of file reading {what}",
                                   offset=self.pos)
        start = self.pos
        blob = self.blob
        n = len(blob)
        while (self.pos < n and blob[self.pos:self.pos + 1] not in _WHITESPACE
               and blob[self.pos:self.pos + 1] != b"#"):
            self.pos += 1
        return blob[start:self.pos], start

    def next_int(self, what: str, lo: int, hi: int) -> int:
        tok, start = self.next_token(what)
        try:
            val = int(tok)
        except ValueError:
            raise CorruptFileError(
                f"{what} is not an integer: {tok!r}", offset=start) from None
        if not lo <= val <= hi:
            raise CorruptFileError(
                f"{what} {val} outside [{lo}, {hi}]", offset=start)
        return val


def _parse_header(toks: _Tokens) -> tuple[int, int, int]:
    width = toks.next_int("width", 1, _MAX_DIM)
    height = toks.next_int("height", 1, _MAX_DIM)
    maxval = toks.next_int("maxval", 1, 65535)
    return width, height, maxval


def _load_p2(toks: _Tokens) -> np.ndarray:
    width, height, maxval = _parse_header(toks)
    count = width * height
    values = np.empty(count, dtype=np.float64)
    for i in range(count):
        values[i] = toks.next_int(f"pixel {i}", 0, maxval)
    toks.skip_separators()
    if toks.pos < len(toks.blob):
        raise CorruptFileError("trailing data after pixel values",
                               offset=toks.pos)
    return values.reshape(height, width) * (255.0 / maxval)


def _load_p5(toks: _Tokens) -> np.ndarray:
    width, height, maxval = _parse_header(toks)
    # exactly one separator byte between maxval and the raster
    if toks.pos >= len(toks.blob) or \
            toks.blob[toks.pos:toks.pos + 1] not in _WHITESPACE:
        raise CorruptFileError("missing separator before binary raster",
                               offset=toks.pos)
    toks.pos += 1
    raster = toks.blob[toks.pos:]
    bytes_per = 2 if maxval > 255 else 1
    expected = width * height * bytes_per
    if len(raster) != expected:
        raise CorruptFileError(
            f"raster has {len(raster)} bytes, expected {expected}",
            offset=toks.pos)
    dtype = ">u2" if bytes_per == 2 else np.uint8
    values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    if values.max(initial=0.0) > maxval:
        bad = int(np.argmax(values > maxval))
        raise CorruptFileError(
            f"pixel {bad} exceeds maxval {maxval}",
            offset=toks.pos + bad * bytes_per)
    return values.reshape(height, width) * (255.0 / maxval)


def _load_png(path: str) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise UnsupportedFormatError(
            "PNG support requires Pillow (install the 'png' extra)"
        ) from None
    with Image.open(path) as img:
        if img.mode == "L":
            return np.asarray(img, dtype=np.float64)
        if img.mode in ("I", "I;16", "I;16B"):
            arr = np.asarray(img, dtype=np.float64)
            return arr * (255.0 / 65535.0)
        raise UnsupportedFormatError(
            f"PNG mode {img.mode!r} is not grayscale")


def _as_field(arr: np.ndarray) -> ScalarField:
    height, width = arr.shape
    if height < 3 or width < 3:
        raise UnsupportedFormatError(
            f"image is {width}x{height}; fields require at least 3x3")
    return ScalarField(arr)


def load_image(path: str | os.PathLike) -> ScalarField:
    """Read a PGM (P2/P5) or grayscale PNG file as a field in [0, 255].

    Values are scaled by 255/maxval (or 255/65535 for 16-bit PNG) so every
    source format lands on the same intensity range.  Images smaller than
    3x3 are rejected: difference stencils need three nodes per axis.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] == b"\x89PNG\r\n\x1a\n":
        return _as_field(_load_png(path))
    toks = _Tokens(blob)
    magic, start = toks.next_token("magic number") if blob else (b"", 0)
    if magic == b"P2":
        return _as_field(_load_p2(toks))
    if magic == b"P5":
        return _as_field(_load_p5(toks))
    raise UnsupportedFormatError(
        f"unrecognized image format (magic {magic!r}); expected PGM P2/P5 "
        "or PNG")


def save_pgm(field: ScalarField, path: str | os.PathLike,
             binary: bool = True) -> None:
    """Write a field as an 8-bit PGM, clipping to [0, 255] and rounding.

    ``binary`` selects P5; otherwise ASCII P2. Both forms round-trip
    bit-identically through load_image.
    """
    data = np.clip(np.rint(field.data), 0, 255).astype(np.uint8)
    height, width = data.shape
    header = f"{width} {height}\n255\n"
    with open(os.fspath(path), "wb") as fh:
        if binary:
            fh.write(b"P5\n" + header.encode("ascii"))
            fh.write(data.tobytes())
        else:
            fh.write(b"P2\n" + header.encode("ascii"))
            lines = (" ".join(str(v) for v in row) for row in data)
            fh.write("\n".join(lines).encode("ascii"))
            fh.write(b"\n")
