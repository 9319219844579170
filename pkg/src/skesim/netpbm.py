"""Minimal Netpbm codecs: read P1/P2/P4/P5, write P1/P5/P6.

Arrays are ``(height, width)`` for gray/bitmap and ``(height, width, 3)`` for
color, row 0 at the top of the image.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidInputError

__all__ = ["read_pnm", "read_gray", "write_pbm", "write_pgm", "write_ppm"]

_WS = b" \t\n\r\v\f"


class _Tokens:
    """Header tokenizer that understands ``#`` comments anywhere in the header."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos:self.pos + 1]
            if c == b"#":
                while self.pos < len(d) and d[self.pos:self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif c in _WS:
                self.pos += 1
            else:
                break

    def token(self) -> bytes:
        self._skip()
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos:self.pos + 1] not in _WS and d[self.pos:self.pos + 1] != b"#":
            self.pos += 1
        if start == self.pos:
            raise InvalidInputError("truncated Netpbm header")
        return d[start:self.pos]

    def integer(self) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            raise InvalidInputError(f"bad Netpbm header value {tok!r}") from None


def read_pnm(path: str | Path) -> tuple[str, np.ndarray, int]:
    """Return ``(magic, pixels, maxval)``. For bitmaps 1 means black and maxval is 1."""
    data = Path(path).read_bytes()
    tok = _Tokens(data)
    magic = tok.token().decode("ascii", "replace")
    if magic not in ("P1", "P2", "P4", "P5"):
        raise InvalidInputError(f"unsupported Netpbm format {magic!r}")
    width = tok.integer()
    height = tok.integer()
    if width < 1 or height < 1:
        raise InvalidInputError(f"invalid image size {width}x{height}")
    maxval = 1 if magic in ("P1", "P4") else tok.integer()
    if not 0 < maxval < 65536:
        raise InvalidInputError(f"invalid maxval {maxval}")
    n = width * height

    if magic == "P1":
        # plain PBM: whitespace between the 0/1 digits is optional
        body = data[tok.pos:]
        digits = []
        i = 0
        while i < len(body) and len(digits) < n:
            c = body[i:i + 1]
            if c == b"#":
                while i < len(body) and body[i:i + 1] not in (b"\n", b"\r"):
                    i += 1
                continue
            if c in (b"0", b"1"):
                digits.append(c == b"1")
            elif c not in _WS:
                raise InvalidInputError(f"bad PBM pixel {c!r}")
            i += 1
        if len(digits) < n:
            raise InvalidInputError("truncated PBM raster")
        pix = np.array(digits, dtype=np.uint8).reshape(height, width)
    elif magic == "P2":
        vals = []
        for _ in range(n):
            vals.append(tok.integer())
        pix = np.array(vals, dtype=np.uint16 if maxval > 255 else np.uint8).reshape(height, width)
        if pix.max(initial=0) > maxval:
            raise InvalidInputError("PGM sample exceeds maxval")
    else:
        # binary formats: exactly one whitespace byte after the last header token
        start = tok.pos + 1
        if magic == "P4":
            row_bytes = (width + 7) // 8
            if len(data) < start + row_bytes * height:
                raise InvalidInputError("truncated PBM raster")
            raw = np.frombuffer(data, dtype=np.uint8, count=row_bytes * height, offset=start)
            bits = np.unpackbits(raw.reshape(height, row_bytes), axis=1)[:, :width]
            pix = bits.astype(np.uint8)
        else:
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
            need = n * dtype.itemsize
            if len(data) < start + need:
                raise InvalidInputError("truncated PGM raster")
            pix = np.frombuffer(data, dtype=dtype, count=n, offset=start).reshape(height, width)
            pix = pix.astype(np.uint16 if maxval > 255 else np.uint8)
    return magic, pix, maxval


def read_gray(path: str | Path) -> np.ndarray:
    """Read any supported file as 8-bit gray (0 black .. 255 white)."""
    magic, pix, maxval = read_pnm(path)
    if magic in ("P1", "P4"):
        return np.where(pix == 1, 0, 255).astype(np.uint8)
    if maxval == 255:
        return pix.astype(np.uint8)
    return np.rint(pix.astype(np.float64) * 255.0 / maxval).astype(np.uint8)


def write_pbm(path: str | Path, bitmap: np.ndarray) -> None:
    """Plain (P1) bitmap; truthy pixels are written as 1 (black)."""
    b = np.asarray(bitmap).astype(bool)
    h, w = b.shape
    lines = [f"P1\n{w} {h}\n"]
    for row in b:
        # plain PBM lines should stay under 70 characters
        s = "".join("1" if v else "0" for v in row)
        lines.extend(s[i:i + 64] + "\n" for i in range(0, len(s), 64))
    Path(path).write_text("".join(lines), encoding="ascii")


def write_pgm(path: str | Path, gray: np.ndarray) -> None:
    g = np.asarray(gray, dtype=np.uint8)
    h, w = g.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + g.tobytes())


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    c = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = c.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + c.tobytes())
