"""Minimal PGM/PPM readers and writers.

PPM input supports both plain (P3) and binary (P6) variants; grids are
persisted as plain-text PGM (P2) so diffs stay readable.
"""
from __future__ import annotations

import numpy as np


def _tokens(data: bytes):
    """Yield whitespace-separated header/ascii tokens, skipping comments."""
    pos = 0
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            eol = data.find(b"\n", pos)
            pos = n if eol < 0 else eol + 1
        else:
            end = pos
            while end < n and not data[end : end + 1].isspace():
                end += 1
            yield pos, data[pos:end]
            pos = end


def read_ppm(path) -> np.ndarray:
    """Read a P3 or P6 PPM into an (H, W, 3) uint8 array."""
    data = open(path, "rb").read()
    toks = _tokens(data)
    _, magic = next(toks)
    if magic not in (b"P3", b"P6"):
        raise ValueError(f"not a PPM file: magic {magic!r}")
    header = []
    for pos, tok in toks:
        header.append((pos, int(tok)))
        if len(header) == 3:
            break
    if len(header) < 3:
        raise ValueError("truncated PPM header")
    (_, width), (_, height), (maxpos, maxval) = header
    count = width * height * 3
    if magic == b"P6":
        # binary pixels start one whitespace byte after maxval
        start = maxpos + len(str(maxval)) + 1
        raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=start)
        pixels = raw.astype(np.uint8)
    else:
        vals = [int(tok) for _, tok in toks]
        if len(vals) < count:
            raise ValueError("truncated P3 pixel data")
        pixels = np.array(vals[:count], dtype=np.uint8)
    if maxval != 255:
        pixels = (pixels.astype(np.float64) * 255.0 / maxval).round().astype(np.uint8)
    return pixels.reshape(height, width, 3)


def write_ppm(path, image: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as binary P6."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) array")
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(image.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a plain-text P2 PGM into an (H, W) int array."""
    data = open(path, "rb").read()
    toks = _tokens(data)
    _, magic = next(toks)
    if magic != b"P2":
        raise ValueError(f"not a plain PGM file: magic {magic!r}")
    vals = [int(tok) for _, tok in toks]
    if len(vals) < 3:
        raise ValueError("truncated PGM header")
    width, height, _maxval = vals[:3]
    pixels = vals[3:]
    if len(pixels) < width * height:
        raise ValueError("truncated PGM pixel data")
    return np.array(pixels[: width * height], dtype=np.int64).reshape(height, width)


def write_pgm(path, grid: np.ndarray, maxval: int = 255) -> None:
    """Write an (H, W) integer array as plain-text P2."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("expected an (H, W) array")
    if grid.min() < 0 or grid.max() > maxval:
        raise ValueError("pixel values outside [0, maxval]")
    h, w = grid.shape
    lines = [f"P2", f"{w} {h}", str(maxval)]
    for row in grid:
        lines.append(" ".join(str(int(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
