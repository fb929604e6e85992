"""Binary PGM (P5) reading and writing for grayscale images in [0, 1].

Intensities are stored as ``round(v * 255)`` with maxval 255. The writer is
byte-deterministic: identical arrays produce identical files.
"""

from __future__ import annotations

import numpy as np

MAXVAL = 255


def encode_pgm(img: np.ndarray) -> bytes:
    """Encode a float image in [0, 1] as a binary P5 PGM."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if img.size == 0:
        raise ValueError("empty image")
    if np.min(img) < 0.0 or np.max(img) > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    h, w = img.shape
    header = f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii")
    data = np.rint(img * MAXVAL).astype(np.uint8).tobytes()
    return header + data


def decode_pgm(blob: bytes) -> np.ndarray:
    """Decode a binary P5 PGM into a float64 image in [0, 1]."""
    if not blob.startswith(b"P5"):
        raise ValueError("not a binary PGM (missing P5 magic)")
    # Header: magic, width, height, maxval, then a single whitespace byte
    # before the raster. Comments (# ...) are permitted between tokens.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(blob[start:pos])
    pos += 1  # single whitespace separating header from raster
    w, h, maxval = (int(t) for t in tokens)
    if w <= 0 or h <= 0:
        raise ValueError(f"bad PGM dimensions {w}x{h}")
    if maxval != MAXVAL:
        raise ValueError(f"unsupported maxval {maxval} (expected {MAXVAL})")
    raster = blob[pos : pos + w * h]
    if len(raster) != w * h:
        raise ValueError("truncated PGM raster")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(h, w)
    return data.astype(np.float64) / MAXVAL


def write_pgm(path, img: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(img))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_pgm(f.read())
