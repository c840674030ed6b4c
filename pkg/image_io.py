"""
Binary PGM (P5) / PPM (P6) reader and writer for 8-bit images.
"""
import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from wstv_core import ImageFormatError, ShapeError, as_image

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CHANNELS_BY_MAGIC = {b'P5': 1, b'P6': 3}
MAGIC_BY_CHANNELS = {1: b'P5', 3: b'P6'}
SUPPORTED_MAXVAL = 255
HEADER_FIELDS = ('magic', 'width', 'height', 'maxval')
WHITESPACE = b' \t\n\r\v\f'


def read_pnm_header(data: bytes) -> Tuple[int, int, int, int]:
    """
    Parse a PNM header.

    Returns:
        Tuple of (width, height, channels, payload offset)

    Raises:
        ImageFormatError: naming the offending header field
    """
    tokens = []
    pos = 0
    while len(tokens) < len(HEADER_FIELDS):
        while pos < len(data) and data[pos] in WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos] == ord('#'):
            while pos < len(data) and data[pos] not in b'\r\n':
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in WHITESPACE and data[pos] != ord('#'):
            pos += 1
        if start == pos:
            raise ImageFormatError(HEADER_FIELDS[len(tokens)], "missing (truncated header)")
        tokens.append(data[start:pos])

    magic, width_token, height_token, maxval_token = tokens
    if magic not in CHANNELS_BY_MAGIC:
        raise ImageFormatError('magic', f"unsupported format {magic.decode('latin-1')!r} (expected P5 or P6)")

    width = _parse_positive(width_token, 'width')
    height = _parse_positive(height_token, 'height')
    maxval = _parse_positive(maxval_token, 'maxval')
    if maxval != SUPPORTED_MAXVAL:
        raise ImageFormatError('maxval', f"unsupported maxval {maxval} (only {SUPPORTED_MAXVAL} is supported)")

    # Exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos] not in WHITESPACE:
        raise ImageFormatError('payload', "missing separator after maxval")
    return width, height, CHANNELS_BY_MAGIC[magic], pos + 1


def _parse_positive(token: bytes, field: str) -> int:
    try:
        value = int(token.decode('ascii'))
    except (UnicodeDecodeError, ValueError):
        raise ImageFormatError(field, f"not an integer: {token!r}")
    if value < 1:
        raise ImageFormatError(field, f"must be positive, got {value}")
    return value


def load_image(path: PathLike) -> np.ndarray:
    """
    Load an 8-bit P5/P6 file as a float64 (H, W, M) image in [0, 1].

    Raises:
        ImageFormatError: malformed header, truncated payload or unsupported maxval
        OSError: unreadable file
    """
    data = Path(path).read_bytes()
    try:
        width, height, channels, offset = read_pnm_header(data)
    except ImageFormatError as exc:
        raise ImageFormatError(exc.field, exc.detail, path=str(path)) from None

    expected = width * height * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise ImageFormatError('payload', f"truncated: expected {expected} bytes, found {len(payload)}",
                               path=str(path))

    raster = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    logger.debug("Loaded %s (%dx%d, %d channel(s))", path, width, height, channels)
    return raster.astype(np.float64) / 255.0


def quantize(image: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and map to bytes with round-half-away-from-zero."""
    clamped = np.clip(image, 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8)


def save_image(image, path: PathLike) -> None:
    """
    Save an image with 1 or 3 channels as binary PGM/PPM.

    Raises:
        ShapeError: channel count other than 1 or 3
        ImageFormatError: non-finite values, which have no byte encoding
        OSError: unwritable path
    """
    image = as_image(image)
    height, width, channels = image.shape
    if channels not in MAGIC_BY_CHANNELS:
        raise ShapeError(f"Only 1 or 3 channels can be saved, got {channels}")
    if not np.all(np.isfinite(image)):
        raise ImageFormatError('payload', "cannot encode non-finite values", path=str(path))

    header = MAGIC_BY_CHANNELS[channels] + f"\n{width} {height}\n{SUPPORTED_MAXVAL}\n".encode('ascii')
    with open(path, 'wb') as f:
        f.write(header)
        f.write(quantize(image).tobytes())
    logger.debug("Saved %s (%dx%d, %d channel(s))", path, width, height, channels)
