"""Image containers and 8-bit file I/O.

Images are float64 numpy arrays with intensities in [0, 1]: shape (H, W) for
grayscale, (H, W, 3) for color. Noise levels quoted in 8-bit units elsewhere
in the package are divided by 255 at the API boundary so everything internal
works on this scale.

Supported formats are binary PGM (P5) and PPM (P6) with maxval 255, and 8-bit
PNG. Patch vectors use column-major order within the patch: element r of the
vector is patch[r % side, r // side].
"""

import numpy as np

__all__ = [
    "ImageFormatError",
    "load_image",
    "save_image",
    "clamp",
    "extract_patch",
]


class ImageFormatError(ValueError):
    """Raised for files that are not 8-bit PGM/PPM/PNG."""


def _read_netpbm(data):
    # Tokenized header read: magic, width, height, maxval. '#' starts a
    # comment running to end of line. A single whitespace byte separates the
    # maxval token from the payload.
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos]

    magic = next_token()
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError("unsupported format magic %r" % magic)
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ImageFormatError("malformed header") from exc
    if maxval != 255:
        raise ImageFormatError("only maxval 255 is supported, got %d" % maxval)
    pos += 1
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    payload = data[pos : pos + need]
    if len(payload) != need:
        raise ImageFormatError(
            "truncated payload: expected %d bytes, got %d" % (need, len(payload))
        )
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, 3)


def _read_png(path):
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)
        elif im.mode == "RGB":
            arr = np.asarray(im, dtype=np.uint8)
        else:
            raise ImageFormatError(
                "only 8-bit grayscale or RGB PNG is supported, got mode %r" % im.mode
            )
    return arr


def load_image(path):
    """Load an 8-bit PGM/PPM/PNG file as a float array in [0, 1].

    Parameters
    ----------
    path : str or Path
        File to read. The format is detected from the content (netpbm magic)
        or the .png suffix.

    Returns
    -------
    ndarray
        (H, W) for grayscale input, (H, W, 3) for color, float64 in [0, 1].
    """

    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P5", b"P6"):
        arr = _read_netpbm(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        arr = _read_png(path)
    else:
        raise ImageFormatError("unrecognized image format in %s" % path)
    return arr.astype(np.float64) / 255.0


def to_bytes(img):
    """Clamp to [0, 1], scale by 255 and round half away from zero to uint8."""
    clipped = np.clip(img, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    """Write a [0, 1] image as binary PGM (2-D), PPM (3-D), or PNG.

    Values are clamped to [0, 1], scaled by 255 and rounded half away from
    zero. The netpbm header is exactly ``P5\\n<w> <h>\\n255\\n`` (P6 for
    color). A .png suffix selects PNG regardless of dimensionality.
    """

    path = str(path)
    data = to_bytes(img)
    if path.lower().endswith(".png"):
        from PIL import Image

        mode = "L" if data.ndim == 2 else "RGB"
        Image.fromarray(data, mode=mode).save(path)
        return
    if data.ndim == 2:
        header = b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0])
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"P6\n%d %d\n255\n" % (data.shape[1], data.shape[0])
    else:
        raise ImageFormatError("expected (H, W) or (H, W, 3) array")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def clamp(img):
    """Clip intensities to [0, 1]. Idempotent and monotone."""
    return np.clip(img, 0.0, 1.0)


def extract_patch(img, origin, side):
    """Extract a side x side block as a column-major vector of length side**2.

    Parameters
    ----------
    img : ndarray
        2-D grid.
    origin : (int, int)
        Top-left pixel of the block. The block must fit inside the grid; no
        padding is applied.
    side : int
        Patch side length.
    """

    i, j = origin
    h, w = img.shape[:2]
    if i < 0 or j < 0 or i + side > h or j + side > w:
        raise ValueError(
            "patch origin (%d, %d) with side %d exceeds %dx%d grid" % (i, j, side, h, w)
        )
    return img[i : i + side, j : j + side].T.ravel()
