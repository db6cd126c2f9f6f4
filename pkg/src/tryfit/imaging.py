"""Deterministic raster kernels: masks, compositing, and fidelity metrics.

Images are numpy uint8 arrays, row-major: ``(h, w)`` for grayscale and
``(h, w, 3)`` for color. Binary masks are boolean ``(h, w)`` arrays where
True marks the editable region. Parse maps are uint8 ``(h, w)`` arrays of
small integer region labels. All operations are pure.
"""

from __future__ import annotations

import io
import math
from enum import IntEnum

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, ItemUnspecified, TooSmall
from .parsing import ItemKind

# Fill value written into masked-out pixels; mid-gray by convention.
MASK_FILL = 128

# Threshold for binarizing soft (uint8) masks: values >= 128 become True.
SOFT_MASK_THRESHOLD = 128


class ParseLabel(IntEnum):
    """Region labels of a human parse map (the contract with the parsing backend)."""

    BACKGROUND = 0
    HAIR = 1
    FACE = 2
    UPPER_CLOTHES = 3
    LOWER_CLOTHES = 4
    DRESS = 5
    ARMS = 6
    LEGS = 7
    SHOES = 8
    OTHER = 9


_ITEM_LABELS: dict[ItemKind, tuple[ParseLabel, ...]] = {
    ItemKind.UPPER_BODY: (ParseLabel.UPPER_CLOTHES, ParseLabel.ARMS),
    ItemKind.LOWER_BODY: (ParseLabel.LOWER_CLOTHES, ParseLabel.LEGS),
    ItemKind.FULL_BODY: (
        ParseLabel.UPPER_CLOTHES,
        ParseLabel.LOWER_CLOTHES,
        ParseLabel.DRESS,
        ParseLabel.ARMS,
        ParseLabel.LEGS,
    ),
}


def _shape2(arr: np.ndarray) -> tuple[int, int]:
    return int(arr.shape[0]), int(arr.shape[1])


def mask_from_item(parse: np.ndarray, item: ItemKind) -> np.ndarray:
    """Build the editable-region mask for a clothing item from a parse map."""
    if item not in _ITEM_LABELS:
        raise ItemUnspecified(f"cannot build a mask for item {item.value!r}")
    labels = _ITEM_LABELS[item]
    mask = np.zeros(parse.shape, dtype=bool)
    for label in labels:
        mask |= parse == int(label)
    return mask


def apply_mask(image: np.ndarray, mask: np.ndarray, fill: int = MASK_FILL) -> np.ndarray:
    """Copy *image* with pixels under the mask replaced by the fill value."""
    if _shape2(image) != _shape2(mask):
        raise DimensionMismatch(
            f"image {_shape2(image)} vs mask {_shape2(mask)}"
        )
    out = image.copy()
    out[mask] = fill
    return out


def composite(base: np.ndarray, patch: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Take *patch* where mask is set and *base* elsewhere."""
    if base.shape != patch.shape:
        raise DimensionMismatch(f"base {base.shape} vs patch {patch.shape}")
    if _shape2(base) != _shape2(mask):
        raise DimensionMismatch(f"base {_shape2(base)} vs mask {_shape2(mask)}")
    out = base.copy()
    out[mask] = patch[mask]
    return out


def bounding_box(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """Tightest ``(x, y, w, h)`` rectangle containing all set bits, or None."""
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate a mask by a square structuring element of the given radius."""
    if radius <= 0:
        return mask.copy()
    out = mask.copy()
    for _ in range(radius):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def binarize(soft: np.ndarray) -> np.ndarray:
    """Binarize a soft uint8 mask: values >= 128 become True."""
    return np.asarray(soft) >= SOFT_MASK_THRESHOLD


def to_luma(image: np.ndarray) -> np.ndarray:
    """Convert to a float64 luma plane (BT.601 weights); grayscale passes through."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    return 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all pixels and channels.

    Identical inputs (zero MSE) report math.inf.
    """
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / mse)


SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2


def gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian kernel used by the SSIM window."""
    half = (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64) - half
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _windowed(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable valid-mode convolution via sliding windows.
    size = kernel.size
    rows = np.lib.stride_tricks.sliding_window_view(arr, size, axis=1) @ kernel
    cols = np.lib.stride_tricks.sliding_window_view(rows, size, axis=0)
    return np.tensordot(cols, kernel, axes=([2], [0]))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over an 11x11 Gaussian window (sigma 1.5).

    Color inputs are converted to luma first. Valid-mode windows only, so
    both dimensions must be at least the window size.
    """
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    x = to_luma(a)
    y = to_luma(b)
    h, w = x.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise TooSmall(f"need at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}")
    kernel = gaussian_kernel()
    mu_x = _windowed(x, kernel)
    mu_y = _windowed(y, kernel)
    var_x = _windowed(x * x, kernel) - mu_x * mu_x
    var_y = _windowed(y * y, kernel) - mu_y * mu_y
    cov = _windowed(x * y, kernel) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


# --- PNG interchange ---


def encode_png(image: np.ndarray) -> bytes:
    """Encode a grayscale or color image as PNG bytes (deterministic)."""
    arr = np.ascontiguousarray(image.astype(np.uint8))
    mode = "L" if arr.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to uint8 (h, w) for grayscale or (h, w, 3) otherwise."""
    with Image.open(io.BytesIO(data)) as img:
        if img.mode == "L":
            return np.asarray(img, dtype=np.uint8)
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_png(image: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(image))


def load_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def mask_to_image(mask: np.ndarray) -> np.ndarray:
    """Render a binary mask as a {0, 255} grayscale image."""
    return np.where(mask, 255, 0).astype(np.uint8)


def image_to_mask(image: np.ndarray) -> np.ndarray:
    """Read a mask from a grayscale image, binarizing at the soft threshold."""
    arr = np.asarray(image)
    if arr.ndim == 3:
        arr = np.asarray(np.round(to_luma(arr)), dtype=np.uint8)
    return binarize(arr)


def decode_parse_map(data: bytes) -> np.ndarray:
    """Decode a parse map PNG, validating every label against the schema."""
    arr = decode_png(data)
    if arr.ndim != 2:
        raise ValueError("parse map PNG must be single-channel")
    if int(arr.max(initial=0)) > int(max(ParseLabel)):
        raise ValueError("parse map contains labels outside the schema")
    return arr
