"""Rasterize a laid-out graph to an RGB image and encode it as PNG.

Edges are drawn first as anti-aliased lines, then nodes as bordered discs,
over an opaque background. All geometry scales linearly with resolution
relative to 224 px.
"""

from __future__ import annotations

import struct
import warnings
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph
from .layout import Layout

BASE_RESOLUTION = 224
SKYBLUE = (135, 206, 235)
WHITE = (255, 255, 255)
BLACK = (0, 0, 0)


class RenderError(ValueError):
    pass


class DegenerateLayoutWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RenderSpec:
    resolution: int = BASE_RESOLUTION
    node_fill: tuple[int, int, int] = SKYBLUE
    node_border: tuple[int, int, int] = WHITE
    # sizes in pixels at 224 px; scaled with resolution
    node_radius: float = 4.0
    node_border_width: float = 1.0
    edge_width: float = 1.5
    edge_color: tuple[int, int, int] = WHITE
    edge_opacity: float = 0.8
    background: tuple[int, int, int] = BLACK

    def __post_init__(self):
        if not 32 <= self.resolution <= 1024:
            raise RenderError(f"resolution {self.resolution} outside [32, 1024]")
        if not 0.0 <= self.edge_opacity <= 1.0:
            raise RenderError(f"edge opacity {self.edge_opacity} outside [0, 1]")

    @property
    def scale(self) -> float:
        return self.resolution / BASE_RESOLUTION


def _edge_coverage(p0: np.ndarray, p1: np.ndarray, width: float, res: int):
    """Per-(edge, pixel) coverage of lines of the given pixel width.

    Walks each line one pixel column (or row, for steep lines) at a time and
    spreads the line's cross-section over the pixels it overlaps along the
    minor axis. Returns ``(flat_pixel_index, coverage)``; each pixel appears
    at most once per edge.
    """
    steep = np.abs(p1[:, 1] - p0[:, 1]) > np.abs(p1[:, 0] - p0[:, 0])
    # major coordinate in column 0, minor in column 1
    a = np.where(steep[:, None], p0[:, ::-1], p0)
    b = np.where(steep[:, None], p1[:, ::-1], p1)
    swap = a[:, 0] > b[:, 0]
    a, b = np.where(swap[:, None], b, a), np.where(swap[:, None], a, b)
    span = b[:, 0] - a[:, 0]
    slope = np.divide(b[:, 1] - a[:, 1], span, out=np.zeros_like(span), where=span > 0)

    first = np.ceil(a[:, 0] - 0.5).astype(np.int64)
    last = np.floor(b[:, 0] - 0.5).astype(np.int64)
    counts = np.maximum(last - first + 1, 0)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    edge = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    major = first[edge] + (np.arange(total) - starts[edge])
    minor_c = a[edge, 1] + (major + 0.5 - a[edge, 0]) * slope[edge]
    half = 0.5 * width * np.sqrt(1.0 + slope[edge] ** 2)
    lo, hi = minor_c - half, minor_c + half

    reach = int(np.ceil(2.0 * float(half.max()))) + 2
    base = np.floor(lo).astype(np.int64)
    rows = base[:, None] + np.arange(reach)[None, :]
    cov = np.clip(np.minimum(rows + 1, hi[:, None]) - np.maximum(rows, lo[:, None]), 0.0, 1.0)
    cols = np.broadcast_to(major[:, None], rows.shape)
    st = np.broadcast_to(steep[edge][:, None], rows.shape)
    px = np.where(st, rows, cols)
    py = np.where(st, cols, rows)
    keep = (cov > 0) & (px >= 0) & (px < res) & (py >= 0) & (py < res)
    return (py[keep] * res + px[keep]), cov[keep]


def _disc_weights(pix: np.ndarray, radius: float, inner: float, border, fill):
    """Vectorized coverage of every node's bordered disc on a local patch.

    Returns ``(corner, keep, add)``: compositing node ``k`` onto its patch at
    integer ``corner[k]`` is ``patch = patch * keep[k] + add[k]``, which is
    the border disc followed by the fill disc, each blended by coverage.
    """
    half = int(np.ceil(radius)) + 1
    size = 2 * half + 1
    corner = np.floor(pix).astype(np.int64) - half
    offs = np.arange(size) + 0.5
    dx = corner[:, 0, None] + offs[None, :] - pix[:, 0, None]
    dy = corner[:, 1, None] + offs[None, :] - pix[:, 1, None]
    d = np.sqrt(dy[:, :, None] ** 2 + dx[:, None, :] ** 2)
    c_out = np.clip(radius + 0.5 - d, 0.0, 1.0)
    c_in = np.clip(inner + 0.5 - d, 0.0, 1.0) if inner > 0 else np.zeros_like(d)
    keep = ((1.0 - c_out) * (1.0 - c_in))[:, None]
    ring = (c_out * (1.0 - c_in))[:, None]
    add = ring * border[:, None, None] + c_in[:, None] * fill[:, None, None]
    return corner, keep, add


def to_pixels(positions: np.ndarray, res: int) -> np.ndarray:
    """Unit-viewport coordinates to continuous pixel coordinates (y down)."""
    pos = np.asarray(positions, dtype=float)
    return np.column_stack([pos[:, 0] * res, (1.0 - pos[:, 1]) * res])


def render_image(g: Graph, layout: Layout, spec: RenderSpec = RenderSpec()) -> np.ndarray:
    """Return a ``(res, res, 3)`` uint8 image of ``g`` drawn at ``layout``."""
    pos = np.asarray(layout.positions, dtype=float)
    if pos.shape != (g.num_nodes, 2):
        raise RenderError(f"layout has {len(pos)} positions for {g.num_nodes} nodes")
    if not np.all(np.isfinite(pos)):
        raise RenderError("layout has non-finite positions")
    n = g.num_nodes
    if n > 1:
        _, inverse, counts = np.unique(pos, axis=0, return_inverse=True, return_counts=True)
        shared = int(np.sum(counts[inverse.ravel()] > 1))
        if shared > n / 2:
            warnings.warn(f"{shared}/{n} nodes share a position", DegenerateLayoutWarning,
                          stacklevel=2)

    res = spec.resolution
    s = spec.scale
    bg = np.asarray(spec.background, dtype=float)
    pix = to_pixels(pos, res)

    if g.num_edges:
        e = np.asarray(g.edges)
        idx, cov = _edge_coverage(pix[e[:, 0]], pix[e[:, 1]], spec.edge_width * s, res)
        alpha = spec.edge_opacity * cov
        if spec.edge_opacity >= 1.0:
            alpha = np.minimum(alpha, 1.0 - 1e-12)
        # same-colored "over" compositing: transmission is a product over edges
        log_t = np.bincount(idx, weights=np.log1p(-alpha), minlength=res * res)
        trans = np.exp(log_t).reshape(1, res, res)
        edge_color = np.asarray(spec.edge_color, dtype=float)[:, None, None]
        img = edge_color + (bg[:, None, None] - edge_color) * trans
    else:
        img = np.broadcast_to(bg[:, None, None], (3, res, res))

    radius = spec.node_radius * s
    inner = max(radius - spec.node_border_width * s, 0.0)
    border = np.asarray(spec.node_border, dtype=float)
    fill = np.asarray(spec.node_fill, dtype=float)
    # channel-first padded canvas so discs near the edge need no clipping
    corner, keep, add = _disc_weights(pix, radius, inner, border, fill)
    size = keep.shape[-1]
    pad = size + 1
    canvas = np.empty((3, res + 2 * pad, res + 2 * pad))
    canvas[:, pad:pad + res, pad:pad + res] = img
    for k, (x0, y0) in enumerate(corner.tolist()):
        x0 = min(max(x0, -pad), res) + pad
        y0 = min(max(y0, -pad), res) + pad
        patch = canvas[:, y0:y0 + size, x0:x0 + size]
        patch *= keep[k]
        patch += add[k]
    out = canvas[:, pad:pad + res, pad:pad + res]
    # every blend above is a convex combination of in-gamut colors
    np.rint(out, out=out)
    return np.ascontiguousarray(out.astype(np.uint8).transpose(1, 2, 0))


def _chunk(tag: bytes, data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))


def encode_png(img: np.ndarray) -> bytes:
    """Lossless 8-bit RGB PNG (no alpha), filter type 0 on every row."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RenderError("expected an (h, w, 3) image")
    h, w, _ = img.shape
    raw = np.zeros((h, w * 3 + 1), dtype=np.uint8)
    raw[:, 1:] = img.reshape(h, w * 3)
    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _chunk(b"IHDR", header)
        + _chunk(b"IDAT", zlib.compress(raw.tobytes(), 1))
        + _chunk(b"IEND", b"")
    )


def decode_png(data: bytes) -> np.ndarray:
    """Read back PNGs written by :func:`encode_png` (RGB, filter 0 only)."""
    if data[:8] != b"\x89PNG\r\n\x1a\n":
        raise RenderError("not a PNG file")
    pos = 8
    idat = b""
    w = h = None
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            w, h, depth, ctype = struct.unpack(">IIBB", body[:10])
            if depth != 8 or ctype != 2:
                raise RenderError("only 8-bit RGB supported")
        elif tag == b"IDAT":
            idat += body
    raw = np.frombuffer(zlib.decompress(idat), dtype=np.uint8).reshape(h, w * 3 + 1)
    if np.any(raw[:, 0] != 0):
        raise RenderError("unsupported PNG row filter")
    return raw[:, 1:].reshape(h, w, 3).copy()


def save_png(img: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_png(img))
