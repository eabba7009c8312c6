"""Dependency-free file formats: PGM/PPM images, raw heatmaps, model weights.

Binary layouts (all integers little-endian):

* Weight file (``.gaxm``): magic ``GAXM``, version u16, entry count u32,
  then per entry: name length u32 + UTF-8 name, rank u32, dims u32 each,
  float32 values in row-major order.
* Heatmap file (``.gaxh``): magic ``GAXH``, version u16, rank u32, dims
  u32 each, float32 values in row-major order.
* Images: binary PGM (``P5``) and PPM (``P6``) with maxval 255.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

WEIGHTS_MAGIC = b"GAXM"
HEATMAP_MAGIC = b"GAXH"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# PGM / PPM

def write_pgm(path, gray: np.ndarray) -> None:
    """Write a (H, W) uint8 array as binary PGM."""
    a = np.asarray(gray)
    if a.ndim != 2:
        raise ValueError(f"write_pgm: expected (H, W), got {a.shape}")
    a = a.astype(np.uint8)
    h, w = a.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(a.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as binary PPM."""
    a = np.asarray(rgb)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"write_ppm: expected (H, W, 3), got {a.shape}")
    a = a.astype(np.uint8)
    h, w = a.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(a.tobytes())


def _read_pnm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comment lines between header fields
    while pos < len(data):
        c = data[pos: pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos: pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos: pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated PNM header")
    return data[start:pos], pos


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM or PPM; returns uint8 (H, W) or (H, W, 3)."""
    data = Path(path).read_bytes()
    magic, pos = _read_pnm_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported PNM magic {magic!r} in {path}")
    fields = []
    for _ in range(3):
        tok, pos = _read_pnm_token(data, pos)
        fields.append(int(tok))
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval} in {path}")
    pos += 1  # single whitespace after maxval
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    raster = data[pos: pos + need]
    if len(raster) != need:
        raise ValueError(f"truncated raster in {path}")
    a = np.frombuffer(raster, dtype=np.uint8)
    return a.reshape(h, w) if channels == 1 else a.reshape(h, w, 3)


def read_pgm(path) -> np.ndarray:
    a = read_pnm(path)
    if a.ndim != 2:
        raise ValueError(f"{path} is not a PGM")
    return a


def read_ppm(path) -> np.ndarray:
    a = read_pnm(path)
    if a.ndim != 3:
        raise ValueError(f"{path} is not a PPM")
    return a


# ---------------------------------------------------------------------------
# raw tensors and weights

def _pack_array(arr: np.ndarray) -> bytes:
    a = np.ascontiguousarray(arr, dtype="<f4")
    parts = [struct.pack("<I", a.ndim)]
    parts += [struct.pack("<I", d) for d in a.shape]
    parts.append(a.tobytes())
    return b"".join(parts)


def _unpack_array(data: bytes, pos: int) -> tuple[np.ndarray, int]:
    (rank,) = struct.unpack_from("<I", data, pos)
    pos += 4
    shape = struct.unpack_from(f"<{rank}I", data, pos)
    pos += 4 * rank
    count = int(np.prod(shape)) if rank else 1
    a = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
    pos += 4 * count
    return a.reshape(shape).astype(np.float64), pos


def write_gaxh(path, values: np.ndarray) -> None:
    """Write a raw heatmap tensor (float32 storage)."""
    payload = HEATMAP_MAGIC + struct.pack("<H", FORMAT_VERSION)
    payload += _pack_array(np.asarray(values))
    Path(path).write_bytes(payload)


def read_gaxh(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != HEATMAP_MAGIC:
        raise ValueError(f"{path} is not a heatmap file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported heatmap format version {version}")
    arr, _ = _unpack_array(data, 6)
    return arr


def write_gaxm(path, named: dict[str, np.ndarray]) -> None:
    """Write named weight arrays (float32 storage), preserving order."""
    parts = [WEIGHTS_MAGIC, struct.pack("<H", FORMAT_VERSION),
             struct.pack("<I", len(named))]
    for name, arr in named.items():
        nb = name.encode("utf-8")
        parts.append(struct.pack("<I", len(nb)))
        parts.append(nb)
        parts.append(_pack_array(np.asarray(arr)))
    Path(path).write_bytes(b"".join(parts))


def read_gaxm(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != WEIGHTS_MAGIC:
        raise ValueError(f"{path} is not a weight file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported weight format version {version}")
    (count,) = struct.unpack_from("<I", data, 6)
    pos = 10
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos: pos + nlen].decode("utf-8")
        pos += nlen
        arr, pos = _unpack_array(data, pos)
        out[name] = arr
    return out


# ---------------------------------------------------------------------------
# heatmap visualization

def heatmap_to_rgb(values: np.ndarray, abs_max: float | None = None) -> np.ndarray:
    """Diverging color map: positive red, negative blue, zero white.

    The ramp is scaled by ``abs_max`` (the map's own peak magnitude by
    default), so the extreme values render as pure red/blue.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"heatmap_to_rgb: expected 2D values, got {v.shape}")
    peak = float(np.abs(v).max()) if abs_max is None else float(abs_max)
    rgb = np.full(v.shape + (3,), 255, dtype=np.uint8)
    if peak == 0.0:
        return rgb
    ramp = np.rint(255.0 * (1.0 - np.clip(np.abs(v) / peak, 0.0, 1.0)))
    ramp = ramp.astype(np.uint8)
    pos = v > 0
    neg = v < 0
    rgb[pos, 1] = ramp[pos]
    rgb[pos, 2] = ramp[pos]
    rgb[neg, 0] = ramp[neg]
    rgb[neg, 1] = ramp[neg]
    return rgb


def export_heatmap(heatmap, stem) -> dict[str, object]:
    """Write a heatmap as raw tensor + per-channel PPMs + text sidecar.

    ``stem`` is a path without extension; produces ``<stem>.gaxh``,
    ``<stem>.ch<i>.ppm`` (one per channel; a single ``<stem>.ppm`` for 2D
    maps) and ``<stem>.txt``.  Returns the written paths.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(heatmap.values, dtype=np.float64)
    raw_path = stem.with_name(stem.name + ".gaxh")
    write_gaxh(raw_path, values)

    if values.ndim == 1:
        channels = values.reshape(1, 1, -1)
    elif values.ndim == 2:
        channels = values[None]
    elif values.ndim == 3:
        channels = values
    else:
        raise ValueError(f"cannot render heatmap of shape {values.shape}")

    abs_max = float(np.abs(values).max())
    image_paths = []
    for i, chan in enumerate(channels):
        suffix = ".ppm" if channels.shape[0] == 1 else f".ch{i}.ppm"
        p = stem.with_name(stem.name + suffix)
        write_ppm(p, heatmap_to_rgb(chan, abs_max))
        image_paths.append(p)

    sidecar = stem.with_name(stem.name + ".txt")
    shape_txt = "x".join(str(d) for d in values.shape)
    sidecar.write_text(
        f"method={heatmap.method}\n"
        f"target_class={heatmap.target_class}\n"
        f"normalized={'true' if heatmap.normalized else 'false'}\n"
        f"abs_max={abs_max:.9g}\n"
        f"shape={shape_txt}\n",
        encoding="utf-8")
    return {"raw": raw_path, "images": image_paths, "sidecar": sidecar}
