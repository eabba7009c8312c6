"""Dataset generation and ingestion.

The synthetic generator places a class-dependent intensity blob on a noisy
background; the signal location separates the classes, so a linear probe
already learns them.  Pixel values live on the uint8 grid in [0, 1], which
makes in-memory data and files written to disk carry identical values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formats import read_pnm, write_pgm, write_ppm

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "synthetic-blobs"
    class_count: int = 2
    train: int = 400
    val: int = 100
    test: int = 250
    image_shape: tuple[int, int, int] = (3, 32, 32)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("synthetic-blobs", "image-dir"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.class_count < 2:
            raise ValueError("class_count must be >= 2")
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split sizes must be non-negative")
        if len(self.image_shape) != 3 or min(self.image_shape) < 1:
            raise ValueError(f"bad image shape {self.image_shape}")


@dataclass
class Split:
    x: np.ndarray                  # (N, C, H, W) float64 in [0, 1]
    y: np.ndarray                  # (N,) int64
    ids: list[str]
    class_names: list[str] | None = None

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class Dataset:
    train: Split
    val: Split
    test: Split
    class_count: int
    image_shape: tuple[int, int, int]
    seed: int


def _empty_split(shape) -> Split:
    return Split(np.zeros((0, *shape)), np.zeros(0, dtype=np.int64), [])


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(x, 0.0, 1.0) * 255.0) / 255.0


def make_blobs(spec: DatasetSpec, *, blob_amplitude: float = 0.75,
               noise_scale: float = 0.25, sigma_frac: float = 0.18,
               center_jitter: int = 2) -> Dataset:
    """Generate the class-conditional blob dataset described by ``spec``."""
    rng = np.random.default_rng(spec.seed)
    c, h, w = spec.image_shape
    sigma = sigma_frac * min(h, w)
    radius = 0.28 * min(h, w)
    angles = 2.0 * np.pi * np.arange(spec.class_count) / spec.class_count
    centers = np.stack([h / 2.0 + radius * np.sin(angles),
                        w / 2.0 + radius * np.cos(angles)], axis=1)
    rows, cols = np.mgrid[0:h, 0:w]
    channel_gain = np.linspace(1.0, 0.8, c)[:, None, None]

    splits = {}
    for split_name, count in (("train", spec.train), ("val", spec.val),
                              ("test", spec.test)):
        if count == 0:
            splits[split_name] = _empty_split(spec.image_shape)
            continue
        labels = rng.permutation(np.arange(count) % spec.class_count)
        images = np.empty((count, c, h, w))
        for i, label in enumerate(labels):
            cy, cx = centers[label]
            cy += rng.uniform(-center_jitter, center_jitter)
            cx += rng.uniform(-center_jitter, center_jitter)
            amp = blob_amplitude * rng.uniform(0.85, 1.15)
            blob = amp * np.exp(-((rows - cy) ** 2 + (cols - cx) ** 2)
                                / (2.0 * sigma * sigma))
            noise = rng.uniform(0.0, noise_scale, size=(c, h, w))
            images[i] = blob[None] * channel_gain + noise
        splits[split_name] = Split(
            _quantize(images), labels.astype(np.int64),
            [f"{split_name}_{i:05d}" for i in range(count)])
    return Dataset(splits["train"], splits["val"], splits["test"],
                   spec.class_count, spec.image_shape, spec.seed)


def write_dataset(ds: Dataset, out_dir) -> Path:
    """Write one image file per sample under per-class split directories.

    3-channel images become PPM, 1-channel PGM.  Returns the manifest path.
    """
    out = Path(out_dir)
    c, h, w = ds.image_shape
    lines = [
        f"class_count={ds.class_count}",
        f"image_shape={c}x{h}x{w}",
        f"seed={ds.seed}",
    ]
    for split_name in SPLITS:
        split = getattr(ds, split_name)
        for label in range(ds.class_count):
            (out / split_name / f"class_{label}").mkdir(parents=True,
                                                        exist_ok=True)
        for i, sid in enumerate(split.ids):
            label = int(split.y[i])
            img = np.rint(split.x[i] * 255.0).astype(np.uint8)
            ext = "ppm" if c == 3 else "pgm"
            rel = f"{split_name}/class_{label}/{sid}.{ext}"
            path = out / rel
            if c == 3:
                write_ppm(path, np.moveaxis(img, 0, 2))
            elif c == 1:
                write_pgm(path, img[0])
            else:
                raise ValueError(f"cannot write {c}-channel images")
            lines.append(f"sample,{split_name},{label},{rel}")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def load_dataset(root) -> Dataset:
    """Load a dataset previously written by :func:`write_dataset`."""
    root = Path(root)
    manifest = root / "manifest.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.txt under {root}")
    header: dict[str, str] = {}
    samples: dict[str, list[tuple[int, str]]] = {s: [] for s in SPLITS}
    for line in manifest.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("sample,"):
            _, split_name, label, rel = line.split(",", maxsplit=3)
            samples[split_name].append((int(label), rel))
        else:
            key, value = line.split("=", maxsplit=1)
            header[key] = value
    shape = tuple(int(v) for v in header["image_shape"].split("x"))
    c, h, w = shape

    def load_split(name: str) -> Split:
        entries = samples[name]
        if not entries:
            return _empty_split(shape)
        x = np.empty((len(entries), c, h, w))
        y = np.empty(len(entries), dtype=np.int64)
        ids = []
        for i, (label, rel) in enumerate(entries):
            img = read_pnm(root / rel)
            arr = img[None] if img.ndim == 2 else np.moveaxis(img, 2, 0)
            x[i] = arr / 255.0
            y[i] = label
            ids.append(Path(rel).stem)
        return Split(x, y, ids)

    return Dataset(load_split("train"), load_split("val"), load_split("test"),
                   int(header["class_count"]), shape, int(header.get("seed", 0)))


def gen_data(spec: DatasetSpec, out_dir) -> Path:
    """Generate and persist a synthetic dataset; returns the manifest path."""
    if spec.kind != "synthetic-blobs":
        raise ValueError("gen_data only generates synthetic-blobs datasets")
    return write_dataset(make_blobs(spec), out_dir)


def channel_affine(x: np.ndarray, mean, std) -> np.ndarray:
    """Per-channel (x - mean) / std for (C, H, W) or (N, C, H, W) arrays.

    Intended for classification paths only; heatmap optimization requires
    raw [0, 1] inputs, so never feed affine-normalized data to it.
    """
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    channels = x.shape[0] if x.ndim == 3 else x.shape[1]
    if mean.shape != (channels,) or std.shape != (channels,):
        raise ValueError(
            f"mean/std must have shape ({channels},), got {mean.shape} "
            f"and {std.shape}")
    if np.any(std == 0.0):
        raise ValueError("std must be nonzero")
    if x.ndim == 3:
        return (x - mean[:, None, None]) / std[:, None, None]
    if x.ndim == 4:
        return (x - mean[None, :, None, None]) / std[None, :, None, None]
    raise ValueError(f"expected (C, H, W) or (N, C, H, W), got {x.shape}")


def _nearest_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape[:2]
    ri = np.minimum((np.arange(out_h) * h) // out_h, h - 1)
    ci = np.minimum((np.arange(out_w) * w) // out_w, w - 1)
    return img[ri][:, ci]


def ingest_images(directory, resize_to: tuple[int, int],
                  grayscale_stack: bool = False) -> Split:
    """Read a directory of per-class PGM/PPM folders into one labeled split.

    Images are nearest-neighbor resized to ``resize_to``, scaled to [0, 1],
    and optionally stacked from 1 to 3 channels.  Unreadable files are
    skipped with a warning; an empty class folder is an error.
    """
    root = Path(directory)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"no class subdirectories under {root}")
    out_h, out_w = resize_to
    images, labels, ids = [], [], []
    for label, cdir in enumerate(class_dirs):
        loaded = 0
        for f in sorted(cdir.iterdir()):
            if not f.is_file():
                continue
            try:
                img = read_pnm(f)
            except ValueError as exc:
                warnings.warn(f"skipping {f}: {exc}")
                continue
            img = _nearest_resize(img, out_h, out_w)
            if img.ndim == 2:
                chans = np.repeat(img[None], 3, axis=0) if grayscale_stack \
                    else img[None]
            else:
                chans = np.moveaxis(img, 2, 0)
            images.append(chans / 255.0)
            labels.append(label)
            ids.append(f"{cdir.name}/{f.stem}")
            loaded += 1
        if loaded == 0:
            raise ValueError(f"empty class folder: {cdir}")
    depth = {img.shape[0] for img in images}
    if len(depth) != 1:
        raise ValueError(
            f"mixed channel counts {sorted(depth)}; pass grayscale_stack=True")
    return Split(np.stack(images), np.asarray(labels, dtype=np.int64), ids,
                 class_names=[d.name for d in class_dirs])
