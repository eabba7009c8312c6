"""Heatmap attribution methods.

Six methods, each mapping (model, input, target class) to a heatmap shaped
like the input:

* ``saliency``          - signed raw-score gradient w.r.t. the input.
* ``input-x-gradient``  - input times the signed gradient.
* ``deconvolution``     - gradient under the deconv rectifier rule.
* ``guided-backprop``   - gradient under the guided rectifier rule.
* ``deeplift``          - rescale-rule contributions against a baseline
  (all-zeros by default).
* ``layer-gradcam``     - rectified channel-weighted activations of a named
  layer, upsampled to the input size and replicated across channels.
  Select the layer with ``layer-gradcam:<name>`` (default ``conv1``).

Saliency keeps the gradient sign because the augmentation process adds the
heatmap to the input, so sign carries the confidence-increasing direction;
``abs_values=True`` restores the classical visualization variant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import (RULE_DECONV, RULE_GUIDED, RULE_STANDARD, ShapeError,
                       Tensor)
from .models import predict

METHODS = ("saliency", "input-x-gradient", "deconvolution", "guided-backprop",
           "deeplift", "layer-gradcam")

DEFAULT_GRADCAM_LAYER = "conv1"


@dataclass(frozen=True)
class Heatmap:
    """Per-pixel attribution with provenance; shaped like its input."""
    values: np.ndarray
    method: str
    target_class: int
    normalized: bool = False


def parse_method(method: str) -> tuple[str, str | None]:
    """Split a method tag into (kind, gradcam layer or None)."""
    kind, _, layer = method.partition(":")
    if kind not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if layer and kind != "layer-gradcam":
        raise ValueError(f"only layer-gradcam accepts a layer suffix: {method!r}")
    return kind, (layer or None)


def normalize(h: Heatmap) -> Heatmap:
    """Scale so the global peak magnitude is one; zero maps pass through."""
    peak = float(np.abs(h.values).max(initial=0.0))
    if peak == 0.0:
        return replace(h, normalized=True)
    return replace(h, values=h.values / peak, normalized=True)


def _check_target(model, target: int) -> int:
    target = int(target)
    if not 0 <= target < model.num_classes:
        raise ValueError(
            f"target {target} out of range for {model.num_classes} classes")
    return target


def _gradient_heatmap(model, x: np.ndarray, target: int, rule: str) -> np.ndarray:
    leaf = Tensor(x[None])
    fp = model.forward_graph(leaf)
    ad.select(fp.scores, 0, target).backward(rule=rule)
    return leaf.grad[0].copy()


def _deeplift(model, x: np.ndarray, target: int,
              baseline: np.ndarray | None) -> np.ndarray:
    base = np.zeros_like(x) if baseline is None else np.asarray(baseline,
                                                                dtype=np.float64)
    if base.shape != x.shape:
        raise ShapeError(f"baseline shape {base.shape} != input shape {x.shape}")
    leaf = Tensor(x[None])
    fp = model.forward_graph(leaf)
    leaf_b = Tensor(base[None])
    fp_b = model.forward_graph(leaf_b)
    seed = np.zeros(fp.scores.shape)
    seed[0, target] = 1.0
    mult = ad.rescale_multipliers(fp.scores, fp_b.scores, seed)
    return ((x - base) * mult[id(leaf)][0]).copy()


def _nearest_upsample(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = plane.shape
    ri = np.minimum((np.arange(out_h) * h) // out_h, h - 1)
    ci = np.minimum((np.arange(out_w) * w) // out_w, w - 1)
    return plane[ri][:, ci]


def _gradcam(model, x: np.ndarray, target: int, layer: str) -> np.ndarray:
    fp = model.forward_graph(x[None])
    if layer not in fp.activations:
        raise KeyError(
            f"unknown layer {layer!r}; model layers: {sorted(fp.activations)}")
    act = fp.activations[layer]
    if act.data.ndim != 4:
        raise ValueError(f"layer {layer!r} is not spatial (shape {act.shape})")
    ad.select(fp.scores, 0, target).backward(rule=RULE_STANDARD)
    weights = act.grad.mean(axis=(2, 3))           # (1, K) spatially averaged
    cam = np.maximum((weights[:, :, None, None] * act.data).sum(axis=1), 0.0)
    if x.ndim == 3:
        plane = _nearest_upsample(cam[0], x.shape[1], x.shape[2])
        return np.broadcast_to(plane, x.shape).copy()
    return _nearest_upsample(cam[0], 1, x.shape[0])[0]


def attribute(model, x, target: int, method: str, *,
              abs_values: bool = False,
              deeplift_baseline: np.ndarray | None = None) -> Heatmap:
    """Compute one heatmap for ``x`` with respect to class ``target``."""
    kind, layer = parse_method(method)
    target = _check_target(model, target)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != tuple(model.input_shape):
        raise ShapeError(
            f"input shape {x.shape} != model input {model.input_shape}")

    if kind == "saliency":
        values = _gradient_heatmap(model, x, target, RULE_STANDARD)
    elif kind == "input-x-gradient":
        values = x * _gradient_heatmap(model, x, target, RULE_STANDARD)
    elif kind == "deconvolution":
        values = _gradient_heatmap(model, x, target, RULE_DECONV)
    elif kind == "guided-backprop":
        values = _gradient_heatmap(model, x, target, RULE_GUIDED)
    elif kind == "deeplift":
        values = _deeplift(model, x, target, deeplift_baseline)
    else:
        values = _gradcam(model, x, target, layer or DEFAULT_GRADCAM_LAYER)

    if abs_values:
        values = np.abs(values)
    return Heatmap(values=values, method=method, target_class=target)


def attribute_at_predicted(model, x, method: str, **kwargs) -> Heatmap:
    """Heatmap for the model's own prediction, normalized to peak one."""
    pred, _ = predict(model, x)
    return normalize(attribute(model, x, pred, method, **kwargs))
