"""Generative augmentative explanation: optimize a heatmap for CO score.

The heatmap is parameterized as ``h = tanh(w * x + b)`` (bias optional),
which bounds it to [-1, 1].  Adam descends on

    loss = -co + l_s / mean((h - x + eps)^2 / (x + eps))

where the second term penalizes heatmaps indistinguishable from the input
itself; it stays positive because inputs are required to lie in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .attribution import Heatmap
from .autodiff import ShapeError, Tensor
from .ax import ScoreConstants
from .models import predict
from .optim import Adam
from .formats import export_heatmap


@dataclass(frozen=True)
class GaxConfig:
    target_co: float = 48.0
    max_iterations: int = 500
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    similarity_factor: float = 100.0
    epsilon: float = 1e-4
    use_bias: bool = False
    bias_init: float = 0.01
    w_init: float = 1.0
    snapshot_every: int = 10

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.similarity_factor < 0:
            raise ValueError("similarity_factor must be non-negative")
        if not np.isfinite(self.target_co):
            raise ValueError("target_co must be finite")
        if self.max_iterations < 0 or self.snapshot_every < 1:
            raise ValueError("bad iteration settings")


@dataclass
class GaxTrace:
    sample_id: str
    iterations: list[tuple[int, float, float]]   # (step, loss, co)
    snapshots: list[tuple[int, str]] = field(default_factory=list)
    converged: bool = False
    final_co: float = float("nan")
    error: str | None = None


def _check_unit_interval(x: np.ndarray) -> None:
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError(
            "inputs must be [0, 1]-normalized (the similarity term's "
            f"positivity requires it); got range [{x.min():.4g}, {x.max():.4g}]")


def _loss_graph(model, x: np.ndarray, w: Tensor, b: Tensor | None,
                fx: np.ndarray, constants: ScoreConstants, cfg: GaxConfig):
    """Build the loss graph for one sample; returns (loss, co, h) tensors."""
    xc = Tensor(x[None])
    pre = ad.mul(w, xc)
    if b is not None:
        pre = ad.add(pre, b)
    h = ad.tanh(pre)
    scores = model.forward_graph(ad.add(xc, h)).scores
    diff = ad.sub(scores, Tensor(fx))
    co = ad.scale(ad.weighted_sum(diff, constants.int_weights()[None]),
                  1.0 / (constants.num_classes - 1.0))
    # mean of (h - x + eps)^2 / (x + eps); the denominator is constant
    dev = ad.shift(ad.sub(h, xc), cfg.epsilon)
    ratio = ad.mul(ad.square(dev), Tensor(1.0 / (x[None] + cfg.epsilon)))
    similarity = ad.scale(ad.reciprocal(ad.mean_all(ratio)),
                          cfg.similarity_factor)
    loss = ad.add(ad.neg(co), similarity)
    return loss, co, h


def gax_loss(model, x, w, b, groundtruth: int,
             cfg: GaxConfig) -> tuple[float, float, Heatmap]:
    """Evaluate the GAX loss at given parameters (no optimization)."""
    x = np.asarray(x, dtype=np.float64)
    _check_unit_interval(x)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != x.shape:
        raise ShapeError(f"w shape {w.shape} != input shape {x.shape}")
    b_t = None
    if b is not None:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != x.shape:
            raise ShapeError(f"b shape {b.shape} != input shape {x.shape}")
        b_t = Tensor(b[None])
    constants = ScoreConstants(model.num_classes, int(groundtruth))
    fx = model.scores(x[None])
    loss, co, h = _loss_graph(model, x, Tensor(w[None]), b_t, fx, constants, cfg)
    heat = Heatmap(h.data[0].copy(), "gax", int(groundtruth))
    return float(loss.data), float(co.data), heat


def gax_run(model, x, groundtruth: int, cfg: GaxConfig, *,
            sample_id: str = "sample", out_dir=None,
            allow_misclassified: bool = False) -> tuple[GaxTrace, Heatmap]:
    """Optimize one sample's heatmap until the CO target or iteration cap.

    The sample must be correctly classified unless ``allow_misclassified``
    is set.  A trace records every iteration; snapshots of the evolving
    heatmap are written under ``out_dir`` at the configured cadence.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_unit_interval(x)
    pred, _ = predict(model, x)
    if pred != int(groundtruth) and not allow_misclassified:
        raise ValueError(
            f"model predicts {pred} for a sample labeled {groundtruth}; "
            "pass allow_misclassified=True to optimize anyway")
    constants = ScoreConstants(model.num_classes, int(groundtruth))
    fx = model.scores(x[None])
    w = np.full(x.shape, cfg.w_init)
    b = np.full(x.shape, cfg.bias_init) if cfg.use_bias else None
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2)
    trace = GaxTrace(sample_id, [])
    snap_dir = Path(out_dir) / sample_id if out_dir is not None else None
    heat = Heatmap(np.tanh(cfg.w_init * x + (0.0 if b is None else
                                             cfg.bias_init)),
                   "gax", int(groundtruth))

    def snapshot(step: int, values: np.ndarray) -> None:
        if snap_dir is None:
            return
        stem = snap_dir / f"step_{step:06d}"
        export_heatmap(Heatmap(values, "gax", int(groundtruth)), stem)
        # reference is relative to out_dir so sweep outputs stay relocatable
        trace.snapshots.append((step, f"{sample_id}/step_{step:06d}.gaxh"))

    for step in range(cfg.max_iterations + 1):
        w_t = Tensor(w[None])
        b_t = Tensor(b[None]) if b is not None else None
        loss, co, h = _loss_graph(model, x, w_t, b_t, fx, constants, cfg)
        loss_val, co_val = float(loss.data), float(co.data)
        if not np.isfinite(loss_val):
            trace.error = f"non-finite loss at step {step}"
            break
        trace.iterations.append((step, loss_val, co_val))
        heat = Heatmap(h.data[0].copy(), "gax", int(groundtruth))
        if step % cfg.snapshot_every == 0:
            snapshot(step, heat.values)
        if co_val >= cfg.target_co:
            trace.converged = True
            if step % cfg.snapshot_every != 0:
                snapshot(step, heat.values)
            break
        if step == cfg.max_iterations:
            break
        loss.backward()
        params = {"w": w}
        grads = {"w": w_t.grad[0]}
        if b is not None:
            params["b"] = b
            grads["b"] = b_t.grad[0]
        updated = opt.step(params, grads)
        w = updated["w"]
        b = updated.get("b")

    if trace.iterations:
        trace.final_co = trace.iterations[-1][2]
    return trace, heat


def gax_sweep(model, split, cfg: GaxConfig, *, out_dir=None,
              limit: int | None = None
              ) -> tuple[list[GaxTrace], list[tuple[str, str]]]:
    """Run GAX over the correctly-classified samples of a split.

    Misclassified samples are excluded (not errors).  Other per-sample
    failures are logged and skipped.  Returns (traces, errors).
    """
    traces: list[GaxTrace] = []
    errors: list[tuple[str, str]] = []
    order = np.argsort(np.asarray(split.ids))
    taken = 0
    for i in order:
        if limit is not None and taken >= limit:
            break
        sid = split.ids[i]
        x = split.x[i]
        truth = int(split.y[i])
        pred, _ = predict(model, x)
        if pred != truth:
            continue
        taken += 1
        try:
            trace, _ = gax_run(model, x, truth, cfg, sample_id=sid,
                               out_dir=out_dir)
            traces.append(trace)
        except Exception as exc:  # noqa: BLE001 - sweep must survive samples
            errors.append((sid, str(exc)))
    return traces, errors


# ---------------------------------------------------------------------------
# trace export

TRACE_HEADER = "step,loss,co_score"


def write_trace_csv(trace: GaxTrace, path) -> None:
    lines = [TRACE_HEADER]
    for step, loss, co in trace.iterations:
        lines.append(f"{step},{loss:.9g},{co:.9g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_manifest(traces, path, trace_paths: dict[str, str] | None = None) -> None:
    """One line per run: id, convergence, final score, trace and snapshots."""
    lines = ["sample_id,converged,final_co,steps,trace_path,snapshots"]
    for t in traces:
        ref = (trace_paths or {}).get(t.sample_id, "")
        flag = "true" if t.converged else "false"
        snaps = ";".join(p for _, p in t.snapshots)
        lines.append(f"{t.sample_id},{flag},{t.final_co:.9g},"
                     f"{len(t.iterations)},{ref},{snaps}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
