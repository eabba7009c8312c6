"""Closed forms for the 2D rotation toy model.

A sample ``x = a1*x1 + a2*x2`` is expressed in the basis obtained by
applying a mixing matrix ``W`` to the canonical axes.  Writing the heatmap
``h = w * x`` in that basis as ``A x1 + B x2`` gives a score difference

    delta = A - B

that is linear in ``w``, so gradient ascent on it has an exact closed
form: after k steps of size eta the heatmap is ``(w + k*eta*grad) * x``.
These functions evaluate delta, its gradient, the k-step heatmap, and
rotation sweeps of both, all in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ToyInstance:
    theta: float
    a1: float
    a2: float
    k_eta: float = 0.0

    def __post_init__(self):
        if self.k_eta < 0:
            raise ValueError("k_eta must be non-negative")


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _w_and_inverse(theta: float) -> tuple[np.ndarray, np.ndarray]:
    w = rotation(theta)
    det = w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
    if abs(det) <= 1e-12:
        raise ValueError("singular mixing matrix")
    return w, np.linalg.inv(w)


def sample_vector(inst: ToyInstance) -> np.ndarray:
    """The sample in pixel coordinates: W(theta) @ (a1, a2)."""
    return rotation(inst.theta) @ np.array([inst.a1, inst.a2])


def delta(inst: ToyInstance, w=(1.0, 1.0)) -> float:
    """A - B for heatmap weights ``w``: the score difference to maximize."""
    wm, wi = _w_and_inverse(inst.theta)
    w1, w2 = float(w[0]), float(w[1])
    x1 = inst.a1 * wm[0, 0] + inst.a2 * wm[0, 1]
    x2 = inst.a1 * wm[1, 0] + inst.a2 * wm[1, 1]
    return (w1 * (wi[0, 0] - wi[1, 0]) * x1
            - w2 * (wi[1, 1] - wi[0, 1]) * x2)


def delta_gradient(inst: ToyInstance) -> np.ndarray:
    """Gradient of delta w.r.t. the heatmap weights (constant in w)."""
    wm, wi = _w_and_inverse(inst.theta)
    x1 = inst.a1 * wm[0, 0] + inst.a2 * wm[0, 1]
    x2 = inst.a1 * wm[1, 0] + inst.a2 * wm[1, 1]
    return np.array([(wi[0, 0] - wi[1, 0]) * x1,
                     -(wi[1, 1] - wi[0, 1]) * x2])


def closed_form_heatmap(inst: ToyInstance, w=(1.0, 1.0)) -> np.ndarray:
    """Heatmap after ``k_eta`` total ascent on delta: (w + k*eta*grad) * x."""
    x = sample_vector(inst)
    return (np.asarray(w, dtype=np.float64)
            + inst.k_eta * delta_gradient(inst)) * x


def rotation_sweep(a1: float, a2: float, k_eta: float,
                   thetas=None) -> np.ndarray:
    """Rows of (theta, x1, x2, h1, h2) across a rotation grid.

    The default grid spans [-pi, pi] with 97 points, covering both the
    non-negative quadrant sweep and the full-range variant.
    """
    if thetas is None:
        thetas = np.linspace(-np.pi, np.pi, 97)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if thetas.size == 0:
        raise ValueError("rotation_sweep: empty theta grid")
    rows = np.empty((thetas.size, 5))
    for i, theta in enumerate(thetas):
        inst = ToyInstance(float(theta), a1, a2, k_eta)
        x = sample_vector(inst)
        h = closed_form_heatmap(inst)
        rows[i] = (theta, x[0], x[1], h[0], h[1])
    return rows


SWEEP_HEADER = "theta,x1,x2,h1,h2"


def write_sweep_csv(rows: np.ndarray, path) -> None:
    lines = [SWEEP_HEADER]
    for theta, x1, x2, h1, h2 in rows:
        lines.append(f"{theta:.9g},{x1:.9g},{x2:.9g},{h1:.9g},{h2:.9g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
