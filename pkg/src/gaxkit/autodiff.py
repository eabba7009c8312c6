"""Dense float64 tensors with reverse-mode automatic differentiation.

A small define-by-run engine: every operation returns a new :class:`Tensor`
that remembers its parents and how to push gradients back to them.  The
graph is rebuilt on every forward pass, which keeps repeated re-evaluation
(as in iterative heatmap optimization) trivially correct.

Rectifier nodes honor a backward *rule* so attribution methods can reroute
gradients without touching the forward pass:

* ``standard``     - true gradients everywhere.
* ``deconv-relu``  - rectifiers propagate ``relu(upstream)``, ignoring the
  sign of their forward input.
* ``guided-relu``  - rectifiers propagate upstream masked by both
  forward-positive and upstream-positive.

Only plain ``relu`` nodes are affected by the overrides; every other op
(including ``leaky_relu``) always uses its standard gradient.
"""

from __future__ import annotations

import numpy as np

RULE_STANDARD = "standard"
RULE_DECONV = "deconv-relu"
RULE_GUIDED = "guided-relu"
BACKWARD_RULES = (RULE_STANDARD, RULE_DECONV, RULE_GUIDED)


class ShapeError(ValueError):
    """Operand shapes incompatible with the requested operation."""


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    """A float64 array plus the bookkeeping needed for backpropagation.

    ``parents`` and ``_vjp`` describe how this node was produced; leaves
    have neither.  ``grad`` is filled in by :meth:`backward` for every node
    reachable from the root, with the same shape as ``data``.
    """

    __slots__ = ("data", "grad", "op", "parents", "_vjp", "_ctx")

    def __init__(self, data, parents=(), op="leaf", vjp=None, ctx=None):
        self.data = _arr(data)
        self.grad: np.ndarray | None = None
        self.op = op
        self.parents: tuple[Tensor, ...] = tuple(parents)
        self._vjp = vjp
        self._ctx = ctx

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, shape={self.shape})"

    # arithmetic sugar; scalars are handled without materializing constants
    def __add__(self, other):
        return shift(self, other) if np.isscalar(other) else add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return shift(self, -other) if np.isscalar(other) else sub(self, other)

    def __mul__(self, other):
        return scale(self, other) if np.isscalar(other) else mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return scale(self, 1.0 / other) if np.isscalar(other) else div(self, other)

    def __neg__(self):
        return neg(self)

    def backward(self, seed=None, rule: str = RULE_STANDARD) -> None:
        """Populate ``grad`` on every node reachable from this root.

        ``seed`` must match the root shape; it defaults to ones for scalar
        roots.  Gradients from multiple uses of a node accumulate.
        """
        if rule not in BACKWARD_RULES:
            raise ValueError(f"unknown backward rule: {rule!r}")
        if seed is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed requires a scalar root")
            seed_arr = np.ones_like(self.data)
        else:
            seed_arr = _arr(seed)
            if seed_arr.shape != self.data.shape:
                raise ShapeError(
                    f"backward seed shape {seed_arr.shape} does not match "
                    f"root shape {self.data.shape}"
                )
        order = _topo(self)
        for node in order:
            node.grad = np.zeros_like(node.data)
        self.grad = seed_arr.copy()
        for node in reversed(order):
            if node._vjp is None:
                continue
            for parent, pg in zip(node.parents, node._vjp(node.grad, rule)):
                if pg is not None:
                    parent.grad += pg


def _topo(root: Tensor) -> list[Tensor]:
    """Parents-before-children ordering of the graph rooted at ``root``."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    return Tensor(a.data + b.data, (a, b), "add", lambda g, r: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    return Tensor(a.data - b.data, (a, b), "sub", lambda g, r: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return Tensor(ad * bd, (a, b), "mul", lambda g, r: (g * bd, g * ad))


def div(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "div")
    if np.any(b.data == 0.0):
        raise ValueError("div: zero denominator")
    ad, bd = a.data, b.data
    return Tensor(ad / bd, (a, b), "div",
                  lambda g, r: (g / bd, -g * ad / (bd * bd)))


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, (a,), "neg", lambda g, r: (-g,))


def shift(a: Tensor, c: float) -> Tensor:
    """Add a python scalar elementwise."""
    return Tensor(a.data + float(c), (a,), "shift", lambda g, r: (g,))


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python scalar elementwise."""
    c = float(c)
    return Tensor(a.data * c, (a,), "scale", lambda g, r: (g * c,))


def square(a: Tensor) -> Tensor:
    ad = a.data
    return Tensor(ad * ad, (a,), "square", lambda g, r: (2.0 * ad * g,))


def reciprocal(a: Tensor) -> Tensor:
    if np.any(a.data == 0.0):
        raise ValueError("reciprocal: zero operand")
    out = 1.0 / a.data
    return Tensor(out, (a,), "reciprocal", lambda g, r: (-g * out * out,))


# ---------------------------------------------------------------------------
# activations

def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def vjp(g, rule):
        if rule == RULE_DECONV:
            return (np.maximum(g, 0.0),)
        if rule == RULE_GUIDED:
            return (g * (mask & (g > 0)),)
        return (g * mask,)

    return Tensor(np.maximum(a.data, 0.0), (a,), "relu", vjp)


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    slope = float(slope)
    factor = np.where(a.data > 0, 1.0, slope)
    return Tensor(np.where(a.data > 0, a.data, slope * a.data), (a,),
                  "leaky-relu", lambda g, r: (g * factor,), ctx={"slope": slope})


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor(out, (a,), "sigmoid", lambda g, r: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return Tensor(out, (a,), "tanh", lambda g, r: (g * (1.0 - out * out),))


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for 2D@2D, 2D@1D and 1D@2D operands."""
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 2:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeError(f"matmul: {ad.shape} @ {bd.shape}")
        return Tensor(ad @ bd, (a, b), "matmul",
                      lambda g, r: (g @ bd.T, ad.T @ g))
    if ad.ndim == 2 and bd.ndim == 1:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeError(f"matmul: {ad.shape} @ {bd.shape}")
        return Tensor(ad @ bd, (a, b), "matmul",
                      lambda g, r: (np.outer(g, bd), ad.T @ g))
    if ad.ndim == 1 and bd.ndim == 2:
        if ad.shape[0] != bd.shape[0]:
            raise ShapeError(f"matmul: {ad.shape} @ {bd.shape}")
        return Tensor(ad @ bd, (a, b), "matmul",
                      lambda g, r: (bd @ g, np.outer(ad, g)))
    raise ShapeError(f"matmul: unsupported ranks {ad.ndim} and {bd.ndim}")


def transpose2d(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose2d: expected 2D, got {a.shape}")
    return Tensor(a.data.T, (a,), "transpose2d", lambda g, r: (g.T,))


def flatten(a: Tensor) -> Tensor:
    """Collapse all axes after the first (the batch axis stays put)."""
    if a.data.ndim < 1:
        raise ShapeError("flatten: needs at least one axis")
    shape = a.shape
    out = a.data.reshape(shape[0], -1)
    return Tensor(out, (a,), "flatten", lambda g, r: (g.reshape(shape),))


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    """Add a per-channel bias to a (N, C) or (N, C, H, W) tensor."""
    if b.data.ndim != 1:
        raise ShapeError(f"bias_add: bias must be 1D, got {b.shape}")
    if x.data.ndim == 2:
        if x.shape[1] != b.shape[0]:
            raise ShapeError(f"bias_add: {x.shape} with bias {b.shape}")
        return Tensor(x.data + b.data[None, :], (x, b), "bias-add",
                      lambda g, r: (g, g.sum(axis=0)))
    if x.data.ndim == 4:
        if x.shape[1] != b.shape[0]:
            raise ShapeError(f"bias_add: {x.shape} with bias {b.shape}")
        return Tensor(x.data + b.data[None, :, None, None], (x, b), "bias-add",
                      lambda g, r: (g, g.sum(axis=(0, 2, 3))))
    raise ShapeError(f"bias_add: expected 2D or 4D input, got {x.shape}")


# ---------------------------------------------------------------------------
# convolution and pooling

def _out_size(n: int, k: int, stride: int, pad: int, op: str) -> int:
    span = n + 2 * pad - k
    if span < 0:
        raise ShapeError(f"{op}: window {k} exceeds padded extent {n + 2 * pad}")
    return span // stride + 1


def _window_view(xp: np.ndarray, kh: int, kw: int, stride: int,
                 oh: int, ow: int) -> np.ndarray:
    """Gather (N, C, kh, kw, oh, ow) sliding windows from padded input."""
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i: i + stride * oh: stride,
                                  j: j + stride * ow: stride]
    return cols


def conv2d(x: Tensor, k: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of (N, C_in, H, W) with kernel (C_out, C_in, KH, KW)."""
    if x.data.ndim != 4 or k.data.ndim != 4:
        raise ShapeError(f"conv2d: input {x.shape}, kernel {k.shape}")
    if x.shape[1] != k.shape[1]:
        raise ShapeError(
            f"conv2d: input channels {x.shape[1]} != kernel channels {k.shape[1]}")
    if stride < 1 or pad < 0:
        raise ValueError("conv2d: stride must be >= 1 and pad >= 0")
    n, _, h, w = x.shape
    cout, cin, kh, kw = k.shape
    oh = _out_size(h, kh, stride, pad, "conv2d")
    ow = _out_size(w, kw, stride, pad, "conv2d")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = _window_view(xp, kh, kw, stride, oh, ow)
    out = np.einsum("ncijhw,ocij->nohw", cols, k.data, optimize=True)

    def vjp(g, rule):
        gk = np.einsum("ncijhw,nohw->ocij", cols, g, optimize=True)
        dcols = np.einsum("ocij,nohw->ncijhw", k.data, g, optimize=True)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i: i + stride * oh: stride,
                    j: j + stride * ow: stride] += dcols[:, :, i, j]
        gx = gxp[:, :, pad: pad + h, pad: pad + w] if pad else gxp
        return (gx, gk)

    return Tensor(out, (x, k), "conv2d", vjp)


def max_pool2d(x: Tensor, size: int = 2, stride: int | None = None) -> Tensor:
    """Max pooling; ties route the gradient to the first maximum in scan order."""
    if x.data.ndim != 4:
        raise ShapeError(f"max_pool2d: expected 4D input, got {x.shape}")
    stride = size if stride is None else stride
    n, c, h, w = x.shape
    oh = _out_size(h, size, stride, 0, "max_pool2d")
    ow = _out_size(w, size, stride, 0, "max_pool2d")
    windows = np.empty((n, c, oh, ow, size * size), dtype=np.float64)
    for i in range(size):
        for j in range(size):
            windows[..., i * size + j] = x.data[:, :, i: i + stride * oh: stride,
                                                j: j + stride * ow: stride]
    # argmax over the row-major window = first maximal element in scan order
    idx = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]

    def vjp(g, rule):
        gx = np.zeros_like(x.data)
        ni, ci, ohi, owi = np.indices(idx.shape)
        hi = ohi * stride + idx // size
        wi = owi * stride + idx % size
        np.add.at(gx, (ni, ci, hi, wi), g)
        return (gx,)

    return Tensor(out, (x,), "max-pool", vjp)


def global_avg_pool(x: Tensor) -> Tensor:
    """Spatial mean of a (N, C, H, W) tensor, returning (N, C)."""
    if x.data.ndim != 4:
        raise ShapeError(f"global_avg_pool: expected 4D input, got {x.shape}")
    n, c, h, w = x.shape
    area = h * w
    out = x.data.mean(axis=(2, 3))
    return Tensor(out, (x,), "global-avg-pool",
                  lambda g, r: (np.broadcast_to(g[:, :, None, None] / area,
                                                x.shape).copy(),))


# ---------------------------------------------------------------------------
# reductions and selections

def sum_all(a: Tensor) -> Tensor:
    return Tensor(a.data.sum(), (a,), "sum",
                  lambda g, r: (np.full_like(a.data, float(g)),))


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    return Tensor(a.data.mean(), (a,), "mean",
                  lambda g, r: (np.full_like(a.data, float(g) / n),))


def select(a: Tensor, row: int, col: int) -> Tensor:
    """Pick a single scalar entry from a 2D tensor."""
    if a.data.ndim != 2:
        raise ShapeError(f"select: expected 2D input, got {a.shape}")
    value = a.data[row, col]

    def vjp(g, rule):
        out = np.zeros_like(a.data)
        out[row, col] = float(g)
        return (out,)

    return Tensor(value, (a,), "select", vjp)


def weighted_sum(a: Tensor, weights: np.ndarray) -> Tensor:
    """Fixed-weight contraction to a scalar: sum(weights * a)."""
    w = _arr(weights)
    if w.shape != a.shape:
        raise ShapeError(f"weighted_sum: weights {w.shape} vs input {a.shape}")
    return Tensor((w * a.data).sum(), (a,), "weighted-sum",
                  lambda g, r: (float(g) * w,))


def cross_entropy(scores: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of raw (N, C) scores against integer labels."""
    if scores.data.ndim != 2:
        raise ShapeError(f"cross_entropy: expected 2D scores, got {scores.shape}")
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (scores.shape[0],):
        raise ShapeError(
            f"cross_entropy: labels {y.shape} vs scores {scores.shape}")
    z = scores.data
    n = z.shape[0]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    loss = (lse - z[np.arange(n), y]).mean()

    def vjp(g, rule):
        p = np.exp(z - zmax)
        p /= p.sum(axis=1, keepdims=True)
        p[np.arange(n), y] -= 1.0
        return (float(g) * p / n,)

    return Tensor(loss, (scores,), "cross-entropy", vjp)


# ---------------------------------------------------------------------------
# contribution backward pass (rescale rule)

_RESCALE_OPS = ("relu", "leaky-relu", "sigmoid", "tanh")


def _local_derivative(node: Tensor, parent: Tensor) -> np.ndarray:
    if node.op == "relu":
        return (parent.data > 0).astype(np.float64)
    if node.op == "leaky-relu":
        slope = node._ctx["slope"]
        return np.where(parent.data > 0, 1.0, slope)
    if node.op == "sigmoid":
        return node.data * (1.0 - node.data)
    if node.op == "tanh":
        return 1.0 - node.data * node.data
    raise ValueError(f"no local derivative for op {node.op!r}")


def rescale_multipliers(root: Tensor, baseline_root: Tensor, seed,
                        near_zero: float = 1e-9) -> dict[int, np.ndarray]:
    """Backward pass computing rescale-rule contribution multipliers.

    Requires two structurally identical graphs: one evaluated at the input
    of interest, one at the baseline.  Elementwise nonlinearities propagate
    the finite-difference ratio (out - out_baseline) / (in - in_baseline),
    falling back to the local derivative where the input difference is
    within ``near_zero``; all other ops propagate like standard gradients.

    Returns a mapping from ``id(node)`` in the main graph to that node's
    accumulated multiplier.
    """
    order = _topo(root)
    order_b = _topo(baseline_root)
    if len(order) != len(order_b) or any(
            a.op != b.op or a.shape != b.shape for a, b in zip(order, order_b)):
        raise ValueError("baseline graph structure differs from the main graph")
    twin = {id(a): b for a, b in zip(order, order_b)}
    seed_arr = _arr(seed)
    if seed_arr.shape != root.shape:
        raise ShapeError(
            f"seed shape {seed_arr.shape} does not match root shape {root.shape}")
    mult: dict[int, np.ndarray] = {id(n): np.zeros_like(n.data) for n in order}
    mult[id(root)] = seed_arr.copy()
    for node in reversed(order):
        if node._vjp is None:
            continue
        m = mult[id(node)]
        if node.op in _RESCALE_OPS:
            parent = node.parents[0]
            node_b = twin[id(node)]
            din = parent.data - node_b.parents[0].data
            dout = node.data - node_b.data
            ratio = np.where(np.abs(din) < near_zero,
                             _local_derivative(node, parent),
                             dout / np.where(np.abs(din) < near_zero, 1.0, din))
            mult[id(parent)] += m * ratio
        else:
            for parent, pg in zip(node.parents, node._vjp(m, RULE_STANDARD)):
                if pg is not None:
                    mult[id(parent)] += pg
    return mult
