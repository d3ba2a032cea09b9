"""Reverse-mode autodiff on numpy arrays, sized for small conv nets.

A ``Tensor`` wraps an ndarray plus an optional gradient. Differentiable ops
executed inside a ``record()`` block append (output, inputs, backward_fn)
records to the active ``Tape``; ``backward(loss)`` replays the tape in
reverse, accumulating gradients into every tensor with ``requires_grad``.

Float32 is the working precision; build tensors from float64 arrays (or pass
``dtype=np.float64``) to run the whole graph in 64-bit, which is what the
finite-difference gradient checks do.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Raised when an op's input shapes are inconsistent; names the bad dimension."""


class Tensor:
    """N-dimensional float array with an optional gradient."""

    __slots__ = ("data", "grad", "requires_grad", "_tape")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            # keep explicit float arrays as-is, coerce everything else to f32
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
        # ascontiguousarray promotes 0-d to 1-d; reshape keeps scalars scalar
        self.data = np.ascontiguousarray(arr, dtype=dtype).reshape(arr.shape)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype}{flag})"


class Tape:
    """Ordered record of executed differentiable ops."""

    __slots__ = ("records",)

    def __init__(self):
        self.records = []


_ACTIVE_TAPE: Tape | None = None


@contextmanager
def record(tape: Tape | None = None):
    """Activate a tape; ops executed inside are recorded for backward()."""
    global _ACTIVE_TAPE
    tape = tape if tape is not None else Tape()
    prev = _ACTIVE_TAPE
    _ACTIVE_TAPE = tape
    try:
        yield tape
    finally:
        _ACTIVE_TAPE = prev


@contextmanager
def no_grad():
    """Suspend recording (inference mode)."""
    global _ACTIVE_TAPE
    prev = _ACTIVE_TAPE
    _ACTIVE_TAPE = None
    try:
        yield
    finally:
        _ACTIVE_TAPE = prev


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(np.asarray(x), dtype=dtype)


def _emit(out: Tensor, inputs, backward_fn) -> Tensor:
    """Record an op on the active tape if its output can carry gradient."""
    tape = _ACTIVE_TAPE
    if tape is not None and out.requires_grad:
        out._tape = tape
        tape.records.append((out, inputs, backward_fn))
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into t.grad for every requires_grad ancestor.

    Replays the recording tape in reverse; each record is visited once.
    Gradients sum into existing .grad buffers, so calling twice without
    zeroing doubles them.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {tuple(loss.shape)}")
    tape = loss._tape
    if tape is None:
        raise ValueError("backward: loss was not produced by recorded operations "
                         "(run the forward pass inside record())")
    # per-call upstream flow, kept separate from the persistent .grad buffers
    flow = {id(loss): (loss, np.ones_like(loss.data))}
    for out, inputs, fn in reversed(tape.records):
        entry = flow.pop(id(out), None)
        if entry is None:
            continue  # this record does not feed the loss
        g_out = entry[1]
        if out.requires_grad:
            out.grad = g_out if out.grad is None else out.grad + g_out
        for tensor, g in zip(inputs, fn(g_out)):
            if g is None or not tensor.requires_grad:
                continue
            cur = flow.get(id(tensor))
            flow[id(tensor)] = (tensor, g if cur is None else cur[1] + g)
    for tensor, g in flow.values():  # leaves (parameters, inputs)
        if tensor.requires_grad:
            tensor.grad = g if tensor.grad is None else tensor.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum g down to `shape`, inverting numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / structural ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    out = Tensor(a.data + b.data,
                 requires_grad=a.requires_grad or b.requires_grad)

    def _backward(g):
        return (_unbroadcast(g, a.shape) if a.requires_grad else None,
                _unbroadcast(g, b.shape) if b.requires_grad else None)

    return _emit(out, (a, b), _backward)


def sub(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    out = Tensor(a.data - b.data,
                 requires_grad=a.requires_grad or b.requires_grad)

    def _backward(g):
        return (_unbroadcast(g, a.shape) if a.requires_grad else None,
                _unbroadcast(-g, b.shape) if b.requires_grad else None)

    return _emit(out, (a, b), _backward)


def mul(a, b) -> Tensor:
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    out = Tensor(a.data * b.data,
                 requires_grad=a.requires_grad or b.requires_grad)

    def _backward(g):
        return (_unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
                _unbroadcast(g * a.data, b.shape) if b.requires_grad else None)

    return _emit(out, (a, b), _backward)


def tsum(a: Tensor) -> Tensor:
    """Full reduction to a scalar."""
    out = Tensor(a.data.sum(), requires_grad=a.requires_grad)

    def _backward(g):
        return (np.broadcast_to(g, a.shape).copy(),)

    return _emit(out, (a,), _backward)


def tmean(a: Tensor) -> Tensor:
    out = Tensor(a.data.mean(), requires_grad=a.requires_grad)
    inv_n = 1.0 / a.data.size

    def _backward(g):
        return (np.broadcast_to(g * inv_n, a.shape).astype(a.data.dtype),)

    return _emit(out, (a,), _backward)


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape), requires_grad=a.requires_grad)

    def _backward(g):
        return (g.reshape(a.shape),)

    return _emit(out, (a,), _backward)


def relu(a: Tensor) -> Tensor:
    """Elementwise max(0, x); gradient at exactly 0 is 0."""
    out = Tensor(np.maximum(a.data, 0), requires_grad=a.requires_grad)

    def _backward(g):
        return (g * (a.data > 0),)

    return _emit(out, (a,), _backward)


# ---------------------------------------------------------------------------
# neural-net layer kernels
# ---------------------------------------------------------------------------

def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map: (N,D) @ (D,K) + (K,)."""
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise ShapeError(f"dense: expected 2-d input and weights, got "
                         f"{x.data.ndim}-d and {w.data.ndim}-d")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense: input dim {x.shape[1]} != weight rows {w.shape[0]}")
    if b.data.ndim != 1 or b.shape[0] != w.shape[1]:
        raise ShapeError(f"dense: bias length {b.shape} != weight cols {w.shape[1]}")
    out = Tensor(x.data @ w.data + b.data,
                 requires_grad=x.requires_grad or w.requires_grad or b.requires_grad)

    def _backward(g):
        gx = g @ w.data.T if x.requires_grad else None
        gw = x.data.T @ g if w.requires_grad else None
        gb = g.sum(axis=0) if b.requires_grad else None
        return gx, gw, gb

    return _emit(out, (x, w, b), _backward)


def _conv_pads(h: int, w: int, kh: int, kw: int, stride: int, padding: str):
    if padding == "valid":
        if h < kh or w < kw:
            raise ShapeError(f"conv2d: input {h}x{w} smaller than kernel {kh}x{kw} "
                             f"with valid padding")
        ho = (h - kh) // stride + 1
        wo = (w - kw) // stride + 1
        return ho, wo, (0, 0), (0, 0)
    if padding == "same":
        ho = -(-h // stride)
        wo = -(-w // stride)
        pad_h = max((ho - 1) * stride + kh - h, 0)
        pad_w = max((wo - 1) * stride + kw - w, 0)
        return ho, wo, (pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2)
    raise ValueError(f"conv2d: padding must be 'same' or 'valid', got {padding!r}")


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """Flatten kh x kw patches of a padded NHWC array into matmul rows."""
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (N,Ho,Wo,C,kh,kw)
    if stride > 1:
        win = win[:, ::stride, ::stride]
    n, ho, wo = win.shape[:3]
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, kh * kw * xp.shape[3])


def _corr_valid(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Stride-1 valid cross-correlation of NHWC x with (kh,kw,Cin,Cout) w."""
    kh, kw, cin, cout = w.shape
    cols = _im2col(x, kh, kw, 1)
    n = x.shape[0]
    ho, wo = x.shape[1] - kh + 1, x.shape[2] - kw + 1
    return (cols @ w.reshape(kh * kw * cin, cout)).reshape(n, ho, wo, cout)


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1,
           padding: str = "same") -> Tensor:
    """2-d cross-correlation over NHWC input with (kh,kw,Cin,Cout) weights."""
    if x.data.ndim != 4:
        raise ShapeError(f"conv2d: expected NHWC input, got {x.data.ndim}-d")
    if w.data.ndim != 4:
        raise ShapeError(f"conv2d: expected (kh,kw,Cin,Cout) weights, got {w.data.ndim}-d")
    kh, kw, cin, cout = w.shape
    if kh < 1 or kw < 1:
        raise ShapeError(f"conv2d: kernel dims must be >= 1, got {kh}x{kw}")
    if stride < 1:
        raise ValueError(f"conv2d: stride must be >= 1, got {stride}")
    if x.shape[3] != cin:
        raise ShapeError(f"conv2d: input channels {x.shape[3]} != weight Cin {cin}")
    if b.data.ndim != 1 or b.shape[0] != cout:
        raise ShapeError(f"conv2d: bias length {b.shape} != Cout {cout}")

    n, h, wd = x.shape[:3]
    ho, wo, (pt, pb), (pl, pr) = _conv_pads(h, wd, kh, kw, stride, padding)
    one_by_one = kh == 1 and kw == 1 and stride == 1

    if one_by_one:
        # per-pixel channel matmul; also the exact path for identity kernels
        out_data = (x.data.reshape(-1, cin) @ w.data.reshape(cin, cout)
                    + b.data).reshape(n, h, wd, cout)
    else:
        xp = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        cols = _im2col(xp, kh, kw, stride)
        out_data = (cols @ w.data.reshape(kh * kw * cin, cout)
                    + b.data).reshape(n, ho, wo, cout)

    out = Tensor(out_data,
                 requires_grad=x.requires_grad or w.requires_grad or b.requires_grad)

    def _backward(g):
        g2 = g.reshape(-1, cout)
        gb = g2.sum(axis=0) if b.requires_grad else None
        if one_by_one:
            gw = ((x.data.reshape(-1, cin).T @ g2).reshape(w.shape)
                  if w.requires_grad else None)
            gx = ((g2 @ w.data.reshape(cin, cout).T).reshape(x.shape)
                  if x.requires_grad else None)
            return gx, gw, gb
        gw = None
        if w.requires_grad:
            xp = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
            gw = (_im2col(xp, kh, kw, stride).T @ g2).reshape(w.shape)
        gx = None
        if x.requires_grad:
            # correlate the (dilated, fully padded) output grad with the
            # spatially flipped, channel-swapped kernel, then crop the pads
            if stride > 1:
                # cover the whole padded input, including any strided slack
                # rows/cols at the bottom/right that no window touches
                hd, wdd = (ho - 1) * stride + 1, (wo - 1) * stride + 1
                extra_h = (h + pt + pb) - (hd + kh - 1)
                extra_w = (wd + pl + pr) - (wdd + kw - 1)
                gd = np.zeros((n, hd + extra_h, wdd + extra_w, cout),
                              dtype=g.dtype)
                gd[:, :hd:stride, :wdd:stride] = g.reshape(n, ho, wo, cout)
            else:
                gd = g.reshape(n, ho, wo, cout)
            gp = np.pad(gd, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
            w_back = w.data[::-1, ::-1].transpose(0, 1, 3, 2)  # (kh,kw,Cout,Cin)
            full = _corr_valid(gp, np.ascontiguousarray(w_back))
            gx = full[:, pt:pt + h, pl:pl + wd, :]
        return gx, gw, gb

    return _emit(out, (x, w, b), _backward)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 non-overlapping max pool; ties route gradient to the first
    (row-major) maximum of the window."""
    if x.data.ndim != 4:
        raise ShapeError(f"maxpool2: expected NHWC input, got {x.data.ndim}-d")
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2: spatial dims must be even, got {h}x{w}")
    ho, wo = h // 2, w // 2
    win = (x.data.reshape(n, ho, 2, wo, 2, c)
           .transpose(0, 1, 3, 2, 4, 5)
           .reshape(n, ho, wo, 4, c))
    idx = win.argmax(axis=3)  # first occurrence on ties
    out = Tensor(win.max(axis=3), requires_grad=x.requires_grad)

    def _backward(g):
        gwin = np.zeros_like(win)
        np.put_along_axis(gwin, idx[:, :, :, None, :], g[:, :, :, None, :], axis=3)
        gx = (gwin.reshape(n, ho, wo, 2, 2, c)
              .transpose(0, 1, 3, 2, 4, 5)
              .reshape(n, h, w, c))
        return (gx,)

    return _emit(out, (x,), _backward)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean over the batch of -log softmax(logits)[label], max-stabilized."""
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy: expected (N,K) logits, "
                         f"got {logits.data.ndim}-d")
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"softmax_cross_entropy: labels shape {labels.shape} "
                         f"!= ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        bad = labels[(labels < 0) | (labels >= k)][0]
        raise ValueError(f"softmax_cross_entropy: label {bad} outside [0, {k})")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    softmax = ez / ez.sum(axis=1, keepdims=True)
    logp = z - np.log(ez.sum(axis=1, keepdims=True))
    loss = -logp[np.arange(n), labels].mean()
    out = Tensor(np.asarray(loss, dtype=logits.data.dtype),
                 requires_grad=logits.requires_grad)

    def _backward(g):
        d = softmax.copy()
        d[np.arange(n), labels] -= 1.0
        return (d * (g / n),)

    return _emit(out, (logits,), _backward)
