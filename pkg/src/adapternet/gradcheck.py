"""Finite-difference gradient checks for every layer kernel.

Each check runs the op in 64-bit, reduces the output to a scalar through a
fixed random projection, and compares tape gradients against central
differences (h = 1e-5). Inputs are sampled away from the non-smooth points
(relu kink at 0, maxpool ties), otherwise the comparison itself is invalid.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

H = 1e-5
TOLERANCE = 1e-4


def numerical_gradient(f, x: np.ndarray, h: float = H) -> np.ndarray:
    """Central-difference gradient of scalar f at x (float64, elementwise)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f(x)
        flat[i] = orig - h
        lo = f(x)
        flat[i] = orig
        gf[i] = (hi - lo) / (2.0 * h)
    return g


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst elementwise |a - n| / (|a| + |n|), floored at 1e-5.

    The floor makes near-zero entries an absolute comparison at 1e-9 for the
    1e-4 tolerance: central differences at h = 1e-5 in float64 carry ~1e-11
    of roundoff, which would otherwise dominate the ratio on entries whose
    true gradient is ~0 (dead relu paths, saturated softmax terms).
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(a - n) / np.maximum(1e-5, np.abs(a) + np.abs(n))))


def _projection_loss(op, arg_arrays, rng):
    """Make scalar loss fn: project op output onto fixed random direction."""
    probe = op(*[Tensor(a.copy()) for a in arg_arrays])
    r = rng.standard_normal(probe.data.shape)

    def loss_from(tensors):
        out = op(*tensors)
        return ad.tsum(ad.mul(out, Tensor(r)))

    return loss_from


def _check_case(op, arg_arrays, check_args, rng) -> float:
    """Return worst relative error across the checked arguments of one case."""
    loss_from = _projection_loss(op, arg_arrays, rng)
    tensors = [Tensor(a.copy(), requires_grad=(i in check_args))
               for i, a in enumerate(arg_arrays)]
    with ad.record():
        loss = loss_from(tensors)
    loss.backward()

    worst = 0.0
    for i in check_args:
        def scalar(v, i=i):
            probe = [Tensor(a.copy()) for a in arg_arrays]
            probe[i] = Tensor(np.asarray(v, dtype=np.float64))
            return float(loss_from(probe).data)

        numeric = numerical_gradient(scalar, arg_arrays[i])
        worst = max(worst, max_relative_error(tensors[i].grad, numeric))
    return worst


def check_dense(instances: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for _ in range(instances):
        n, d, k = rng.integers(1, 5, 3)
        args = [rng.standard_normal((n, d)), rng.standard_normal((d, k)),
                rng.standard_normal(k)]
        worst = max(worst, _check_case(ad.dense, args, (0, 1, 2), rng))
    return worst


def check_relu(instances: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(instances):
        shape = tuple(rng.integers(1, 5, rng.integers(1, 4)))
        x = rng.standard_normal(shape)
        x = np.where(np.abs(x) < 0.05, x + np.sign(x + 0.5) * 0.1, x)  # off the kink
        worst = max(worst, _check_case(ad.relu, [x], (0,), rng))
    return worst


def check_conv2d(instances: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for i in range(instances):
        n = int(rng.integers(1, 3))
        h, w = (int(v) for v in rng.integers(3, 7, 2))
        cin, cout = (int(v) for v in rng.integers(1, 4, 2))
        kh = int(rng.integers(1, min(3, h) + 1))
        kw = int(rng.integers(1, min(3, w) + 1))
        stride = int(rng.integers(1, 3))
        padding = ("same", "valid")[i % 2]
        args = [rng.standard_normal((n, h, w, cin)),
                rng.standard_normal((kh, kw, cin, cout)),
                rng.standard_normal(cout)]

        def op(x, wt, b, stride=stride, padding=padding):
            return ad.conv2d(x, wt, b, stride=stride, padding=padding)

        worst = max(worst, _check_case(op, args, (0, 1, 2), rng))
    return worst


def check_maxpool2(instances: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 3))
        h, w = (int(v) * 2 for v in rng.integers(1, 4, 2))
        c = int(rng.integers(1, 4))
        # distinct values with gaps >> h, so argmax never flips under FD nudges
        x = (rng.permutation(n * h * w * c).astype(np.float64) * 0.01
             ).reshape(n, h, w, c)
        worst = max(worst, _check_case(ad.maxpool2, [x], (0,), rng))
    return worst


def check_softmax_cross_entropy(instances: int = 20, seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 5])
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(2, 7))
        logits = rng.standard_normal((n, k)) * 3.0
        labels = rng.integers(0, k, n)

        t = Tensor(logits.copy(), requires_grad=True)
        with ad.record():
            loss = ad.softmax_cross_entropy(t, labels)
        loss.backward()

        numeric = numerical_gradient(
            lambda v: float(ad.softmax_cross_entropy(Tensor(v), labels).data),
            logits)
        worst = max(worst, max_relative_error(t.grad, numeric))
    return worst


def check_composite(instances: int = 5, seed: int = 0) -> float:
    """conv -> relu -> flatten -> dense -> cross-entropy, grads for all weights."""
    rng = np.random.default_rng([seed, 6])
    worst = 0.0
    for _ in range(instances):
        n, h, w, cin, cout, k = 2, 4, 4, 2, 3, 4
        for _attempt in range(50):
            x = rng.standard_normal((n, h, w, cin))
            cw = rng.standard_normal((3, 3, cin, cout)) * 0.7
            cb = rng.standard_normal(cout) * 0.1
            pre = ad.conv2d(Tensor(x), Tensor(cw), Tensor(cb), padding="same")
            if float(np.min(np.abs(pre.data))) > 5e-3:    # keep relu off its kink
                break
        dw = rng.standard_normal((h * w * cout, k)) * 0.3
        db = rng.standard_normal(k) * 0.1
        labels = rng.integers(0, k, n)
        arrays = [x, cw, cb, dw, db]

        def forward(ts):
            hidden = ad.relu(ad.conv2d(ts[0], ts[1], ts[2], padding="same"))
            flat = ad.reshape(hidden, (n, h * w * cout))
            return ad.softmax_cross_entropy(ad.dense(flat, ts[3], ts[4]), labels)

        tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
        with ad.record():
            loss = forward(tensors)
        loss.backward()

        for i in range(len(arrays)):
            def scalar(v, i=i):
                probe = [Tensor(a.copy()) for a in arrays]
                probe[i] = Tensor(np.asarray(v, dtype=np.float64))
                return float(forward(probe).data)

            numeric = numerical_gradient(scalar, arrays[i])
            worst = max(worst, max_relative_error(tensors[i].grad, numeric))
    return worst


ALL_CHECKS = (
    ("dense", check_dense),
    ("relu", check_relu),
    ("conv2d", check_conv2d),
    ("maxpool2", check_maxpool2),
    ("softmax_cross_entropy", check_softmax_cross_entropy),
    ("composite", check_composite),
)


def run_all(instances: int = 20, seed: int = 0, verbose: bool = True) -> dict[str, float]:
    """Run every check; returns {op: worst relative error}."""
    results = {}
    for name, fn in ALL_CHECKS:
        n = min(instances, 5) if name == "composite" else instances
        err = fn(n, seed)
        results[name] = err
        if verbose:
            status = "ok" if err < TOLERANCE else "FAIL"
            print(f"gradcheck {name:<24} max rel err {err:.3e}  {status}")
    return results
