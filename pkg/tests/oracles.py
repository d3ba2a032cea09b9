"""Naive reference implementations used as test oracles.

Everything here trades speed for obviousness: explicit loops, straight-line
formulas, no shared helpers with the package under test. If a fast kernel
and its oracle disagree, trust the oracle.
"""

import math

import numpy as np


def conv2d_naive(x, w, b, stride=1, padding="valid"):
    """Six nested loops over an NHWC batch; float64 throughout."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape

    if padding == "same":
        ho = -(-h // stride)
        wo = -(-wd // stride)
        pad_h = max((ho - 1) * stride + kh - h, 0)
        pad_w = max((wo - 1) * stride + kw - wd, 0)
        top, left = pad_h // 2, pad_w // 2
        xp = np.zeros((n, h + pad_h, wd + pad_w, cin))
        xp[:, top:top + h, left:left + wd] = x
    elif padding == "valid":
        ho = (h - kh) // stride + 1
        wo = (wd - kw) // stride + 1
        xp = x
    else:
        raise ValueError(padding)

    out = np.zeros((n, ho, wo, cout))
    for ni in range(n):
        for i in range(ho):
            for j in range(wo):
                for co in range(cout):
                    acc = 0.0
                    for di in range(kh):
                        for dj in range(kw):
                            for ci in range(cin):
                                acc += xp[ni, i * stride + di,
                                          j * stride + dj, ci] * w[di, dj, ci, co]
                    out[ni, i, j, co] = acc + b[co]
    return out


def dense_naive(x, w, b):
    """Triple-loop affine map."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, d = x.shape
    _, k = w.shape
    out = np.zeros((n, k))
    for ni in range(n):
        for ki in range(k):
            acc = 0.0
            for di in range(d):
                acc += x[ni, di] * w[di, ki]
            out[ni, ki] = acc + b[ki]
    return out


def maxpool2_naive(x):
    x = np.asarray(x, dtype=np.float64)
    n, h, w, c = x.shape
    out = np.zeros((n, h // 2, w // 2, c))
    for ni in range(n):
        for i in range(h // 2):
            for j in range(w // 2):
                for ci in range(c):
                    block = x[ni, 2 * i:2 * i + 2, 2 * j:2 * j + 2, ci]
                    out[ni, i, j, ci] = block.max()
    return out


def softmax_ce_naive(logits, labels):
    """Mean of -log softmax(logits)[label], one sample at a time."""
    logits = np.asarray(logits, dtype=np.float64)
    total = 0.0
    for row, label in zip(logits, labels):
        m = row.max()
        z = np.exp(row - m).sum()
        total += -(row[label] - m - math.log(z))
    return total / len(labels)


def softmax_ce_grad_naive(logits, labels):
    """(softmax - onehot) / N per the direct formula."""
    logits = np.asarray(logits, dtype=np.float64)
    n, k = logits.shape
    grad = np.zeros((n, k))
    for i in range(n):
        e = np.exp(logits[i] - logits[i].max())
        p = e / e.sum()
        p[labels[i]] -= 1.0
        grad[i] = p / n
    return grad


def srgb_to_lab_scalar(r, g, b):
    """Straight-line CIE formulas for one pixel, written independently."""
    def decode(v):
        return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4

    rl, gl, bl = decode(r), decode(g), decode(b)
    x = 0.4124 * rl + 0.3576 * gl + 0.1805 * bl
    y = 0.2126 * rl + 0.7152 * gl + 0.0722 * bl
    z = 0.0193 * rl + 0.1192 * gl + 0.9505 * bl
    # white = row sums of the matrix above, so (1,1,1) lands exactly on it
    xn, yn, zn = 0.4124 + 0.3576 + 0.1805, 1.0, 0.0193 + 0.1192 + 0.9505

    def f(t):
        return t ** (1.0 / 3.0) if t > (6.0 / 29.0) ** 3 \
            else t / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def power_count_naive(p):
    """Exhaustive enumeration of round(255 * (v/255)^p) over v in 0..255."""
    seen = set()
    for v in range(256):
        seen.add(math.floor(255.0 * (v / 255.0) ** p + 0.5))
    return len(seen)


def top1_naive(logits, labels):
    """Per-sample loop; ties toward the lowest class index."""
    correct = 0
    for row, label in zip(logits, labels):
        best = 0
        for k in range(1, len(row)):
            if row[k] > row[best]:
                best = k
        correct += int(best == label)
    return correct / len(labels)
