"""A tour of the tape: record a computation, differentiate it, take a step.

Run: python3 demos/01_autodiff_basics.py
"""

import numpy as np

from adapternet import autodiff as ad
from adapternet.autodiff import Tensor
from adapternet.optim import make_optimizer

print("== forward math is plain numpy until you ask for gradients ==")
x = Tensor(np.array([[1.0, -2.0], [3.0, 0.5]]))
y = ad.relu(x)
print("relu clips negatives:", y.data.tolist())

print()
print("== gradients come from recording onto a tape ==")
w = Tensor(np.array([[0.1], [0.4]]), requires_grad=True)
b = Tensor(np.array([0.0]), requires_grad=True)
with ad.record():
    out = ad.dense(y, w, b)          # (2,2) @ (2,1) + (1,)
    loss = ad.tsum(ad.mul(out, out))  # scalar
loss.backward()
print("loss:", float(loss.data))
print("dloss/dw:", w.grad.ravel().tolist())
print("dloss/db:", b.grad.ravel().tolist())

print()
print("== backward accumulates; double backward doubles ==")
g1 = w.grad.copy()
loss.backward()
print("after second backward, grad/first:", (w.grad / g1).ravel().tolist())

print()
print("== optimizers mutate parameters in place ==")
opt = make_optimizer("sgd", [w, b], learning_rate=0.1)
before = w.data.copy()
opt.zero_grad()
with ad.record():
    loss = ad.tsum(ad.mul(ad.dense(y, w, b), ad.dense(y, w, b)))
loss.backward()
opt.step()
print("w moved by:", (w.data - before).ravel().tolist())

print()
print("== a three-line classifier on made-up data ==")
rng = np.random.default_rng(0)
feats = rng.standard_normal((64, 4)).astype(np.float32)
labels = (feats[:, 0] > 0).astype(np.int64)  # class = sign of first feature
w = Tensor(np.zeros((4, 2), dtype=np.float32), requires_grad=True)
b = Tensor(np.zeros(2, dtype=np.float32), requires_grad=True)
opt = make_optimizer("adam", [w, b], learning_rate=0.05)
for step in range(30):
    opt.zero_grad()
    with ad.record():
        loss = ad.softmax_cross_entropy(ad.dense(Tensor(feats), w, b), labels)
    loss.backward()
    opt.step()
    if step % 10 == 0:
        print(f"step {step:2d}  loss {float(loss.data):.4f}")
pred = np.argmax(ad.dense(Tensor(feats), w, b).data, axis=1)
print("train accuracy:", float((pred == labels).mean()))
