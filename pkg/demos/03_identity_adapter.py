"""The adapter's starting point: a stack of 1x1 convolutions that is exactly
the identity, so an untrained adapter never hurts the frozen model.

Run: python3 demos/03_identity_adapter.py
"""

import numpy as np

from adapternet import autodiff as ad
from adapternet.autodiff import Tensor
from adapternet.models import build_adapter
from adapternet.optim import make_optimizer

rng = np.random.default_rng(0)
x = rng.random((8, 32, 32, 3)).astype(np.float32)

print("== identity init is bit-exact, not approximately-identity ==")
for k in (1, 3, 5, 8):
    adapter = build_adapter(k)
    out = adapter.forward(Tensor(x))
    print(f"k = {k}: forward(x) == x -> "
          f"{out.data.tobytes() == x.tobytes()}  "
          f"({sum(t.data.size for t in adapter.parameters())} parameters)")

print()
print("== so the knob starts at 'do nothing' and training turns it ==")
adapter = build_adapter(3)
print("is_identity before training:", adapter.is_identity())

# a toy objective: push channel 0 toward channel 1 (any gradient will do)
opt = make_optimizer("adam", adapter.parameters(), learning_rate=1e-2)
for step in range(5):
    opt.zero_grad()
    with ad.record():
        out = adapter.forward(Tensor(x))
        diff = ad.sub(out, Tensor(np.roll(x, 1, axis=-1)))
        loss = ad.tmean(ad.mul(diff, diff))
    loss.backward()
    opt.step()
print("is_identity after 5 steps:  ", adapter.is_identity())
print(f"toy loss after 5 steps:      {float(loss.data):.5f}")

print()
print("== random init is the negative control ==")
rand = build_adapter(3, init="random", seed=1)
out = rand.forward(Tensor(x))
print("random-init forward changes the input:",
      not np.array_equal(out.data, x))
print("mean |output - input|:", float(np.mean(np.abs(out.data - x))))
