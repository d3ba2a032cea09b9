"""Simulated cameras: hue rotation in CIELAB and per-channel power curves.

Writes a strip of transformed copies of one synthetic image to demos/out/.

Run: python3 demos/02_simulated_cameras.py
"""

from pathlib import Path

import numpy as np

from adapternet.colorsim import (ColorRotation, PowerCamera, PowerParams,
                                 count_distinct_outputs, srgb_to_lab)
from adapternet.data import write_png
from adapternet.synthetic import make_scene_images

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

images, labels = make_scene_images(n=1, seed=4)
img = images[0]
write_png(OUT / "camera_original.png", img)
print(f"one synthetic image (class {labels[0]}) -> {OUT}/camera_original.png")

print()
print("== hue rotation happens in Lab; lightness only moves where the ==")
print("== rotated color leaves the sRGB gamut and gets trimmed back  ==")
for theta in (60.0, 150.0, 240.0):
    rot = ColorRotation(theta).apply(img)
    write_png(OUT / f"camera_rot{int(theta)}.png", rot)
    l_before = srgb_to_lab(img.astype(np.float64) / 255.0)[..., 0]
    l_after = srgb_to_lab(rot.astype(np.float64) / 255.0)[..., 0]
    print(f"theta {theta:5.1f}: max |delta L| = "
          f"{np.max(np.abs(l_after - l_before)):.3f} "
          f"-> camera_rot{int(theta)}.png")

print()
print("== power curves crush channels and destroy distinct levels ==")
for p in (0.2, 0.5, 2.0):
    cam = PowerCamera(PowerParams(p, p, p))
    write_png(OUT / f"camera_pow{p}.png", cam.apply(img))
    print(f"p = {p}: {count_distinct_outputs(p)} of 256 output levels "
          f"survive -> camera_pow{p}.png")

print()
print("== the benchmark scenario pair ==")
for scen in (ColorRotation(150.0), PowerCamera(PowerParams(0.2, 0.3, 0.4))):
    out = scen.apply(img)
    changed = float((out != img).mean())
    print(f"{scen.describe():38} changes {changed:.0%} of pixel bytes")
