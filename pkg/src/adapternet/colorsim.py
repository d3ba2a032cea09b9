"""Simulated cameras: CIELAB hue rotation and per-channel power transfer.

Both transforms consume and produce uint8 RGB images, like a camera writing
its output; the float pipeline in between runs in float64. Conversions use
the standard sRGB companding curve and the D65 white point, with the white
point taken from the row sums of the RGB->XYZ matrix so that (1,1,1) maps to
exactly L=100, a=b=0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# sRGB (linear) -> XYZ, D65, 2-degree observer
_RGB2XYZ = np.array([[0.4124, 0.3576, 0.1805],
                     [0.2126, 0.7152, 0.0722],
                     [0.0193, 0.1192, 0.9505]])
_XYZ2RGB = np.linalg.inv(_RGB2XYZ)
_WHITE = _RGB2XYZ.sum(axis=1)  # XYZ of RGB (1,1,1)

_DELTA = 6.0 / 29.0  # CIELAB linear-segment breakpoint


def _srgb_decode(v: np.ndarray) -> np.ndarray:
    # inverse companding: linear below 0.04045, gamma 2.4 above
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def _srgb_encode(v: np.ndarray) -> np.ndarray:
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1.0 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    # cube root above (6/29)^3, linear segment below
    return np.where(t > _DELTA ** 3, np.cbrt(t), t / (3 * _DELTA ** 2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t ** 3, 3 * _DELTA ** 2 * (t - 4.0 / 29.0))


def srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] (shape (...,3)) -> CIELAB (L, a, b)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    xyz = _srgb_decode(rgb) @ _RGB2XYZ.T
    f = _lab_f(xyz / _WHITE)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """CIELAB -> sRGB in [0,1]; out-of-gamut values are trimmed (clamped)."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    f = np.stack([fy + lab[..., 1] / 500.0, fy, fy - lab[..., 2] / 200.0], axis=-1)
    xyz = _lab_f_inv(f) * _WHITE
    linear = np.clip(xyz @ _XYZ2RGB.T, 0.0, 1.0)
    return np.clip(_srgb_encode(linear), 0.0, 1.0)


def rotate_ab(lab: np.ndarray, theta_deg: float) -> np.ndarray:
    """Rotate the (a, b) chroma vector counterclockwise; L is untouched."""
    lab = np.asarray(lab, dtype=np.float64)
    th = np.deg2rad(theta_deg)
    c, s = np.cos(th), np.sin(th)
    out = lab.copy()
    a, b = lab[..., 1], lab[..., 2]
    out[..., 1] = c * a - s * b
    out[..., 2] = s * a + c * b
    return out


def to_float01(img_u8: np.ndarray) -> np.ndarray:
    """uint8 [0,255] -> float [0,1]."""
    return np.asarray(img_u8).astype(np.float64) / 255.0


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """float [0,1] -> uint8, rounding half away from zero."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def color_rotate_image(img_u8: np.ndarray, theta_deg: float) -> np.ndarray:
    """Hue-rotate a uint8 RGB image by theta degrees in CIELAB."""
    lab = srgb_to_lab(to_float01(img_u8))
    return quantize_u8(lab_to_srgb(rotate_ab(lab, theta_deg)))


@dataclass(frozen=True)
class PowerParams:
    """Per-channel exponents applied to RGB values in [0,1]."""

    p_r: float = 0.2
    p_g: float = 0.3
    p_b: float = 0.4

    def __post_init__(self):
        for name, p in (("p_r", self.p_r), ("p_g", self.p_g), ("p_b", self.p_b)):
            if p <= 0:
                raise ValueError(f"power exponent {name} must be > 0, got {p}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_r, self.p_g, self.p_b)


def _power_lut(p: float) -> np.ndarray:
    v = np.arange(256, dtype=np.float64) / 255.0
    return np.floor(255.0 * v ** p + 0.5).astype(np.uint8)


def power_transform(img_u8: np.ndarray, params: PowerParams) -> np.ndarray:
    """Raise each channel of a uint8 RGB image to its exponent (in [0,1])."""
    img_u8 = np.asarray(img_u8)
    out = np.empty_like(img_u8)
    for c, p in enumerate(params.as_tuple()):
        out[..., c] = _power_lut(p)[img_u8[..., c]]
    return out


def count_distinct_outputs(p: float) -> int:
    """How many distinct uint8 values v -> round(255*(v/255)^p) can produce."""
    if p <= 0:
        raise ValueError(f"power exponent must be > 0, got {p}")
    return int(np.unique(_power_lut(p)).size)


# ---------------------------------------------------------------------------
# scenarios: named transform configurations used by the benchmark
# ---------------------------------------------------------------------------

class Scenario:
    """A deterministic uint8-image transform standing in for a new camera."""

    name = "clean"

    def apply(self, img_u8: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class Clean(Scenario):
    def apply(self, img_u8: np.ndarray) -> np.ndarray:
        return np.asarray(img_u8).copy()


class ColorRotation(Scenario):
    name = "color_rotation"

    def __init__(self, theta_deg: float = 150.0):
        self.theta_deg = float(theta_deg)

    def apply(self, img_u8: np.ndarray) -> np.ndarray:
        return color_rotate_image(img_u8, self.theta_deg)

    def describe(self) -> str:
        return f"color_rotation(theta={self.theta_deg:g})"


class PowerCamera(Scenario):
    name = "power"

    def __init__(self, params: PowerParams = PowerParams()):
        self.params = params

    def apply(self, img_u8: np.ndarray) -> np.ndarray:
        return power_transform(img_u8, self.params)

    def describe(self) -> str:
        p = self.params
        return f"power(exponents={p.p_r:g},{p.p_g:g},{p.p_b:g})"


def scenario_from_spec(kind: str, theta: float = 150.0,
                       exponents: tuple[float, float, float] = (0.2, 0.3, 0.4)) -> Scenario:
    """Build a scenario from CLI/config-style parameters."""
    if kind in ("clean", "none"):
        return Clean()
    if kind in ("color-rotation", "color_rotation"):
        return ColorRotation(theta)
    if kind == "power":
        return PowerCamera(PowerParams(*exponents))
    raise ValueError(f"unknown scenario kind {kind!r}")
