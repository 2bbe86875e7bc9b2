"""Hand-written stabilizing controller for tests and push protocols.

Emits raw 45-channel actions through the same bounds the policy uses, so
the full decode/regulate/track pipeline is exercised. The gait itself is
deliberately plain: hold the nominal posture through the step, rely on the
foot placement regulation for balance, and lean the swing leg mid-curve
with the measured forward speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import (
    COEFFS_PER_JOINT,
    NUM_CHANNELS,
    NUM_COEFF_CHANNELS,
    ActionBounds,
)

_RAW_MARGIN = 0.02  # keep raw channels strictly inside (0, 1)


@dataclass(frozen=True)
class BaselineGains:
    """Fixed physical targets behind the baseline action."""

    # per learned joint (decoder order): mid-curve posture targets
    posture: tuple[float, ...] = (0.0, 0.0, 0.3, -0.6, 0.0, 0.0, 0.3, -0.7)
    # swing hip pitch mid-curve shift per m/s of measured forward speed
    swing_speed_trim: float = 0.35
    kd: tuple[float, ...] = (12.0, 8.0, 12.0, 12.0, 2.0)
    # foot placement: derivative-dominant, since impact anchoring turns
    # each per-step offset into a permanent shift of the next anchor (the
    # K_d term then telescopes into a velocity-proportional placement)
    kfp: tuple[float, ...] = (0.2, 0.45, 0.05, 0.45)
    kt: tuple[float, ...] = (33.0, 5.5, 33.0, 5.5)


class BaselineController:
    """obs -> raw action, inverse-scaled through the decoder bounds."""

    SWING_HIP_PITCH_JOINT = 6  # decoder-order index

    def __init__(self, bounds: ActionBounds, gains: BaselineGains | None = None):
        self.bounds = bounds
        self.gains = gains or BaselineGains()
        # all channels except the swing hip pitch block are constant
        g = self.gains
        static = np.empty(NUM_CHANNELS)
        for j, target in enumerate(g.posture):
            for k in range(COEFFS_PER_JOINT):
                static[j * COEFFS_PER_JOINT + k] = self._inverse_scale(
                    j * COEFFS_PER_JOINT + k, target
                )
        base = NUM_COEFF_CHANNELS
        for i, v in enumerate((*g.kd, *g.kfp, *g.kt)):
            static[base + i] = self._inverse_scale(base + i, v)
        self._static = static
        sw = self.SWING_HIP_PITCH_JOINT
        self._sw_slice = slice(sw * COEFFS_PER_JOINT, (sw + 1) * COEFFS_PER_JOINT)
        self._sw_lo = self.bounds.lo[self._sw_slice.start]
        self._sw_span = (
            self.bounds.hi[self._sw_slice.start] - self.bounds.lo[self._sw_slice.start]
        )

    def _inverse_scale(self, channel: int, value: float) -> float:
        lo = self.bounds.lo[channel]
        hi = self.bounds.hi[channel]
        raw = (value - lo) / (hi - lo)
        return min(max(raw, _RAW_MARGIN), 1.0 - _RAW_MARGIN)

    def __call__(self, obs: np.ndarray) -> np.ndarray:
        g = self.gains
        raw = self._static.copy()
        target = g.posture[self.SWING_HIP_PITCH_JOINT] + g.swing_speed_trim * float(obs[2])
        r = (target - self._sw_lo) / self._sw_span
        raw[self._sw_slice] = min(max(r, _RAW_MARGIN), 1.0 - _RAW_MARGIN)
        return raw
