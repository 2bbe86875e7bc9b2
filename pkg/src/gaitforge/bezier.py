"""Phase variable and degree-5 Bezier trajectory math.

Desired joint trajectories are degree-5 Bezier curves evaluated on a
normalized phase tau in [0, 1], where tau is relative time within the
current walking step. Everything here is a pure function; the decoder,
regulators and the surrogate environment all share these primitives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGREE = 5
NUM_COEFFS = DEGREE + 1


@dataclass(frozen=True)
class PhaseClock:
    """Walking-step clock: step start time and step duration in seconds."""

    t_start: float
    t_step: float = 0.35

    def __post_init__(self) -> None:
        if not self.t_step > 0.0:
            raise ValueError(f"t_step must be > 0, got {self.t_step}")


@dataclass(frozen=True)
class BezierCurve:
    """Six control coefficients of one joint's degree-5 trajectory."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != NUM_COEFFS:
            raise ValueError(f"expected {NUM_COEFFS} coefficients, got {len(self.coeffs)}")


def phase(clock: PhaseClock, t: float) -> float:
    """Normalized phase tau = (t - t_start) / t_step, clamped to [0, 1].

    Times before the step start are rejected; overruns past one step
    duration clamp to 1.0 (the environment switches stance there).
    """
    if clock.t_step <= 0.0:
        raise ValueError(f"t_step must be > 0, got {clock.t_step}")
    if t < clock.t_start:
        raise ValueError(f"t={t} precedes step start t_start={clock.t_start}")
    tau = (t - clock.t_start) / clock.t_step
    return 1.0 if tau > 1.0 else tau


def bernstein_basis(tau: float) -> np.ndarray:
    """The six degree-5 Bernstein polynomials C(5,k) tau^k (1-tau)^(5-k)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    # Groupings match bernstein_pair_into bit for bit.
    s = 1.0 - tau
    t2 = tau * tau
    s2 = s * s
    t3 = t2 * tau
    s3 = s2 * s
    t4 = t2 * t2
    s4 = s2 * s2
    return np.array(
        [
            s3 * s2,
            5.0 * tau * s4,
            10.0 * t2 * s3,
            10.0 * t3 * s2,
            5.0 * t4 * s,
            t3 * t2,
        ]
    )


def bernstein_basis_deriv(tau: float) -> np.ndarray:
    """Weights mapping the 6 coefficients to dB/dtau.

    dB/dtau of a degree-5 curve is the degree-4 curve with coefficients
    5*(a[k+1] - a[k]); expressed here as a 6-vector acting on the original
    coefficients so position and velocity share one matrix product.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    s = 1.0 - tau
    t2 = tau * tau
    s2 = s * s
    t3 = t2 * tau
    s3 = s2 * s
    t4 = t2 * t2
    s4 = s2 * s2
    b0 = s4
    b1 = 4.0 * tau * s3
    b2 = 6.0 * t2 * s2
    b3 = 4.0 * t3 * s
    b4 = t4
    return np.array(
        [
            -5.0 * b0,
            5.0 * (b0 - b1),
            5.0 * (b1 - b2),
            5.0 * (b2 - b3),
            5.0 * (b3 - b4),
            5.0 * b4,
        ]
    )


def bernstein_pair_into(tau: float, out: np.ndarray) -> None:
    """Fill a (2, 6) buffer with the basis and its tau-derivative weights.

    Equivalent to stacking bernstein_basis and bernstein_basis_deriv but
    allocation free; the environment calls this every integration substep.
    """
    s = 1.0 - tau
    t2 = tau * tau
    s2 = s * s
    t3 = t2 * tau
    s3 = s2 * s
    t4 = t2 * t2
    s4 = s2 * s2
    out[0, 0] = s3 * s2
    out[0, 1] = 5.0 * tau * s4
    out[0, 2] = 10.0 * t2 * s3
    out[0, 3] = 10.0 * t3 * s2
    out[0, 4] = 5.0 * t4 * s
    out[0, 5] = t3 * t2
    b0 = s4
    b1 = 4.0 * tau * s3
    b2 = 6.0 * t2 * s2
    b3 = 4.0 * t3 * s
    b4 = t4
    out[1, 0] = -5.0 * b0
    out[1, 1] = 5.0 * (b0 - b1)
    out[1, 2] = 5.0 * (b1 - b2)
    out[1, 3] = 5.0 * (b2 - b3)
    out[1, 4] = 5.0 * (b3 - b4)
    out[1, 5] = 5.0 * b4


def bezier_eval(curve: BezierCurve | np.ndarray, tau: float) -> float:
    """Evaluate the degree-5 Bezier curve at tau in [0, 1]."""
    coeffs = curve.coeffs if isinstance(curve, BezierCurve) else np.asarray(curve, dtype=float)
    if len(coeffs) != NUM_COEFFS:
        raise ValueError(f"expected {NUM_COEFFS} coefficients, got {len(coeffs)}")
    return float(np.dot(bernstein_basis(tau), coeffs))


def bezier_deriv(curve: BezierCurve | np.ndarray, tau: float, t_step: float) -> float:
    """Time derivative of the curve at tau, for a step of t_step seconds.

    The analytic dB/dtau is scaled by 1/t_step so the result is a joint
    velocity usable as the PD tracking target.
    """
    if t_step <= 0.0:
        raise ValueError(f"t_step must be > 0, got {t_step}")
    coeffs = curve.coeffs if isinstance(curve, BezierCurve) else np.asarray(curve, dtype=float)
    if len(coeffs) != NUM_COEFFS:
        raise ValueError(f"expected {NUM_COEFFS} coefficients, got {len(coeffs)}")
    return float(np.dot(bernstein_basis_deriv(tau), coeffs)) / t_step


def residual(actual: np.ndarray, desired: np.ndarray) -> np.ndarray:
    """Per-joint tracking error: actual output minus desired output."""
    actual = np.asarray(actual, dtype=float)
    desired = np.asarray(desired, dtype=float)
    if actual.shape != desired.shape:
        raise ValueError(f"shape mismatch: {actual.shape} vs {desired.shape}")
    return actual - desired
