"""Run configuration: one JSON document owning every tunable constant.

The schema is strict: unknown keys are rejected, every field has a
documented default, and loading then serializing then loading again gives
identical effective settings. `gaitforge config-default` dumps the
defaults.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import decoder as decoder_mod
from .decoder import (
    COEFFS_PER_JOINT,
    NUM_CHANNELS,
    NUM_COEFF_CHANNELS,
    NUM_KD,
    NUM_KFP,
    NUM_KT,
    ActionBounds,
    ActionDecoder,
)
from .env import BipedEnv, EnvParams
from .policy import OBS_DIM, NormalizationSpec

LEARNED_JOINT_NAMES = (
    "stance_hip_roll",
    "stance_hip_yaw",
    "stance_hip_pitch",
    "stance_knee",
    "swing_hip_roll",
    "swing_hip_yaw",
    "swing_hip_pitch",
    "swing_knee",
)
# joint type (roll, yaw, pitch, knee) per learned joint, for limit checks
_JOINT_TYPE = (0, 1, 2, 3, 0, 1, 2, 3)


class ConfigError(ValueError):
    """Configuration file failed validation."""


@dataclass(frozen=True)
class ESConfig:
    """Evolution-strategies hyperparameters (desk-scale defaults)."""

    pairs: int = 32
    sigma: float = 0.05
    learning_rate: float = 0.02
    iterations: int = 200
    episodes_per_candidate: int = 4
    seed: int = 0
    workers: int = 1
    checkpoint_interval: int = 10

    def __post_init__(self) -> None:
        if self.pairs < 1:
            raise ConfigError(f"pairs must be >= 1, got {self.pairs}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.episodes_per_candidate < 1:
            raise ConfigError("episodes_per_candidate must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class DecoderBoundsConfig:
    """Physical ranges behind the 45 action channels, plus the symmetry table.

    coefficient_bounds maps each learned joint to the [min, max] shared by
    its four free Bezier coefficients; gain bound lists are per channel.
    The symmetry table (column permutation and signs building T) defaults
    to the left/right mirror with negated hip roll and yaw.
    """

    coefficient_bounds: dict[str, tuple[float, float]]
    kd_bounds: tuple[tuple[float, float], ...]
    kfp_bounds: tuple[tuple[float, float], ...]
    kt_bounds: tuple[tuple[float, float], ...]
    symmetry_permutation: tuple[int, ...] = decoder_mod.DEFAULT_SYMMETRY_PERMUTATION
    symmetry_signs: tuple[float, ...] = decoder_mod.DEFAULT_SYMMETRY_SIGNS

    def __post_init__(self) -> None:
        missing = set(LEARNED_JOINT_NAMES) - set(self.coefficient_bounds)
        extra = set(self.coefficient_bounds) - set(LEARNED_JOINT_NAMES)
        if missing or extra:
            raise ConfigError(
                f"coefficient_bounds keys wrong: missing={sorted(missing)} extra={sorted(extra)}"
            )
        for name, count in (("kd_bounds", NUM_KD), ("kfp_bounds", NUM_KFP), ("kt_bounds", NUM_KT)):
            if len(getattr(self, name)) != count:
                raise ConfigError(f"{name} must have {count} entries")
        try:
            decoder_mod.validate_symmetry_table(self.symmetry_permutation, self.symmetry_signs)
        except ValueError as exc:
            raise ConfigError(f"symmetry table: {exc}") from exc

    def to_action_bounds(self) -> ActionBounds:
        lo = np.empty(NUM_CHANNELS)
        hi = np.empty(NUM_CHANNELS)
        for j, name in enumerate(LEARNED_JOINT_NAMES):
            a, b = self.coefficient_bounds[name]
            lo[j * COEFFS_PER_JOINT:(j + 1) * COEFFS_PER_JOINT] = a
            hi[j * COEFFS_PER_JOINT:(j + 1) * COEFFS_PER_JOINT] = b
        gains = list(self.kd_bounds) + list(self.kfp_bounds) + list(self.kt_bounds)
        for i, (a, b) in enumerate(gains):
            lo[NUM_COEFF_CHANNELS + i] = a
            hi[NUM_COEFF_CHANNELS + i] = b
        return ActionBounds(lo=lo, hi=hi)


def default_decoder_bounds() -> DecoderBoundsConfig:
    return DecoderBoundsConfig(
        coefficient_bounds={
            "stance_hip_roll": (-0.25, 0.25),
            "stance_hip_yaw": (-0.25, 0.25),
            "stance_hip_pitch": (-0.2, 0.9),
            "stance_knee": (-1.4, -0.1),
            "swing_hip_roll": (-0.25, 0.25),
            "swing_hip_yaw": (-0.25, 0.25),
            "swing_hip_pitch": (-0.2, 0.9),
            "swing_knee": (-1.4, -0.1),
        },
        kd_bounds=((0.5, 14.0),) * NUM_KD,
        kfp_bounds=((0.0, 1.4), (0.0, 0.7), (0.0, 1.4), (0.0, 0.7)),
        kt_bounds=((0.0, 36.0), (0.0, 6.0), (0.0, 36.0), (0.0, 6.0)),
    )


@dataclass(frozen=True)
class RunConfig:
    env: EnvParams
    decoder: DecoderBoundsConfig
    normalization: NormalizationSpec
    es: ESConfig

    def action_bounds(self) -> ActionBounds:
        return self.decoder.to_action_bounds()

    def make_decoder(self) -> ActionDecoder:
        return ActionDecoder(
            self.action_bounds(),
            perm=self.decoder.symmetry_permutation,
            signs=self.decoder.symmetry_signs,
        )

    def make_env(self, push_events=None) -> BipedEnv:
        return BipedEnv(self.env, self.make_decoder(), push_events)

    def validate(self) -> None:
        """Cross-field checks: coefficient bounds inside mechanical limits."""
        lo_t = self.env.joint_lower
        hi_t = self.env.joint_upper
        for j, name in enumerate(LEARNED_JOINT_NAMES):
            a, b = self.decoder.coefficient_bounds[name]
            t = _JOINT_TYPE[j]
            if a < lo_t[t] or b > hi_t[t]:
                raise ConfigError(
                    f"coefficient bounds for {name} [{a}, {b}] exceed the "
                    f"mechanical range [{lo_t[t]}, {hi_t[t]}]"
                )


def default_config() -> RunConfig:
    from .policy import default_normalization

    return RunConfig(
        env=EnvParams(),
        decoder=default_decoder_bounds(),
        normalization=default_normalization(),
        es=ESConfig(),
    )


# ----------------------------------------------------------------------
# JSON serialization

def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    return {
        "env": dataclasses.asdict(cfg.env),
        "decoder": {
            "coefficient_bounds": {
                k: list(v) for k, v in cfg.decoder.coefficient_bounds.items()
            },
            "kd_bounds": [list(b) for b in cfg.decoder.kd_bounds],
            "kfp_bounds": [list(b) for b in cfg.decoder.kfp_bounds],
            "kt_bounds": [list(b) for b in cfg.decoder.kt_bounds],
            "symmetry": {
                "permutation": list(cfg.decoder.symmetry_permutation),
                "signs": list(cfg.decoder.symmetry_signs),
            },
        },
        "normalization": {
            "center": list(cfg.normalization.center),
            "half_range": list(cfg.normalization.half_range),
        },
        "es": dataclasses.asdict(cfg.es),
    }


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _merge_dataclass(cls, defaults, overrides: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    _require_keys(overrides, names, where)
    values = dataclasses.asdict(defaults)
    values.update(overrides)
    # JSON gives lists; dataclasses here want tuples
    for k, v in values.items():
        if isinstance(v, list):
            values[k] = tuple(tuple(x) if isinstance(x, list) else x for x in v)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(doc: dict[str, Any]) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(doc, {"env", "decoder", "normalization", "es"}, "config root")
    base = default_config()

    env = _merge_dataclass(EnvParams, base.env, doc.get("env", {}), "env")
    es = _merge_dataclass(ESConfig, base.es, doc.get("es", {}), "es")

    dec_doc = dict(doc.get("decoder", {}))
    _require_keys(
        dec_doc,
        {"coefficient_bounds", "kd_bounds", "kfp_bounds", "kt_bounds", "symmetry"},
        "decoder",
    )
    dec_defaults = base.decoder
    coeff = {k: tuple(v) for k, v in dec_doc.get(
        "coefficient_bounds",
        {k: list(v) for k, v in dec_defaults.coefficient_bounds.items()},
    ).items()}
    sym_doc = dict(dec_doc.get("symmetry", {}))
    _require_keys(sym_doc, {"permutation", "signs"}, "decoder.symmetry")
    try:
        decoder_cfg = DecoderBoundsConfig(
            coefficient_bounds=coeff,
            kd_bounds=tuple(tuple(b) for b in dec_doc.get("kd_bounds", dec_defaults.kd_bounds)),
            kfp_bounds=tuple(tuple(b) for b in dec_doc.get("kfp_bounds", dec_defaults.kfp_bounds)),
            kt_bounds=tuple(tuple(b) for b in dec_doc.get("kt_bounds", dec_defaults.kt_bounds)),
            symmetry_permutation=tuple(
                int(p) for p in sym_doc.get("permutation", dec_defaults.symmetry_permutation)
            ),
            symmetry_signs=tuple(
                float(s) for s in sym_doc.get("signs", dec_defaults.symmetry_signs)
            ),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"decoder: {exc}") from exc

    norm_doc = dict(doc.get("normalization", {}))
    _require_keys(norm_doc, {"center", "half_range"}, "normalization")
    center = np.asarray(norm_doc.get("center", base.normalization.center), dtype=float)
    half = np.asarray(norm_doc.get("half_range", base.normalization.half_range), dtype=float)
    if center.shape != (OBS_DIM,) or half.shape != (OBS_DIM,):
        raise ConfigError(f"normalization arrays must have length {OBS_DIM}")
    try:
        norm = NormalizationSpec(center=center, half_range=half)
    except ValueError as exc:
        raise ConfigError(f"normalization: {exc}") from exc

    cfg = RunConfig(env=env, decoder=decoder_cfg, normalization=norm, es=es)
    cfg.validate()
    try:
        cfg.action_bounds()
    except ValueError as exc:
        raise ConfigError(f"decoder bounds: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)
