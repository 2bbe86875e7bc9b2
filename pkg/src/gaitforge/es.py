"""Evolution-strategies training: mirrored sampling, centered-rank shaping.

The optimizer core is a plain ask/tell loop over a flat parameter vector.
Perturbations come from a counter-based stream keyed by (run seed,
iteration, pair index), so results are bit-identical no matter how rollout
evaluation is scheduled across workers. Fitness is the undiscounted
episodic return on the surrogate, averaged over a few command-sampled
episodes per candidate.
"""
from __future__ import annotations

import csv
import json
import os
import time
import warnings
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .config import ESConfig, RunConfig, config_from_dict, config_to_dict
from .policy import (
    DEFAULT_ARCH,
    Architecture,
    NormalizationSpec,
    PolicyEvaluator,
    PolicyParams,
    init,
    normalize,
)

CHECKPOINT_VERSION = 1


class CheckpointVersionError(ValueError):
    """Checkpoint file has an unsupported format version."""


# ----------------------------------------------------------------------
# optimizer primitives

def centered_ranks(values: np.ndarray) -> np.ndarray:
    """Map fitnesses to ranks centered in [-0.5, 0.5], averaging ties.

    Tie averaging makes the update exactly zero when all fitnesses are
    equal and keeps the transform invariant under any strictly monotone
    rescaling of the fitnesses.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n <= 1:
        return np.zeros(n)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j)
        i = j + 1
    return ranks / (n - 1) - 0.5


def noise_for(run_seed: int, iteration: int, pair: int, dim: int) -> np.ndarray:
    """Deterministic perturbation for one mirrored pair.

    Keyed by logical indices, not by scheduling order, so any worker can
    regenerate exactly the same vector.
    """
    seq = np.random.SeedSequence((run_seed, iteration, pair))
    rng = np.random.Generator(np.random.Philox(seq))
    return rng.standard_normal(dim)


def es_step(
    theta: np.ndarray,
    fitnesses: np.ndarray,
    noises: np.ndarray,
    sigma: float,
    learning_rate: float,
) -> tuple[np.ndarray, int]:
    """One parameter update from mirrored-pair fitnesses.

    fitnesses has length 2n ordered [pair0+, pair0-, pair1+, ...]; noises
    is (n, dim). Non-finite fitnesses drop their candidate (with a
    warning) and the step renormalizes by the surviving count.
    """
    fit = np.asarray(fitnesses, dtype=float)
    n_pairs = len(noises)
    if fit.shape != (2 * n_pairs,):
        raise ValueError(f"expected {2 * n_pairs} fitnesses, got {fit.shape}")
    finite = np.isfinite(fit)
    dropped = int((~finite).sum())
    if dropped:
        warnings.warn(f"dropping {dropped} candidate(s) with non-finite fitness")
    m = int(finite.sum())
    if m == 0:
        return theta.copy(), dropped
    weights = np.zeros(2 * n_pairs)
    weights[finite] = centered_ranks(fit[finite])
    pair_w = weights[0::2] - weights[1::2]
    grad = pair_w @ noises
    return theta + (learning_rate / (m * sigma)) * grad, dropped


class EvolutionStrategy:
    """Ask/tell optimizer over a flat parameter vector."""

    def __init__(self, dim: int, config: ESConfig, theta0: np.ndarray | None = None):
        self.dim = dim
        self.config = config
        self.theta = np.zeros(dim) if theta0 is None else np.asarray(theta0, float).copy()
        self.iteration = 0
        self._noises: np.ndarray | None = None

    def ask(self) -> list[np.ndarray]:
        """Candidates for this iteration: [p0+, p0-, p1+, p1-, ...]."""
        c = self.config
        self._noises = np.stack(
            [noise_for(c.seed, self.iteration, i, self.dim) for i in range(c.pairs)]
        )
        out = []
        for eps in self._noises:
            out.append(self.theta + c.sigma * eps)
            out.append(self.theta - c.sigma * eps)
        return out

    def tell(self, fitnesses) -> dict:
        if self._noises is None:
            raise RuntimeError("tell() called before ask()")
        fit = np.asarray(fitnesses, dtype=float)
        self.theta, dropped = es_step(
            self.theta, fit, self._noises, self.config.sigma, self.config.learning_rate
        )
        self._noises = None
        self.iteration += 1
        finite = fit[np.isfinite(fit)]
        return {
            "iteration": self.iteration,
            "mean_return": float(finite.mean()) if len(finite) else float("nan"),
            "max_return": float(finite.max()) if len(finite) else float("nan"),
            "dropped": dropped,
        }


# ----------------------------------------------------------------------
# rollout evaluation

def episode_setup(run_seed: int, iteration: int, candidate: int, episode: int,
                  cfg: RunConfig) -> tuple[int, tuple[float, float]]:
    """Seed and commanded velocity for one episode, by logical index."""
    seq = np.random.SeedSequence((run_seed, iteration, candidate, episode))
    cmd_child, env_child = seq.spawn(2)
    rng = np.random.default_rng(cmd_child)
    v_x = float(rng.uniform(*cfg.env.v_x_range))
    v_y = float(rng.uniform(*cfg.env.v_y_range))
    return int(env_child.generate_state(1)[0]), (v_x, v_y)


def run_episode(env, evaluator: PolicyEvaluator, norm: NormalizationSpec,
                env_seed: int, v_des: tuple[float, float]) -> tuple[float, int]:
    """Roll one episode; returns (undiscounted return, ticks)."""
    obs = env.reset(seed=env_seed, v_desired=v_des)
    total = 0.0
    ticks = 0
    while True:
        action = evaluator.forward(normalize(obs, norm))
        result = env.step(action)
        total += result.reward.total
        ticks += 1
        obs = result.observation
        if result.terminated:
            return total, ticks


def evaluate_candidate(flat: np.ndarray, cfg: RunConfig, iteration: int,
                       candidate: int) -> tuple[float, float]:
    """Mean return and mean episode length over the candidate's episodes."""
    evaluator = PolicyEvaluator(PolicyParams(flat=np.asarray(flat, float)))
    env = cfg.make_env()
    es = cfg.es
    total = 0.0
    ticks = 0.0
    for ep in range(es.episodes_per_candidate):
        env_seed, v_des = episode_setup(es.seed, iteration, candidate, ep, cfg)
        ret, tk = run_episode(env, evaluator, cfg.normalization, env_seed, v_des)
        total += ret
        ticks += tk
    n = es.episodes_per_candidate
    return total / n, ticks / n


_worker_cfg: RunConfig | None = None


def _pool_init(cfg_doc: dict) -> None:
    global _worker_cfg
    _worker_cfg = config_from_dict(cfg_doc)


def _pool_eval(task) -> tuple[float, float]:
    flat, iteration, candidate = task
    return evaluate_candidate(flat, _worker_cfg, iteration, candidate)


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit argument or 1, capped by GAITFORGE_THREADS."""
    workers = requested if requested is not None and requested >= 1 else None
    env_val = os.environ.get("GAITFORGE_THREADS")
    cap = None
    if env_val:
        try:
            cap = max(1, int(env_val))
        except ValueError:
            warnings.warn(f"ignoring invalid GAITFORGE_THREADS={env_val!r}")
    if workers is None:
        workers = cap if cap is not None else 1
    elif cap is not None:
        workers = min(workers, cap)
    return workers


# ----------------------------------------------------------------------
# checkpoints

@dataclass(frozen=True)
class Checkpoint:
    params: np.ndarray
    iteration: int
    seed: int
    best_return: float
    stats: dict = field(default_factory=dict)
    arch: Architecture = field(default=DEFAULT_ARCH)
    version: int = CHECKPOINT_VERSION

    def policy_params(self) -> PolicyParams:
        return PolicyParams(flat=self.params, arch=self.arch)


def checkpoint_to_json(cp: Checkpoint) -> str:
    doc = {
        "version": cp.version,
        "arch": {
            "input": cp.arch.input_dim,
            "hidden": list(cp.arch.hidden),
            "output": cp.arch.output_dim,
        },
        "iteration": cp.iteration,
        "seed": cp.seed,
        "best_return": repr(float(cp.best_return)),
        "stats": {k: repr(float(v)) for k, v in sorted(cp.stats.items())},
        "params": [repr(float(x)) for x in cp.params],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(path: str | Path, cp: Checkpoint) -> None:
    Path(path).write_text(checkpoint_to_json(cp))


def load_checkpoint(path: str | Path) -> Checkpoint:
    doc = json.loads(Path(path).read_text())
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {version!r} unsupported (expected {CHECKPOINT_VERSION})"
        )
    arch = Architecture(
        input_dim=int(doc["arch"]["input"]),
        hidden=tuple(int(h) for h in doc["arch"]["hidden"]),
        output_dim=int(doc["arch"]["output"]),
    )
    params = np.array([float(x) for x in doc["params"]])
    if params.shape != (arch.param_count(),):
        raise ValueError("checkpoint parameter count does not match its architecture")
    return Checkpoint(
        params=params,
        iteration=int(doc["iteration"]),
        seed=int(doc["seed"]),
        best_return=float(doc["best_return"]),
        stats={k: float(v) for k, v in doc["stats"].items()},
        arch=arch,
        version=version,
    )


# ----------------------------------------------------------------------
# training loop

def train(cfg: RunConfig, out_dir: str | Path, workers: int | None = None,
          progress=None) -> Checkpoint:
    """Run ES training; writes checkpoints and a CSV log under out_dir.

    Deterministic per config seed: checkpoint bytes are identical across
    runs and across worker counts. The CSV's wall_seconds column is the
    one timing-dependent output.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    es_cfg = cfg.es
    n_workers = resolve_workers(workers if workers is not None else es_cfg.workers)

    theta = init(es_cfg.seed).flat.copy()
    strategy = EvolutionStrategy(len(theta), es_cfg, theta0=theta)
    best = float("-inf")
    last_cp: Checkpoint | None = None

    log_path = out / "training_log.csv"
    pool = None
    try:
        if n_workers > 1:
            pool = Pool(n_workers, initializer=_pool_init, initargs=(config_to_dict(cfg),))
        with open(log_path, "w", newline="") as log_file:
            writer = csv.writer(log_file)
            writer.writerow(
                ["iteration", "mean_return", "max_return", "mean_episode_ticks", "wall_seconds"]
            )
            for it in range(es_cfg.iterations):
                t0 = time.perf_counter()
                candidates = strategy.ask()
                if pool is not None:
                    tasks = [(cand, it, idx) for idx, cand in enumerate(candidates)]
                    results = pool.map(_pool_eval, tasks, chunksize=1)
                else:
                    results = [
                        evaluate_candidate(cand, cfg, it, idx)
                        for idx, cand in enumerate(candidates)
                    ]
                fits = np.array([r[0] for r in results])
                ticks = np.array([r[1] for r in results])
                stats = strategy.tell(fits)
                best = max(best, stats["max_return"])
                wall = time.perf_counter() - t0
                writer.writerow([
                    stats["iteration"],
                    repr(stats["mean_return"]),
                    repr(stats["max_return"]),
                    repr(float(ticks.mean())),
                    f"{wall:.3f}",
                ])
                log_file.flush()
                if progress is not None:
                    progress(stats["iteration"], stats["mean_return"],
                             stats["max_return"], float(ticks.mean()))
                last_iteration = stats["iteration"]
                if (last_iteration % es_cfg.checkpoint_interval == 0
                        or last_iteration == es_cfg.iterations):
                    last_cp = Checkpoint(
                        params=strategy.theta.copy(),
                        iteration=last_iteration,
                        seed=es_cfg.seed,
                        best_return=best,
                        stats={
                            "mean_return": stats["mean_return"],
                            "max_return": stats["max_return"],
                            "mean_episode_ticks": float(ticks.mean()),
                        },
                    )
                    save_checkpoint(out / f"checkpoint_{last_iteration:06d}.json", last_cp)
                    save_checkpoint(out / "checkpoint_latest.json", last_cp)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    assert last_cp is not None
    return last_cp
