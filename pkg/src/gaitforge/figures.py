"""Figure rendering for exported trace data.

Each export kind gets a matching matplotlib figure written next to the
CSV. Rendering uses the Agg backend so it works headless; matplotlib is
imported lazily to keep the CLI snappy when figures are disabled.
"""
from __future__ import annotations

from pathlib import Path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_limit_cycle(header: list[str], rows: list[list], out_path: str | Path) -> None:
    plt = _plt()
    joints = [h[:-2] for h in header[1:] if h.endswith("_q")]
    fig, axes = plt.subplots(1, len(joints), figsize=(4 * len(joints), 3.6), squeeze=False)
    for k, joint in enumerate(joints):
        qi = header.index(f"{joint}_q")
        vi = header.index(f"{joint}_qd")
        q = [r[qi] for r in rows]
        qd = [r[vi] for r in rows]
        ax = axes[0][k]
        ax.plot(q, qd, lw=0.6)
        ax.set_xlabel(f"{joint} position [rad]")
        ax.set_ylabel(f"{joint} velocity [rad/s]")
        ax.set_title(joint)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_speed_track(header: list[str], rows: list[list], out_path: str | Path) -> None:
    plt = _plt()
    t = [r[0] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(t, [r[1] for r in rows], label="measured")
    ax1.plot(t, [r[2] for r in rows], "--", label="commanded")
    ax1.set_ylabel("v_x [m/s]")
    ax1.legend(loc="best")
    ax2.plot(t, [r[3] for r in rows], label="measured")
    ax2.plot(t, [r[4] for r in rows], "--", label="commanded")
    ax2.set_ylabel("v_y [m/s]")
    ax2.set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_reward_components(header: list[str], rows: list[list], out_path: str | Path) -> None:
    plt = _plt()
    t = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, name in enumerate(header[1:-1], start=1):
        ax.plot(t, [r[i] for r in rows], lw=0.8, label=name)
    ax.plot(t, [r[-1] for r in rows], "k", lw=1.4, label="total")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("reward")
    ax.legend(loc="upper right", ncol=3, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


RENDERERS = {
    "limit-cycle": render_limit_cycle,
    "speed-track": render_speed_track,
    "reward-components": render_reward_components,
}
