"""Run report rendering: metrics JSON, a per-space CSV, and figures.

The figures are rendered with the Agg backend so reports work on headless
hosts. Everything lands in one output directory:

    metrics.json         full metrics document (stable key order)
    per_space.csv        one row per space with the headline numbers
    power_timeline.png   instantaneous draw per node over the run
    occupancy_timeline.png  believed occupancy vs physical truth
    messages.png         message accounting bars
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sim import RunResult

_STATE_LEVELS = {
    "vacant": 0,
    "sensing": 1,
    "occupied_ir": 2,
    "occupied_visual": 2,
    "occupied_collision": 2,
}


def write_metrics(result: RunResult, outdir: str) -> str:
    path = os.path.join(outdir, "metrics.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(result.metrics_json())
    return path


def write_per_space_csv(result: RunResult, outdir: str) -> str:
    path = os.path.join(outdir, "per_space.csv")
    metrics = result.metrics
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "space_id",
                "node_state",
                "business_occ",
                "tp",
                "fp",
                "fn",
                "tn",
                "detector_invocations",
                "average_w",
                "detector_duty",
                "energy_j",
            ]
        )
        for sid in sorted(result.nodes):
            counts = metrics["occupancy"]["per_space"][sid]
            power = metrics["power"]["per_node"][sid]
            final = metrics["final"][sid]
            writer.writerow(
                [
                    sid,
                    final["node_state"],
                    final["business_occ"],
                    counts["tp"],
                    counts["fp"],
                    counts["fn"],
                    counts["tn"],
                    metrics["detector"]["per_space"][sid],
                    power["average_w"],
                    power["detector_duty"],
                    power["energy_j"],
                ]
            )
    return path


def _power_series(node) -> tuple[list[float], list[float]]:
    xs: list[float] = []
    ys: list[float] = []
    model = node.cfg.power
    for start, end, active in node.ledger.segments():
        watts = model.standby_w + sum(model.component_w(c) for c in active)
        xs.extend([start / 1000.0, end / 1000.0])
        ys.extend([watts, watts])
    return xs, ys


def render_power_timeline(result: RunResult, outdir: str) -> str:
    path = os.path.join(outdir, "power_timeline.png")
    fig, ax = plt.subplots(figsize=(10, 4))
    for sid in sorted(result.nodes):
        xs, ys = _power_series(result.nodes[sid])
        if xs:
            ax.plot(xs, ys, label=sid, linewidth=1.2)
    model = next(iter(result.nodes.values())).cfg.power if result.nodes else None
    if model is not None:
        ax.axhline(model.always_on_w, color="tab:red", linestyle="--", linewidth=1,
                   label="always-on reference")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("draw (W)")
    ax.set_title("Node power draw")
    if len(result.nodes) <= 12:
        ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_occupancy_timeline(result: RunResult, outdir: str) -> str:
    path = os.path.join(outdir, "occupancy_timeline.png")
    sids = sorted(result.nodes)
    fig, axes = plt.subplots(
        len(sids), 1, figsize=(10, 1.6 * max(1, len(sids))), sharex=True, squeeze=False
    )
    end_s = result.scenario.duration_ms / 1000.0
    for row, sid in enumerate(sids):
        ax = axes[row][0]
        env = result.environments[sid]
        # Physical truth as a shaded band.
        for stay in env.stays:
            t0 = stay.settled_t() / 1000.0
            t1 = end_s if stay.depart_t is None else stay.depart_t / 1000.0
            ax.axvspan(t0, t1, color="tab:green", alpha=0.18)
        # Believed state as a step line.
        xs = [0.0]
        ys = [0]
        for t, state in result.state_changes[sid]:
            xs.extend([t / 1000.0, t / 1000.0])
            ys.extend([ys[-1], _STATE_LEVELS[state]])
        xs.append(end_s)
        ys.append(ys[-1])
        ax.plot(xs, ys, color="tab:blue", linewidth=1.4)
        ax.set_ylim(-0.3, 2.3)
        ax.set_yticks([0, 1, 2], ["vacant", "sensing", "occupied"])
        ax.set_ylabel(sid, rotation=0, ha="right", va="center")
    axes[-1][0].set_xlabel("time (s)")
    fig.suptitle("Believed occupancy (line) vs vehicle presence (shading)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_message_counts(result: RunResult, outdir: str) -> str:
    path = os.path.join(outdir, "messages.png")
    msg = result.metrics["messages"]
    labels = ["sent", "delivered", "applied", "duplicate", "dropped", "corrupt"]
    values = [msg[k] for k in labels]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, values, color="tab:blue")
    for i, v in enumerate(values):
        ax.text(i, v, str(v), ha="center", va="bottom", fontsize="small")
    ax.set_ylabel("messages")
    ax.set_title("Uplink accounting")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_report(result: RunResult, outdir: str) -> list[str]:
    """Write the whole report bundle; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    return [
        write_metrics(result, outdir),
        write_per_space_csv(result, outdir),
        render_power_timeline(result, outdir),
        render_occupancy_timeline(result, outdir),
        render_message_counts(result, outdir),
    ]
