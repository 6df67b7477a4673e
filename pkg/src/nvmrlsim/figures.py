"""Matplotlib figure rendering for the report paths (files only, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure(records, path):
    """fps vs batch size, one line per policy."""
    fig, ax = plt.subplots(figsize=(6, 4))
    policies = sorted({r["policy"] for r in records})
    for policy in policies:
        pts = sorted((r["batch"], r["fps"]) for r in records if r["policy"] == policy)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=policy)
    ax.set_xlabel("batch size N")
    ax.set_ylabel("max fps")
    ax.set_title("Supported frame rate vs batch size")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def envelope_figure(records, path):
    """Max velocity vs fps, one line per environment."""
    fig, ax = plt.subplots(figsize=(6, 4))
    envs = sorted({r["environment"] for r in records})
    for env in envs:
        pts = sorted((r["fps"], r["max_velocity_m_s"]) for r in records
                     if r["environment"] == env)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=env)
    ax.set_xlabel("fps")
    ax.set_ylabel("max velocity (m/s)")
    ax.set_title("Velocity envelope")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def cost_figure(records, path):
    """Per-layer latency and energy bars for one phase table."""
    rows = [r for r in records if r["layer"] != "total"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    labels = [f"{r['layer']}\n{r['phase'][:3]}" for r in rows]
    x = np.arange(len(rows))
    axes[0].bar(x, [r["latency_ms"] for r in rows], color="tab:blue")
    axes[0].set_ylabel("latency (ms)")
    axes[1].bar(x, [r["energy_mj"] for r in rows], color="tab:orange")
    axes[1].set_ylabel("energy (mJ)")
    for ax in axes:
        ax.set_xticks(x)
        ax.set_xticklabels(labels, fontsize=6)
        ax.grid(alpha=0.3, axis="y")
    return _save(fig, path)


def residual_figure(residuals, path):
    """Model-vs-reference error bars from a calibration run."""
    fwd = [r for r in residuals if r["phase"] == "forward"]
    fig, ax = plt.subplots(figsize=(7, 4))
    x = np.arange(len(fwd))
    width = 0.4
    ax.bar(x - width / 2, [r["latency_error_pct"] for r in fwd], width, label="latency")
    ax.bar(x + width / 2, [r["energy_error_pct"] for r in fwd], width, label="energy")
    ax.axhline(30, color="gray", ls="--", lw=0.8)
    ax.axhline(-30, color="gray", ls="--", lw=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels([r["layer"] + ("*" if r["anchor"] == "yes" else "") for r in fwd],
                       fontsize=7)
    ax.set_ylabel("error vs reference (%)")
    ax.set_title("Forward-pass residuals (* = fit anchor)")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    return _save(fig, path)


def train_figure(records, path):
    """Smoothed cumulative reward over iterations, one line per policy."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for policy in sorted({r["policy"] for r in records}):
        pts = [(r["iteration"], r["cumulative_reward"]) for r in records
               if r["policy"] == policy]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=policy, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("smoothed cumulative reward")
    ax.set_title("Online-learning progress")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)
