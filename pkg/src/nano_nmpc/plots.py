"""Report figures rendered alongside the delimited run log."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_report(log, out_dir) -> list:
    """Render trajectory, tracking, input, and solver figures as PNG files."""
    paths = []
    paths.append(_trajectory_figure(log, os.path.join(out_dir, "trajectory.png")))
    paths.append(_tracking_figure(log, os.path.join(out_dir, "tracking.png")))
    paths.append(_inputs_figure(log, os.path.join(out_dir, "inputs.png")))
    paths.append(_solver_figure(log, os.path.join(out_dir, "solver.png")))
    return paths


def _trajectory_figure(log, path):
    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(projection="3d")
    ax.plot(*log.ref_state[:, 0:3].T, "b--", label="reference")
    ax.plot(*log.state[:, 0:3].T, "r-", label="flown")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _tracking_figure(log, path):
    fig, axes = plt.subplots(4, 1, figsize=(7, 8), sharex=True)
    labels = ("x", "y", "z")
    for i, ax in enumerate(axes[:3]):
        ax.plot(log.t, log.ref_state[:, i], "b--", label=f"{labels[i]} ref")
        ax.plot(log.t, log.state[:, i], "r-", label=labels[i])
        ax.set_ylabel(f"{labels[i]} [m]")
        ax.legend(loc="best", fontsize=8)
    axes[3].plot(log.t, log.position_error(), "k-")
    axes[3].set_ylabel("|p err| [m]")
    axes[3].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _inputs_figure(log, path):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].plot(log.t, log.u[:, 0], "r-")
    axes[0].set_ylabel("thrust [N]")
    for i, lbl in enumerate(("wx", "wy", "wz")):
        axes[1].plot(log.t, log.u[:, 1 + i], label=lbl)
    axes[1].set_ylabel("rate cmd [rad/s]")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _solver_figure(log, path):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    kkt = np.maximum(log.kkt, 1e-16)
    axes[0].semilogy(log.t, kkt, "k-")
    axes[0].set_ylabel("KKT residual")
    axes[1].plot(log.t, 1e3 * log.prepare_s, label="prepare")
    axes[1].plot(log.t, 1e3 * log.feedback_s, label="feedback")
    axes[1].plot(log.t, 1e3 * log.total_s, label="total")
    axes[1].set_ylabel("solve time [ms]")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
