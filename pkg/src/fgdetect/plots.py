"""Figure rendering for sweep results.

The sweep report writes a CSV and, next to it, a PNG with BER (log scale)
and BMI curves for every detector in the run.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLES = {
    "bcjr": dict(color="black", marker="o", linestyle="-"),
    "mmse": dict(color="tab:gray", marker="s", linestyle="--"),
    "ffg": dict(color="tab:blue", marker="^", linestyle="-"),
    "ufg": dict(color="tab:orange", marker="v", linestyle="-"),
    "gfg": dict(color="tab:green", marker="d", linestyle="-"),
}


def render_sweep_figure(ebn0_db, results, png_path, title=None) -> None:
    """Render BER/BMI curves.

    ebn0_db: list of grid points; results: {detector: {"ber": [...],
    "bmi": [...]}}; png_path: output file.
    """
    fig, (ax_ber, ax_bmi) = plt.subplots(1, 2, figsize=(10, 4))
    for name, cell in results.items():
        style = _STYLES.get(name, dict(marker="x"))
        ax_ber.semilogy(ebn0_db, cell["ber"], label=name, **style)
        ax_bmi.plot(ebn0_db, cell["bmi"], label=name, **style)
    ax_ber.set_xlabel("Eb/N0 [dB]")
    ax_ber.set_ylabel("BER")
    ax_ber.grid(True, which="both", alpha=0.4)
    ax_ber.legend()
    ax_bmi.set_xlabel("Eb/N0 [dB]")
    ax_bmi.set_ylabel("BMI [bit]")
    ax_bmi.grid(True, alpha=0.4)
    ax_bmi.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_loss_figure(losses, png_path, title=None) -> None:
    """Per-step training loss curve."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(losses)), losses)
    ax.set_xlabel("step")
    ax.set_ylabel("loss (-BMI) [bit]")
    ax.grid(True, alpha=0.4)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
