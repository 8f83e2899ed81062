"""Companion figures for the CSV tables, rendered headless to PNG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _groups(rows, keys):
    out = {}
    for r in rows:
        out.setdefault(tuple(r[k] for k in keys), []).append(r)
    return out


def render_convergence(rows, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for (seed,), grp in sorted(_groups(rows, ["seed"]).items()):
        it = [r["iter"] for r in grp]
        ax1.plot(it, [r["snr_db"] for r in grp], label=f"seed {seed}")
        ax2.semilogy(it, [max(r["consensus_gap"], 1e-12) for r in grp])
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("radar SNR [dB]")
    ax1.legend(fontsize=7)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("consensus gap")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _seed_mean(grp, xkey):
    """Average snr_db over seeds at each x."""
    acc = {}
    for r in grp:
        acc.setdefault(r[xkey], []).append(r["snr_db"])
    xs = sorted(acc)
    return xs, [sum(acc[x]) / len(acc[x]) for x in xs]


def render_sweep_rcs(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for (method, p), grp in sorted(_groups(rows, ["method", "power_w"]).items()):
        xs, ys = _seed_mean(grp, "sigma1_sq")
        ax.plot(xs, ys, marker="o", label=f"{method}, P={p:g} W")
    ax.set_xlabel("RIS-path RCS variance")
    ax.set_ylabel("radar SNR [dB]")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep_elements(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for (g,), grp in sorted(_groups(rows, ["gamma_db"]).items()):
        xs, ys = _seed_mean(grp, "N")
        ax.plot(xs, ys, marker="s", label=f"SINR floor {g:g} dB")
    ax.set_xlabel("RIS elements")
    ax.set_ylabel("radar SNR [dB]")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_roc(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for (method,), grp in sorted(_groups(rows, ["method"]).items()):
        xs, emp = _mean_over_seeds(grp, "p_d_empirical")
        _, ana = _mean_over_seeds(grp, "p_d_analytic")
        ax.semilogx(xs, emp, marker="o", label=f"{method} (MC)")
        ax.semilogx(xs, ana, linestyle="--", label=f"{method} (analytic)")
    ax.set_xlabel("false-alarm probability")
    ax.set_ylabel("detection probability")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _mean_over_seeds(grp, ykey):
    acc = {}
    for r in grp:
        acc.setdefault(r["p_fa"], []).append(r[ykey])
    xs = sorted(acc)
    return xs, [sum(acc[x]) / len(acc[x]) for x in xs]
