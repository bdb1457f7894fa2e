"""Static figures for a run directory (Agg backend, PNG files)."""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

log = logging.getLogger(__name__)

plt.rcParams.update({
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
})


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return rows


def _by_eps(rows, key):
    out = defaultdict(list)
    for r in rows:
        out[float(r["eps"])].append(r)
    return dict(sorted(out.items(), reverse=True))


def plot_moderateness(run: Path, out: Path):
    fits = json.loads((run / "moderateness.json").read_text())
    if not fits:
        return None
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for f in fits:
        eps = np.array(f["ladder"])
        norms = np.array(f["norms"])
        line, = ax.loglog(1 / eps, norms, "o", ms=3, label=f"{f['kind']}: slope {f['slope']:.3g}")
        ax.loglog(1 / eps, np.exp(f["intercept"]) * (1 / eps) ** f["slope"], "-", lw=0.8,
                  color=line.get_color())
    ax.set_xlabel(r"$1/\varepsilon$")
    ax.set_ylabel(r"$\sup_t \|u_\varepsilon(t)\|$")
    ax.legend(fontsize=7, frameon=False)
    cap = fits[0].get("cap")
    title = "moderateness"
    if cap is not None:
        title += f" (cap {cap:.3g})"
    ax.set_title(title)
    path = out / "moderateness.png"
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_energy(run: Path, out: Path):
    rows = _read_csv(run / "energy.csv")
    groups = _by_eps(rows, "eps")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    cmap = plt.get_cmap("viridis")
    for i, (eps, rs) in enumerate(groups.items()):
        c = cmap(i / max(1, len(groups) - 1))
        t = np.array([float(r["t"]) for r in rs])
        ax.semilogy(t, [float(r["E"]) for r in rs], color=c, lw=1, label=f"eps={eps:.3g}")
        ax.semilogy(t, [float(r["bound"]) for r in rs], color=c, lw=0.7, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)  (dashed: Gronwall bound)")
    ax.legend(fontsize=6, frameon=False, ncol=2)
    path = out / "energy.png"
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sensitivity(run: Path, out: Path):
    rep = json.loads((run / "sensitivity.json").read_text())
    eps = np.array(rep["ladder"])
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.loglog(1 / eps, rep["sup_t_difference_L2"], "o-", ms=3,
              label=r"$\sup_t\|u_\varepsilon-\tilde u_\varepsilon\|$")
    if "envelope" in rep:
        C = rep["envelope_constant"]
        ax.loglog(1 / eps, np.sqrt(C * np.array(rep["envelope"])), "--", lw=0.8,
                  label=r"$(C\,\omega^2\lambda)^{1/2}$")
    ax.set_xlabel(r"$1/\varepsilon$")
    ax.set_title(" vs ".join(rep["kernels"]), fontsize=8)
    ax.legend(fontsize=7, frameon=False)
    path = out / "sensitivity.png"
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_consistency(run: Path, out: Path):
    rep = json.loads((run / "consistency.json").read_text())
    eps = np.array(rep["ladder"])
    err = np.array(rep["errors_H0_H1_H2"])
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for k in range(err.shape[1]):
        line, = ax.loglog(1 / eps, err[:, k], "o-", ms=3, label=f"H{k} error")
        ax.axhline(rep["floor_H0_H1_H2"][k], color=line.get_color(), ls=":", lw=0.7)
    ax.loglog(1 / eps, rep["data_errors_H2"], "k--", lw=0.8, label="data error H2")
    ax.set_xlabel(r"$1/\varepsilon$")
    ax.legend(fontsize=7, frameon=False)
    ax.set_title(f"consistency ({rep['reference']})")
    path = out / "consistency.png"
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


PLOTS = {
    "moderateness.json": plot_moderateness,
    "energy.csv": plot_energy,
    "sensitivity.json": plot_sensitivity,
    "consistency.json": plot_consistency,
}


def _summary_lines(run: Path):
    lines = [f"# Run `{run.name}`", ""]
    summary = run / "summary.json"
    if summary.exists():
        s = json.loads(summary.read_text())
        for key in ("kernel", "scale", "glaeser_passed", "gronwall_passed", "symmetriser_residual",
                    "moderateness_slope_L2", "moderateness_verdict", "moderateness_cap"):
            if key in s:
                lines.append(f"- {key}: {s[key]}")
        for key in ("consistency", "sensitivity"):
            if key in s:
                lines.append(f"- {key}: " + ", ".join(f"{k}={v}" for k, v in s[key].items()))
        if "pairs" in s:
            lines.append("")
            lines.append("| kernel | scale | slope | verdict |")
            lines.append("|---|---|---|---|")
            for p in s["pairs"]:
                lines.append(f"| {p['kernel']} | {p['scale']} | {p.get('moderateness_slope_L2', float('nan')):.4g} "
                             f"| {p.get('moderateness_verdict', 'n/a')} |")
    return lines


def render(run: Path):
    """Render every figure whose source report exists; returns (written, warnings)."""
    run = Path(run)
    subs = sorted(p for p in run.iterdir() if p.is_dir() and (p / "moderateness.json").exists())
    targets = [run] + subs
    written, warnings = [], []
    for d in targets:
        out = d / "figures"
        for source, fn in PLOTS.items():
            if not (d / source).exists():
                if d is run and not subs:
                    warnings.append(f"missing {source}")
                continue
            out.mkdir(exist_ok=True)
            try:
                p = fn(d, out)
            except (ValueError, KeyError, OSError) as exc:
                warnings.append(f"{source}: {exc}")
                continue
            if p is not None:
                written.append(p)
    if written or (run / "summary.json").exists():
        lines = _summary_lines(run)
        if written:
            lines += ["", "## Figures", ""] + [f"![{p.stem}]({p.relative_to(run)})" for p in written]
        if warnings:
            lines += ["", "## Warnings", ""] + [f"- {w}" for w in warnings]
        (run / "summary.md").write_text("\n".join(lines) + "\n")
    return written, warnings
