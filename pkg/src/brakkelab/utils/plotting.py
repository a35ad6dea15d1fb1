"""SVG line charts of a run's diagnostics and blow-up ladder."""
import math
from pathlib import Path
from typing import List, Optional

import matplotlib as mpl
mpl.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from brakkelab.core.schemas import BlowupReport  # noqa: E402

PLOT_DIR = "plots"

plt.rcParams.update({
    "svg.hashsalt": "brakkelab",   # stable element ids
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
})


def new_figure(width: float = 6.0, nrows: int = 1):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    fig, axes = plt.subplots(nrows=nrows, ncols=1, figsize=(width, width * golden_ratio * nrows), squeeze=False)
    return fig, axes[:, 0]


def save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_ledger(frame: pd.DataFrame, path: Path) -> Optional[Path]:
    """G, ∫D and ∫S against t, one panel per kernel center."""
    ledger = frame[frame["G"].notna()]
    centers = sorted(ledger["center"].dropna().unique())
    if not centers:
        return None
    fig, axes = new_figure(nrows=len(centers))
    for ax, center in zip(axes, centers):
        rows = ledger[ledger["center"] == center]
        for column, label in (("G", "G"), ("int_D", "∫D"), ("int_S", "∫S")):
            ax.plot(rows["t"], rows[column], label=label)
        ax.set_title(f"center {int(center)} (s = {rows['s'].iloc[0]:.6g})", fontsize=9)
        ax.set_xlabel("t")
        ax.legend()
    return save(fig, path)


def plot_entropy(frame: pd.DataFrame, path: Path) -> Optional[Path]:
    rows = frame.drop_duplicates("snapshot")
    rows = rows[rows["entropy_lb"].notna() | rows["area_ratio_lb"].notna()]
    if rows.empty:
        return None
    fig, axes = new_figure()
    ax = axes[0]
    for column, label in (("entropy_lb", "entropy (lower bound)"), ("area_ratio_lb", "area ratio / π (lower bound)")):
        values = rows[column] / (math.pi if column == "area_ratio_lb" else 1.0)
        ok = values.notna()
        if ok.any():
            ax.plot(rows["t"][ok], values[ok], marker="o", markersize=3, label=label)
    ax.set_xlabel("t")
    ax.legend()
    return save(fig, path)


def plot_residuals(report: BlowupReport, path: Path) -> Optional[Path]:
    """Shrinker residual and |A|² ball masses along the α ladder, log-log."""
    if not report.slices:
        return None
    fig, axes = new_figure()
    ax = axes[0]
    alphas = [sl.alpha for sl in report.slices]
    ax.loglog(alphas, [max(sl.residual, 1e-300) for sl in report.slices], marker="o", label="shrinker residual")
    if any(sl.delta_alpha for sl in report.slices):
        ax.loglog(alphas, [max(sl.delta_alpha or 0.0, 1e-300) for sl in report.slices], marker="s",
                  label="∫ residual over [-2, -1]")
    for radius in report.slices[0].a2_ball_mass:
        ax.loglog(alphas, [max(sl.a2_ball_mass.get(radius, 0.0), 1e-300) for sl in report.slices],
                  linestyle="--", label=f"∫|A|² on B_{radius}")
    ax.set_xlabel("α")
    ax.invert_xaxis()
    ax.legend()
    return save(fig, path)


def plot_run(run_dir: Path, frame: pd.DataFrame, report: Optional[BlowupReport]) -> List[str]:
    """Writes every applicable chart under plots/; returns the paths relative to the run directory."""
    run_dir = Path(run_dir)
    written = [
        plot_ledger(frame, run_dir / PLOT_DIR / "ledger.svg"),
        plot_entropy(frame, run_dir / PLOT_DIR / "entropy.svg"),
        plot_residuals(report, run_dir / PLOT_DIR / "residuals.svg") if report is not None else None,
    ]
    return [path.relative_to(run_dir).as_posix() for path in written if path is not None]
