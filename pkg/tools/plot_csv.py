"""Render fuzzyvsg trajectory CSVs as PCC power / angle / parameter figures.

Usage:
    fuzzyvsg simulate va_baseline --decoupler off -o off.csv
    fuzzyvsg simulate va_baseline --decoupler on -o on.csv
    python tools/plot_csv.py off.csv on.csv -o va.png

Needs matplotlib (``pip install -e .[plot]``).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

HEADER = "t,p_e,q_e,p_grid,q_grid,omega,e_r,theta_r,j,d,k_q"

PANELS = (
    (("p_e", "q_e"), "PCC power (W, Var)"),
    (("p_grid", "q_grid"), "grid power (W, Var)"),
    (("theta_r",), "power angle (rad)"),
    (("j", "d", "k_q"), "adapted parameters (normalised)"),
)


def load(path):
    with open(path) as fh:
        header = fh.readline().strip()
    if header != HEADER:
        raise SystemExit(f"{path}: unexpected header {header!r}")
    return np.genfromtxt(path, delimiter=",", names=True, comments="#")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("trajectory.png"))
    args = ap.parse_args(argv)

    fig, axes = plt.subplots(len(PANELS), 1, sharex=True, figsize=(8, 10))
    for path in args.csv:
        data = load(path)
        for ax, (cols, title) in zip(axes, PANELS):
            for c in cols:
                y = data[c]
                if title.endswith("(normalised)"):
                    y = y / np.max(np.abs(y))
                ax.plot(data["t"], y, label=f"{path.stem}:{c}")
            ax.set_ylabel(title)
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
    axes[-1].set_xlabel("t (s)")
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
