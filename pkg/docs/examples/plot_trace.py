#!/usr/bin/env python3
"""Plot a trace CSV produced by `harmest run` / `harmest preset`.

Usage:
    python docs/examples/plot_trace.py out/s1-msogi.csv [saved.png]

Requires matplotlib (not a package dependency; the library itself only
writes CSV).
"""
import sys

import numpy as np


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 1
    try:
        import matplotlib
        matplotlib.use("Agg" if len(sys.argv) > 2 else matplotlib.get_backend())
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for this example: pip install matplotlib")
        return 1

    path = sys.argv[1]
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    col = {name: data[:, j] for j, name in enumerate(header)}
    n = (len(header) - 5) // 5

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 7))
    axes[0].plot(col["t"], col["y"], "r--", lw=0.8, label="input")
    axes[0].plot(col["t"], col["yhat"], "b", lw=0.8, label="estimate")
    axes[0].set_ylabel("signal")
    axes[0].legend(loc="upper right")
    axes[1].plot(col["t"], col["e_y"], "b", lw=0.8)
    axes[1].set_ylabel("output error")
    axes[2].plot(col["t"], col["omega_hat"] / (2 * np.pi), "b", lw=0.8)
    axes[2].set_ylabel("frequency estimate [Hz]")
    axes[2].set_xlabel("t [s]")
    fig.suptitle(f"{path} ({n} harmonics)")
    fig.tight_layout()

    if len(sys.argv) > 2:
        fig.savefig(sys.argv[2], dpi=150)
        print(f"wrote {sys.argv[2]}")
    else:
        plt.show()
    return 0


if __name__ == "__main__":
    sys.exit(main())
