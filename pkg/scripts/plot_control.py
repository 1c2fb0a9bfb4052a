#!/usr/bin/env python3
"""Plot the controlled trajectory y(t, x) and the boundary control v(t).

Usage: python3 plot_control.py <out_dir> [figure.png]

Reads y.csv and v.csv produced by `wavectl linear-solve` or
`wavectl semilinear-solve` (1d runs).
"""

import csv
import os
import sys

import matplotlib.pyplot as plt
import numpy as np


def load_field_csv(path):
    with open(path) as fh:
        header = fh.readline()
        meta = dict(tok.split("=") for tok in header.lstrip("# ").split())
        fh.readline()
        rows = list(csv.reader(fh))
    nx = int(meta["nx1"])
    nt = int(meta["nt"])
    vals = np.zeros((nt + 1, nx + 2))
    for ix, it, v in rows:
        vals[int(it), int(ix)] = float(v)
    return vals


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    out_dir = sys.argv[1]
    y = load_field_csv(os.path.join(out_dir, "y.csv"))
    with open(os.path.join(out_dir, "v.csv")) as fh:
        fh.readline()
        rows = list(csv.reader(fh))
    faces = sorted({r[0] for r in rows})
    v = {f: [float(r[3]) for r in rows if r[0] == f] for f in faces}

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    im = ax1.imshow(y, aspect="auto", origin="lower", cmap="RdBu_r",
                    extent=[0, 1, 0, 1])
    ax1.set_xlabel("x (normalized)")
    ax1.set_ylabel("t (normalized)")
    ax1.set_title("controlled state y")
    fig.colorbar(im, ax=ax1)
    for f in faces:
        ax2.plot(np.linspace(0, 1, len(v[f])), v[f], label=f"face {f}")
    ax2.set_xlabel("t (normalized)")
    ax2.set_ylabel("v")
    ax2.set_title("boundary control")
    ax2.legend()
    fig.tight_layout()
    if len(sys.argv) > 2:
        fig.savefig(sys.argv[2], dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
