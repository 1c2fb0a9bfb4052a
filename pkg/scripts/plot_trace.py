#!/usr/bin/env python3
"""Plot fixed-point iteration diagnostics from a trace.csv.

Usage: python3 plot_trace.py <out_dir>/trace.csv [figure.png]
"""

import csv
import sys

import matplotlib.pyplot as plt


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    path = sys.argv[1]
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    k = [int(r["k"]) for r in rows]
    d = [float(r["d_k"]) for r in rows]
    ratios = [float(r["ratio"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.semilogy(k, d, "o-")
    ax1.set_xlabel("iteration k")
    ax1.set_ylabel(r"$d_k = \|\rho(y_{k+1}-y_k)\|_{L^2(Q)}$")
    ax1.set_title("Picard distances")
    ax2.plot(k[1:], ratios[1:], "s-")
    ax2.axhline(1.0, color="r", ls="--", lw=0.8)
    ax2.set_xlabel("iteration k")
    ax2.set_ylabel(r"$d_{k}/d_{k-1}$")
    ax2.set_title("contraction ratios")
    fig.tight_layout()
    if len(sys.argv) > 2:
        fig.savefig(sys.argv[2], dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
