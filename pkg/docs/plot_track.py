"""Plot an angle-track CSV produced by `maslov index --format csv`.

Usage:
    maslov index --shape circle:r=1 --loop full --samples 512 \
        --format csv --out track.csv
    python docs/plot_track.py track.csv
"""

import csv
import sys

import matplotlib.pyplot as plt
import numpy as np


def main(path: str) -> None:
    ts, values = [], []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            ts.append(float(row["t"]))
            values.append(complex(float(row["re"]), float(row["im"])))
    ts = np.asarray(ts)
    values = np.asarray(values)

    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    left.plot(values.real, values.imag, ".-", markersize=2)
    left.set_aspect("equal")
    left.set_title("squared-determinant track")
    left.set_xlabel("Re")
    left.set_ylabel("Im")

    steps = np.angle(values[1:] * np.conj(values[:-1]))
    unwrapped = np.concatenate([[0.0], np.cumsum(steps)])
    right.plot(ts, unwrapped / (2.0 * np.pi))
    right.set_title("unwrapped phase / 2 pi")
    right.set_xlabel("t")
    right.set_ylabel("turns")

    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1])
