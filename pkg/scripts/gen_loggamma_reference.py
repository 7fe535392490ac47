"""Regenerate the frozen log-gamma reference set (src/kezeta/_data/).

1000 points with |z| <= 50, at least 350 of them in the reflection region
Re z < 0.5, each paired with loggamma(z) computed by mpmath at 40 digits.
Points too close to a pole (distance < 0.25 from a nonpositive integer) are
discarded, as are points where |loggamma| < 0.3 — relative error against a
near-zero reference says nothing about the implementation (loggamma vanishes
at z = 1, 2 and at conjugate complex zeros nearby).

Run from the repository root:  python3 scripts/gen_loggamma_reference.py
"""

import csv
import pathlib

import mpmath as mp
import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "kezeta" / "_data" / "loggamma_reference.csv"
TOTAL = 1000
MIN_REFLECTION = 350
SEED = 20260815

mp.mp.dps = 40


def near_pole(z: complex) -> bool:
    if z.real > 0.5:
        return False
    n = round(z.real)
    if n > 0:
        return False
    return abs(z - n) < 0.25


def main() -> None:
    rng = np.random.default_rng(SEED)
    rows = []
    n_reflect = 0
    while len(rows) < TOTAL:
        # half the draws biased into the reflection region
        if rng.random() < 0.5:
            x = rng.uniform(-49.0, 0.5)
        else:
            x = rng.uniform(-49.0, 49.0)
        y = rng.uniform(-49.0, 49.0)
        z = complex(x, y)
        if abs(z) > 50.0 or near_pole(z):
            continue
        ref = mp.loggamma(mp.mpc(z.real, z.imag))
        if abs(ref) < 0.3:
            continue
        if z.real < 0.5:
            n_reflect += 1
        rows.append((z.real, z.imag, float(ref.real), float(ref.imag)))
    if n_reflect < MIN_REFLECTION:
        raise SystemExit(f"only {n_reflect} reflection-region points; raise the bias")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_z", "im_z", "re_loggamma", "im_loggamma"])
        for row in rows:
            w.writerow([repr(v) for v in row])
    print(f"wrote {len(rows)} points ({n_reflect} with Re z < 0.5) -> {OUT}")


if __name__ == "__main__":
    main()
