"""Writes data/dani_panel.csv: quadratic irrationals with constant partial quotients and
rationals with small denominators, each with its continued fraction."""

import csv
from fractions import Fraction
from pathlib import Path

from mpmath import mp, sqrt

mp.dps = 40
OUT = Path(__file__).resolve().parent.parent / "data" / "dani_panel.csv"

RATIONALS = [
    (1, 2), (1, 3), (2, 5), (3, 7), (5, 8), (4, 9), (7, 11), (5, 12), (8, 13), (11, 17),
    (7, 19), (13, 21), (9, 23), (17, 29), (13, 31), (21, 34), (19, 37), (23, 41), (27, 43), (31, 50),
]


def cf(frac):
    out = []
    while True:
        a = frac.numerator // frac.denominator
        out.append(a)
        frac -= a
        if frac == 0:
            return out
        frac = 1 / frac


def main():
    rows = []
    for a in range(1, 21):
        x = (sqrt(a * a + 4) - a) / 2
        rows.append(("quadratic", f"[0;{a} repeating]", mp.nstr(x, 20, strip_zeros=False)))
    for p, q in RATIONALS:
        terms = cf(Fraction(p, q))
        label = "[" + str(terms[0]) + ";" + ",".join(map(str, terms[1:])) + "]"
        rows.append(("rational", f"{p}/{q} {label}", mp.nstr(mp.mpf(p) / q, 20, strip_zeros=False)))
    with OUT.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["kind", "label", "x"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
