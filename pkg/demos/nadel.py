"""The (0, 2k-1) part of the trace-power transgression against its closed form.

    python3 demos/nadel.py
"""

import random
import time

from sparkforge.chern_weil import general_scenario, nadel

CASES = [
    # k, n, trunc, size, terms, per-coordinate cap
    (1, 1, 2, 2, 1, None),
    (2, 3, 2, 2, 3, None),
    (3, 5, 0, 3, 4, 1),
]


def main():
    for k, n, trunc, size, terms, cap in CASES:
        t0 = time.perf_counter()
        sc = general_scenario(random.Random(k), k, n, trunc, size=size, terms=terms, per_coordinate=cap)
        res = nadel(sc)
        dt = time.perf_counter() - t0
        print(f"k={k} n={n}: coefficient {res.coefficient}, match={res.match}, "
              f"{len(res.form.terms)} terms, {dt:.1f}s")


if __name__ == "__main__":
    main()
