"""Spark groups and the 3x3 grid on the built-in fixtures.

    python3 demos/spark_groups.py
"""

from sparkforge.cech_models import MODEL_FIXTURES, TRIPLE_FIXTURES
from sparkforge.spark_core import grid_3x3

ORDER = ["Hhat", "H_G", "Hhat_E", "dE", "Z_I", "Ker_I", "H_I", "H_E/H_IE", "H_IE"]


def triples():
    for name in ("point", "synthetic-T1"):
        yield name, TRIPLE_FIXTURES[name]()
    for name in ("triangle-constant", "torus1"):
        yield name, MODEL_FIXTURES[name]().triple()


def main():
    for name, T in triples():
        print(f"{name}  (tier: {T.tier()})")
        for k in range(-1, 3):
            g = grid_3x3(T, k)
            inv = g.invariants()
            row = ", ".join(f"{key}={inv[key]}" for key in ORDER if inv[key] != "0")
            print(f"  k={k:>2}  exact={g.exact}  {row or 'all zero'}")
        print()


if __name__ == "__main__":
    main()
