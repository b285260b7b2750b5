"""Print G, the dual form, kernel bases and simple roots for the built-in packings.

    python scripts/reproduce_tables.py --builtin octahedron cube
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from polypack import BUILTINS, build_root_system, builtin_packing


@dataclass
class TableConfig:
    builtins: list[str] = field(default_factory=lambda: ["octahedron", "cube"])
    denominator_limit: int = 1024


def _rational(M: np.ndarray, limit: int) -> tuple[int, np.ndarray]:
    fr = [[Fraction(float(x)).limit_denominator(limit) for x in row] for row in np.atleast_2d(M)]
    den = int(np.lcm.reduce([f.denominator for row in fr for f in row]))
    return den, np.array([[int(f * den) for f in row] for row in fr])


def _show(title: str, M: np.ndarray, limit: int) -> None:
    den, ints = _rational(M, limit)
    err = np.max(np.abs(ints / den - M))
    scale = "" if den == 1 else f"(1/{den}) x "
    print(f"{title} = {scale}  [max rounding error {err:.1e}]")
    for row in ints:
        print("   " + " ".join(f"{x:5d}" for x in row))


def run(cfg: TableConfig) -> None:
    for name in cfg.builtins:
        rs = build_root_system(builtin_packing(name))
        print(f"=== {name}: m={rs.m} vertices, n={rs.n} faces")
        _show("G", rs.G, cfg.denominator_limit)
        _show("G~", rs.G_tilde, cfg.denominator_limit)
        roots = rs.roots / (2 * np.sqrt(2))
        _show("roots / (2 sqrt 2)", roots, cfg.denominator_limit)
        K = rs.kernel_basis
        if K.size:
            # reduced row echelon form makes the printed basis comparable by eye
            from scipy.linalg import qr

            _, _, piv = qr(K.T, pivoting=True)
            B = np.linalg.solve(K.T[:, piv[: K.shape[1]]], K.T)
            _show("ker C (row echelon basis)", B, cfg.denominator_limit)
        print()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--builtin", nargs="+", choices=BUILTINS, default=TableConfig().builtins)
    ap.add_argument("--denominator-limit", type=int, default=1024)
    a = ap.parse_args()
    run(TableConfig(a.builtin, a.denominator_limit))


if __name__ == "__main__":
    main()
