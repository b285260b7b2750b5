"""Descend random orbit nodes by the area invariant and compare with the curvature descent."""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from polypack import BUILTINS, build_root_system, builtin_packing, descend_to_base
from polypack.areainv import geometric_base_descent
from polypack.errors import PolypackError
from polypack.rootsys import random_reduced_word


@dataclass
class DescentConfig:
    builtins: tuple[str, ...] = ("tetrahedron", "octahedron", "cube")
    samples: int = 30
    depth: int = 4
    seed: int = 7


def run(cfg: DescentConfig) -> None:
    rng = np.random.default_rng(cfg.seed)
    for name in cfg.builtins:
        pk = builtin_packing(name)
        rs = build_root_system(pk)
        agree = failed = 0
        steps = []
        for _ in range(cfg.samples):
            word = random_reduced_word(pk.n, int(rng.integers(1, cfg.depth + 1)), rng)
            b = pk.curvatures
            for j in reversed(word):
                b = b @ rs.reflections[j].T
            alg, _ = descend_to_base(rs, b)
            try:
                geo = geometric_base_descent(pk, word=word)
            except PolypackError:
                failed += 1
                continue
            steps.append(len(geo.word))
            tuples = [T @ pk.C for T in geo.bases]
            if any(np.allclose(np.sort(X[1]), np.sort(alg), atol=1e-8 * np.abs(alg).max()) for X in tuples):
                agree += 1
        print(f"{name:12s} samples={cfg.samples} agree={agree} failed={failed} mean_steps={np.mean(steps):.2f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--builtin", nargs="+", choices=BUILTINS, default=list(DescentConfig.builtins))
    ap.add_argument("--samples", type=int, default=DescentConfig.samples)
    ap.add_argument("--depth", type=int, default=DescentConfig.depth)
    ap.add_argument("--seed", type=int, default=DescentConfig.seed)
    a = ap.parse_args()
    run(DescentConfig(tuple(a.builtin), a.samples, a.depth, a.seed))


if __name__ == "__main__":
    main()
