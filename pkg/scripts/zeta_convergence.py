"""Partial sums of Z(s) by depth, next to the membership verdict for the same weight."""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

import numpy as np

from polypack import build_root_system, builtin_packing, descend_to_base, membership, z_partial
from polypack.titscone import z_tail_bound


@dataclass
class ZetaConfig:
    builtin: str = "tetrahedron"
    max_depth: int = 8
    scales: list[float] = field(default_factory=lambda: [-0.25, 0.25, 0.5, 1.0, 2.0, 4.0])


def run(cfg: ZetaConfig) -> None:
    pk = builtin_packing(cfg.builtin)
    rs = build_root_system(pk)
    base, _ = descend_to_base(rs, pk.curvatures)
    print(f"{cfg.builtin}: base tuple {np.round(base, 6).tolist()}")
    header = "scale  verdict    " + " ".join(f"{'Z_' + str(k):>11s}" for k in range(0, cfg.max_depth + 1, 2)) + "   tail"
    print(header)
    for c in cfg.scales:
        s = c * np.ones(rs.m)
        v = membership(rs, s).verdict.value
        vals = [float(z_partial(rs, base, s[:, None], k).values[0]) for k in range(0, cfg.max_depth + 1, 2)]
        try:
            tail = f"{z_tail_bound(rs, base, s, cfg.max_depth):.3e}"
        except ValueError:
            tail = "n/a"
        print(f"{c:5.2f}  {v:10s} " + " ".join(f"{x:11.4e}" for x in vals) + f"   {tail}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--builtin", default=ZetaConfig.builtin)
    ap.add_argument("--max-depth", type=int, default=ZetaConfig.max_depth)
    ap.add_argument("--scales", type=float, nargs="+", default=ZetaConfig().scales)
    a = ap.parse_args()
    run(ZetaConfig(a.builtin, a.max_depth, a.scales))


if __name__ == "__main__":
    main()
