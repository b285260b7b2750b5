"""Write SVG packings and cone meshes for every built-in polyhedron, with structural checks."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from polypack import BUILTINS, build_root_system, builtin_packing, enumerate_orbit, export_cone_mesh, render_svg
from polypack.inversive import pairing
from polypack.packing import distinct_circles
from polypack.serialize import dumps


@dataclass
class FigureConfig:
    outdir: Path = Path("figures")
    depth: int = 4
    mesh_depth: int = 3


def _crossings(circles) -> int:
    bad = 0
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            v = pairing(circles[i], circles[j])
            if -1 + 1e-6 < v < 1 - 1e-6:
                bad += 1
    return bad


def run(cfg: FigureConfig) -> None:
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    for name in BUILTINS:
        pk = builtin_packing(name)
        nodes = list(enumerate_orbit(pk, cfg.depth))
        svg = render_svg(nodes)
        (cfg.outdir / f"{name}_packing.svg").write_text(svg)
        circles = [v for v, _ in distinct_circles(nodes)]
        # pairwise check is quadratic, so sample the first few hundred
        sample = circles[:400]
        print(f"{name:12s} nodes={len(nodes):6d} circles={len(circles):6d} "
              f"svg_circles={svg.count('<circle'):6d} crossings(sample)={_crossings(sample)}")

        rs = build_root_system(pk)
        mesh = export_cone_mesh(rs, cfg.mesh_depth)
        (cfg.outdir / f"{name}_cones.json").write_text(dumps(mesh))
        off = max(abs(np.dot(c["base_center"], c["base_center"]) + c["base_radius"] ** 2 - 1) for c in mesh["cones"])
        print(f"{'':12s} cones={len(mesh['cones'])} polyhedron_vertices={len(mesh['polyhedron']['vertices'])} "
              f"max base-circle sphere residual={off:.1e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", type=Path, default=FigureConfig.outdir)
    ap.add_argument("--depth", type=int, default=FigureConfig.depth)
    ap.add_argument("--mesh-depth", type=int, default=FigureConfig.mesh_depth)
    a = ap.parse_args()
    run(FigureConfig(a.outdir, a.depth, a.mesh_depth))


if __name__ == "__main__":
    main()
