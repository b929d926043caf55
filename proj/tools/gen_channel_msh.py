#!/usr/bin/env python3
"""Generate configs/meshes/channel.msh: a structured triangulation of a
rectangular channel in MSH 2.2 ASCII with inflow/outflow/wall boundary
tags.  Deterministic; rerunning reproduces the committed file byte for
byte."""

import argparse
import pathlib


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=12)
    ap.add_argument("--ny", type=int, default=4)
    ap.add_argument("--length", type=float, default=3.0)
    ap.add_argument("--width", type=float, default=1.0)
    ap.add_argument(
        "--out",
        type=pathlib.Path,
        default=pathlib.Path(__file__).resolve().parent.parent
        / "configs/meshes/channel.msh",
    )
    args = ap.parse_args()
    nx, ny = args.nx, args.ny

    def node_id(i: int, j: int) -> int:
        return j * (nx + 1) + i + 1

    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat"]
    lines += [
        "$PhysicalNames",
        "4",
        '1 1 "inflow"',
        '1 2 "outflow"',
        '1 3 "wall"',
        '2 10 "channel"',
        "$EndPhysicalNames",
    ]

    lines.append("$Nodes")
    lines.append(str((nx + 1) * (ny + 1)))
    for j in range(ny + 1):
        for i in range(nx + 1):
            x = args.length * i / nx
            y = args.width * j / ny
            lines.append(f"{node_id(i, j)} {x:.17g} {y:.17g} 0")
    lines.append("$EndNodes")

    elements = []
    for j in range(ny):  # inflow (x = 0) and outflow (x = length) edges
        elements.append((1, 1, node_id(0, j), node_id(0, j + 1)))
        elements.append((1, 2, node_id(nx, j), node_id(nx, j + 1)))
    for i in range(nx):  # both walls share one physical tag
        elements.append((1, 3, node_id(i, 0), node_id(i + 1, 0)))
        elements.append((1, 3, node_id(i, ny), node_id(i + 1, ny)))
    for j in range(ny):  # two triangles per structured quad
        for i in range(nx):
            a, b = node_id(i, j), node_id(i + 1, j)
            c, d = node_id(i + 1, j + 1), node_id(i, j + 1)
            elements.append((2, 10, a, b, c))
            elements.append((2, 10, a, c, d))

    lines.append("$Elements")
    lines.append(str(len(elements)))
    for eid, (etype, phys, *nodes) in enumerate(elements, start=1):
        entity = phys  # reuse the physical id as the elementary entity id
        lines.append(
            f"{eid} {etype} 2 {phys} {entity} " + " ".join(map(str, nodes))
        )
    lines.append("$EndElements")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out} ({(nx * ny * 2)} triangles)")


if __name__ == "__main__":
    main()
