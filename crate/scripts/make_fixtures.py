#!/usr/bin/env python3
"""Generate Voronoi fixture meshes of the unit cube in the vem3d-mesh format.

Seeds are mirrored across the six cube faces so that the Voronoi cells of the
original seeds are exactly the cube-clipped cells. `voronoi_*` meshes are
Lloyd-relaxed, `rand_*` meshes use the raw random seeds.

    python3 scripts/make_fixtures.py fixtures/
"""

import sys
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, Voronoi


def mirrored(seeds):
    pts = [seeds]
    for d in range(3):
        for plane in (0.0, 1.0):
            m = seeds.copy()
            m[:, d] = 2.0 * plane - m[:, d]
            pts.append(m)
    return np.vstack(pts)


def clipped_cells(seeds):
    n = len(seeds)
    vor = Voronoi(mirrored(seeds))
    verts = vor.vertices.copy()
    verts[np.abs(verts) < 1e-12] = 0.0
    verts[np.abs(verts - 1.0) < 1e-12] = 1.0
    return vor, verts, n


def lloyd(seeds, iterations):
    for _ in range(iterations):
        vor, verts, n = clipped_cells(seeds)
        new = seeds.copy()
        for i in range(n):
            region = vor.regions[vor.point_region[i]]
            hull = ConvexHull(verts[region])
            c = hull.points[hull.vertices].mean(axis=0)
            vol = 0.0
            acc = np.zeros(3)
            for s in hull.simplices:
                a, b, d = hull.points[s]
                v = abs(np.dot(a - c, np.cross(b - c, d - c))) / 6.0
                vol += v
                acc += v * (a + b + d + c) / 4.0
            new[i] = acc / vol
        seeds = new
    return seeds


def ordered_cycle(points, normal):
    c = points.mean(axis=0)
    a = points[0] - c
    a -= np.dot(a, normal) * normal
    a /= np.linalg.norm(a)
    b = np.cross(normal, a)
    ang = np.arctan2((points - c) @ b, (points - c) @ a)
    return np.argsort(ang)


def build(seeds):
    vor, verts, n = clipped_cells(seeds)
    key_of = {}
    out_verts = []

    def vid(k):
        key = tuple(np.round(verts[k], 11))
        if key not in key_of:
            key_of[key] = len(out_verts)
            out_verts.append(verts[k])
        return key_of[key]

    faces = []
    cells = [[] for _ in range(n)]
    for (a, b), ridge in zip(vor.ridge_points, vor.ridge_vertices):
        if a >= n and b >= n:
            continue
        if a >= n:
            a, b = b, a
        normal = vor.points[b] - vor.points[a]
        normal /= np.linalg.norm(normal)
        order = ordered_cycle(verts[ridge], normal)
        cyc = []
        for k in order:
            v = vid(ridge[k])
            if not cyc or cyc[-1] != v:
                cyc.append(v)
        while len(cyc) > 1 and cyc[0] == cyc[-1]:
            cyc.pop()
        if len(cyc) < 3:
            continue
        fid = len(faces)
        faces.append(cyc)
        cells[a].append(fid + 1)
        if b < n:
            cells[b].append(-(fid + 1))
    return out_verts, faces, cells


def write(path, verts, faces, cells):
    with open(path, "w") as f:
        f.write("vem3d-mesh 1\n")
        f.write(f"vertices {len(verts)}\n")
        for v in verts:
            f.write(" ".join(repr(float(x)) for x in v) + "\n")
        f.write(f"faces {len(faces)}\n")
        for c in faces:
            f.write(f"{len(c)} " + " ".join(map(str, c)) + "\n")
        f.write(f"cells {len(cells)}\n")
        for c in cells:
            f.write(f"{len(c)} " + " ".join(map(str, c)) + "\n")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
    out.mkdir(parents=True, exist_ok=True)
    for count, seed in ((8, 11), (27, 12), (64, 13)):
        rng = np.random.default_rng(seed)
        raw = rng.uniform(0.05, 0.95, size=(count, 3))
        write(out / f"rand_{count}.mesh", *build(raw))
        write(out / f"voronoi_{count}.mesh", *build(lloyd(raw, 30)))


if __name__ == "__main__":
    main()
