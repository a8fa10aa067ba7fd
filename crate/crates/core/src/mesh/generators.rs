use std::collections::{HashMap, VecDeque};

use super::{area_vector, dot, FaceRef, Point3, PolyMesh};
use crate::error::{Result, VemError};

/// Reorients the face cycles of a closed polyhedral surface so that every
/// cycle is counter-clockwise seen from outside.
pub fn orient_closed_surface(vertices: &[Point3], cycles: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut edge_faces: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (f, cyc) in cycles.iter().enumerate() {
        for i in 0..cyc.len() {
            let (a, b) = (cyc[i], cyc[(i + 1) % cyc.len()]);
            edge_faces.entry([a.min(b), a.max(b)]).or_default().push(f);
        }
    }
    if let Some((e, fs)) = edge_faces.iter().find(|(_, fs)| fs.len() != 2) {
        return Err(VemError::InvalidMesh(format!(
            "edge {:?} is shared by {} faces of a closed surface",
            e,
            fs.len()
        )));
    }
    let has_directed = |cyc: &[usize], a: usize, b: usize| (0..cyc.len()).any(|i| cyc[i] == a && cyc[(i + 1) % cyc.len()] == b);

    let mut out: Vec<Option<Vec<usize>>> = vec![None; cycles.len()];
    for seed in 0..cycles.len() {
        if out[seed].is_some() {
            continue;
        }
        out[seed] = Some(cycles[seed].clone());
        let mut queue = VecDeque::from([seed]);
        while let Some(f) = queue.pop_front() {
            let cyc = out[f].clone().unwrap();
            for i in 0..cyc.len() {
                let (a, b) = (cyc[i], cyc[(i + 1) % cyc.len()]);
                for &g in &edge_faces[&[a.min(b), a.max(b)]] {
                    if g == f {
                        continue;
                    }
                    let mut cand = cycles[g].clone();
                    if has_directed(&cand, a, b) {
                        cand.reverse();
                    }
                    match &out[g] {
                        Some(existing) => {
                            if has_directed(existing, a, b) {
                                return Err(VemError::InvalidMesh("surface is not orientable".into()));
                            }
                        }
                        None => {
                            out[g] = Some(cand);
                            queue.push_back(g);
                        }
                    }
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = out.into_iter().map(Option::unwrap).collect();
    let mut six_volume = 0.0;
    for cyc in &out {
        let pts: Vec<Point3> = cyc.iter().map(|&v| vertices[v]).collect();
        six_volume += 2.0 * dot(pts[0], area_vector(&pts));
    }
    if six_volume < 0.0 {
        for cyc in &mut out {
            cyc.reverse();
        }
    }
    Ok(out)
}

/// Builds a mesh from per-cell lists of (unoriented) face cycles, merging
/// faces with equal vertex sets.
pub fn mesh_from_cell_cycles(vertices: Vec<Point3>, cell_cycles: Vec<Vec<Vec<usize>>>) -> Result<PolyMesh> {
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut cells = Vec::with_capacity(cell_cycles.len());
    for cycles in &cell_cycles {
        let oriented = orient_closed_surface(&vertices, cycles)?;
        let mut refs = Vec::with_capacity(oriented.len());
        for cyc in oriented {
            let mut key = cyc.clone();
            key.sort_unstable();
            match index.get(&key) {
                Some(&f) => {
                    let stored = &faces[f];
                    let pos = stored.iter().position(|&v| v == cyc[0]).unwrap();
                    let same = stored[(pos + 1) % stored.len()] == cyc[1];
                    refs.push(FaceRef { face: f, reversed: !same });
                }
                None => {
                    index.insert(key, faces.len());
                    refs.push(FaceRef {
                        face: faces.len(),
                        reversed: false,
                    });
                    faces.push(cyc);
                }
            }
        }
        cells.push(refs);
    }
    PolyMesh::new(vertices, faces, cells)
}

/// Uniform N×N×N hexahedral mesh of the unit cube.
pub fn build_cube_mesh(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(VemError::InvalidArgument("cube mesh needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let m = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut faces = Vec::new();
    // x-normal faces, then y, then z; each cycle has the +axis normal
    let mut xf = HashMap::new();
    let mut yf = HashMap::new();
    let mut zf = HashMap::new();
    for i in 0..m {
        for j in 0..n {
            for k in 0..n {
                xf.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]);
            }
        }
    }
    for j in 0..m {
        for i in 0..n {
            for k in 0..n {
                yf.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]);
            }
        }
    }
    for k in 0..m {
        for i in 0..n {
            for j in 0..n {
                zf.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]);
            }
        }
    }
    let mut cells = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let r = |face: usize, reversed: bool| FaceRef { face, reversed };
                cells.push(vec![
                    r(xf[&(i, j, k)], true),
                    r(xf[&(i + 1, j, k)], false),
                    r(yf[&(i, j, k)], true),
                    r(yf[&(i, j + 1, k)], false),
                    r(zf[&(i, j, k)], true),
                    r(zf[&(i, j, k + 1)], false),
                ]);
            }
        }
    }
    PolyMesh::new(vertices, faces, cells)
}

/// Apexes of the inner octahedron at a given collapse level.
pub fn collapsing_apexes(level: u32) -> [Point3; 2] {
    let t = 0.25 * 0.5f64.powi(level as i32);
    [[0.5 - t, 0.5, 0.5], [0.5 + t, 0.5, 0.5]]
}

/// Unit cube split into an octahedron, whose two apexes lie on the line
/// y = z = 1/2 at distance 2^-(level+1) apart, and four non-convex cells
/// filling the rest. The octahedron flattens towards the plane x = 1/2 as
/// the level grows.
pub fn build_collapsing_mesh(level: u32) -> Result<PolyMesh> {
    if level > 52 {
        return Err(VemError::InvalidArgument(format!("collapse level {level} exceeds 52")));
    }
    let [a, b] = collapsing_apexes(level);
    let mut vertices: Vec<Point3> = Vec::new();
    let mut vid = |p: Point3| -> usize {
        if let Some(i) = vertices.iter().position(|q| q == &p) {
            return i;
        }
        vertices.push(p);
        vertices.len() - 1
    };
    let ia = vid(a);
    let ib = vid(b);
    let mut cells = Vec::new();
    let mut octahedron = Vec::new();
    for ys in [0.0, 1.0] {
        for zs in [0.0, 1.0] {
            let ey = vid([0.5, ys, 0.5]);
            let ez = vid([0.5, 0.5, zs]);
            let mut cyc = Vec::new();
            for x in [0.0, 1.0] {
                cyc.push(vec![vid([x, ys, zs]), vid([x, 0.5, zs]), vid([x, 0.5, 0.5]), vid([x, ys, 0.5])]);
            }
            cyc.push(vec![vid([0.0, ys, zs]), vid([1.0, ys, zs]), vid([1.0, ys, 0.5]), ey, vid([0.0, ys, 0.5])]);
            cyc.push(vec![vid([0.0, ys, zs]), vid([1.0, ys, zs]), vid([1.0, 0.5, zs]), ez, vid([0.0, 0.5, zs])]);
            cyc.push(vec![vid([0.0, ys, 0.5]), ey, ia, vid([0.0, 0.5, 0.5])]);
            cyc.push(vec![ey, vid([1.0, ys, 0.5]), vid([1.0, 0.5, 0.5]), ib]);
            cyc.push(vec![vid([0.0, 0.5, zs]), ez, ia, vid([0.0, 0.5, 0.5])]);
            cyc.push(vec![ez, vid([1.0, 0.5, zs]), vid([1.0, 0.5, 0.5]), ib]);
            cyc.push(vec![ia, ey, ez]);
            cyc.push(vec![ib, ey, ez]);
            octahedron.push(vec![ia, ey, ez]);
            octahedron.push(vec![ib, ey, ez]);
            cells.push(cyc);
        }
    }
    cells.insert(0, octahedron);
    mesh_from_cell_cycles(vertices, cells)
}
