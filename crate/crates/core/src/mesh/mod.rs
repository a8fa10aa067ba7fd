//! Polyhedral meshes: storage, conformity validation and geometric queries.

mod generators;
mod io;

pub use generators::{
    build_collapsing_mesh, build_cube_mesh, collapsing_apexes, mesh_from_cell_cycles, orient_closed_surface,
};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

use std::collections::HashMap;

use crate::error::{Result, VemError};
use crate::quadrature::{polygon_rule, polyhedron_rule, ClosedSurface, PolygonRule, VolumeRule};

pub type Point3 = [f64; 3];

/// A face as seen from a cell. `reversed` means the stored cycle is clockwise
/// seen from outside the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceRef {
    pub face: usize,
    pub reversed: bool,
}

/// Planar data of a face in its own orthonormal frame. The frame follows the
/// stored vertex cycle, so both cells sharing the face see the same local
/// coordinates.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    /// Area-weighted barycenter x_F.
    pub origin: Point3,
    pub axes: [Point3; 2],
    /// Unit normal of the stored cycle (right-handed with `axes`).
    pub normal: Point3,
    pub area: f64,
    pub diameter: f64,
    /// Vertex cycle in local coordinates relative to `origin`.
    pub local_vertices: Vec<[f64; 2]>,
}

impl FaceGeometry {
    pub fn to_global(&self, xi: &[f64; 2]) -> Point3 {
        let mut p = self.origin;
        for d in 0..3 {
            p[d] += xi[0] * self.axes[0][d] + xi[1] * self.axes[1][d];
        }
        p
    }

    pub fn to_local(&self, x: &Point3) -> [f64; 2] {
        let r = sub(*x, self.origin);
        [dot(r, self.axes[0]), dot(r, self.axes[1])]
    }

    /// Rule in local coordinates, exact to `degree`.
    pub fn rule(&self, degree: usize) -> Result<PolygonRule> {
        polygon_rule(&self.local_vertices, degree)
    }
}

/// Local frame of a face with the normal pointing out of a chosen owner cell.
#[derive(Debug, Clone)]
pub struct FaceFrame {
    pub origin: Point3,
    pub axes: [Point3; 2],
    pub normal: Point3,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub barycenter: Point3,
    pub diameter: f64,
    pub volume: f64,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PolyMesh {
    vertices: Vec<Point3>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<FaceRef>>,
    edges: Vec<[usize; 2]>,
    face_edges: Vec<Vec<usize>>,
    face_cells: Vec<Vec<usize>>,
    face_geometry: Vec<FaceGeometry>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Newell area vector (½ Σ vᵢ × vᵢ₊₁).
pub(crate) fn area_vector(points: &[Point3]) -> Point3 {
    let mut n = [0.0; 3];
    for i in 0..points.len() {
        let c = cross(points[i], points[(i + 1) % points.len()]);
        for d in 0..3 {
            n[d] += 0.5 * c[d];
        }
    }
    n
}

fn diameter_of(points: &[Point3]) -> f64 {
    let mut d: f64 = 0.0;
    for a in points {
        for b in points {
            d = d.max(norm(sub(*a, *b)));
        }
    }
    d
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2], tol: f64) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    (o1 > tol && o2 < -tol || o1 < -tol && o2 > tol) && (o3 > tol && o4 < -tol || o3 < -tol && o4 > tol)
}

fn face_geometry(id: usize, points: &[Point3]) -> Result<FaceGeometry> {
    let diameter = diameter_of(points);
    let av = area_vector(points);
    let area_norm = norm(av);
    if !(area_norm > 1e-14 * diameter * diameter) {
        return Err(VemError::degenerate(format!("face {id}"), format!("zero area ({area_norm:.3e})")));
    }
    let normal = scale(av, 1.0 / area_norm);
    let k = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in points {
        for d in 0..3 {
            mean[d] += p[d] / k;
        }
    }
    for (i, p) in points.iter().enumerate() {
        let off = dot(sub(*p, mean), normal).abs();
        if off > 1e-10 * diameter {
            return Err(VemError::InvalidMesh(format!(
                "face {id} is not planar: vertex {i} is {off:.3e} off its plane"
            )));
        }
    }
    let first = sub(points[1], points[0]);
    let first = sub(first, scale(normal, dot(first, normal)));
    let a1 = scale(first, 1.0 / norm(first));
    let a2 = cross(normal, a1);
    let local: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            let r = sub(*p, mean);
            [dot(r, a1), dot(r, a2)]
        })
        .collect();
    // simple polygon: non-adjacent edges must not cross
    let n = local.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(local[i], local[(i + 1) % n], local[j], local[(j + 1) % n], 1e-14 * diameter * diameter) {
                return Err(VemError::InvalidMesh(format!("face {id} is not a simple polygon")));
            }
        }
    }
    let rule = polygon_rule(&local, 1).map_err(|_| VemError::degenerate(format!("face {id}"), "zero area"))?;
    let area = rule.measure();
    if area <= 0.0 {
        return Err(VemError::InvalidMesh(format!("face {id} has a self-overlapping cycle")));
    }
    let cx = rule.integrate(|x| x[0]) / area;
    let cy = rule.integrate(|x| x[1]) / area;
    let mut origin = mean;
    for d in 0..3 {
        origin[d] += cx * a1[d] + cy * a2[d];
    }
    let local_vertices = local.iter().map(|v| [v[0] - cx, v[1] - cy]).collect();
    Ok(FaceGeometry {
        origin,
        axes: [a1, a2],
        normal,
        area,
        diameter,
        local_vertices,
    })
}

impl PolyMesh {
    /// Builds and validates a mesh.
    pub fn new(vertices: Vec<Point3>, faces: Vec<Vec<usize>>, cells: Vec<Vec<FaceRef>>) -> Result<Self> {
        let nv = vertices.len();
        for (f, cyc) in faces.iter().enumerate() {
            if cyc.len() < 3 {
                return Err(VemError::InvalidMesh(format!("face {f} has {} vertices", cyc.len())));
            }
            if let Some(&v) = cyc.iter().find(|&&v| v >= nv) {
                return Err(VemError::InvalidMesh(format!("face {f} references vertex {v} of {nv}")));
            }
            let mut sorted = cyc.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cyc.len() {
                return Err(VemError::InvalidMesh(format!("face {f} repeats a vertex")));
            }
        }

        let mut edge_ids = HashMap::<[usize; 2], usize>::new();
        let mut edges = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for cyc in &faces {
            let mut fe = Vec::with_capacity(cyc.len());
            for i in 0..cyc.len() {
                let (a, b) = (cyc[i], cyc[(i + 1) % cyc.len()]);
                let key = [a.min(b), a.max(b)];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                fe.push(id);
            }
            face_edges.push(fe);
        }

        let mut face_cells = vec![Vec::new(); faces.len()];
        let mut face_orient = vec![Vec::new(); faces.len()];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 4 {
                return Err(VemError::InvalidMesh(format!("cell {c} has {} faces", cell.len())));
            }
            for fr in cell {
                if fr.face >= faces.len() {
                    return Err(VemError::InvalidMesh(format!("cell {c} references face {} of {}", fr.face, faces.len())));
                }
                if face_cells[fr.face].contains(&c) {
                    return Err(VemError::Conformity {
                        face: fr.face,
                        detail: format!("listed twice by cell {c}"),
                    });
                }
                face_cells[fr.face].push(c);
                face_orient[fr.face].push(fr.reversed);
            }
        }
        for (f, owners) in face_cells.iter().enumerate() {
            match owners.len() {
                0 => {
                    return Err(VemError::Conformity {
                        face: f,
                        detail: "face belongs to no cell".into(),
                    })
                }
                1 => {}
                2 => {
                    if face_orient[f][0] == face_orient[f][1] {
                        return Err(VemError::Conformity {
                            face: f,
                            detail: format!("cells {} and {} orient the face the same way", owners[0], owners[1]),
                        });
                    }
                }
                k => {
                    return Err(VemError::Conformity {
                        face: f,
                        detail: format!("face shared by {k} cells"),
                    })
                }
            }
        }

        let face_geometry = faces
            .iter()
            .enumerate()
            .map(|(f, cyc)| {
                let pts: Vec<Point3> = cyc.iter().map(|&v| vertices[v]).collect();
                face_geometry(f, &pts)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut boundary_vertex = vec![false; nv];
        let mut boundary_edge = vec![false; edges.len()];
        for (f, owners) in face_cells.iter().enumerate() {
            if owners.len() == 1 {
                for &v in &faces[f] {
                    boundary_vertex[v] = true;
                }
                for &e in &face_edges[f] {
                    boundary_edge[e] = true;
                }
            }
        }

        let mesh = PolyMesh {
            vertices,
            faces,
            cells,
            edges,
            face_edges,
            face_cells,
            face_geometry,
            boundary_vertex,
            boundary_edge,
        };
        for c in 0..mesh.cells.len() {
            mesh.check_cell(c)?;
        }
        Ok(mesh)
    }

    fn check_cell(&self, c: usize) -> Result<()> {
        let cycles = self.oriented_cycles(c);
        let points: Vec<Point3> = self.cell_vertices(c).iter().map(|&v| self.vertices[v]).collect();
        let h = diameter_of(&points);
        let mut total = [0.0; 3];
        for cyc in &cycles {
            let pts: Vec<Point3> = cyc.iter().map(|&v| self.vertices[v]).collect();
            let a = area_vector(&pts);
            for d in 0..3 {
                total[d] += a[d];
            }
        }
        if norm(total) > 1e-10 * h * h {
            return Err(VemError::InvalidMesh(format!(
                "cell {c}: oriented faces do not close (|Σ n·A| = {:.3e})",
                norm(total)
            )));
        }
        let rule = self.cell_rule(c, 1)?;
        if rule.measure() <= 0.0 {
            return Err(VemError::InvalidMesh(format!("cell {c} has inward-oriented faces")));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn cells(&self) -> &[Vec<FaceRef>] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Edge ids along the stored cycle of a face: entry `k` joins vertices `k` and `k+1`.
    pub fn face_edges(&self, face: usize) -> &[usize] {
        &self.face_edges[face]
    }

    pub fn face_cells(&self, face: usize) -> &[usize] {
        &self.face_cells[face]
    }

    pub fn face_geometry(&self, face: usize) -> &FaceGeometry {
        &self.face_geometry[face]
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.face_cells[face].len() == 1
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    /// Sorted vertex ids of a cell.
    pub fn cell_vertices(&self, c: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells[c].iter().flat_map(|fr| self.faces[fr.face].iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sorted edge ids of a cell.
    pub fn cell_edges(&self, c: usize) -> Vec<usize> {
        let mut e: Vec<usize> = self.cells[c]
            .iter()
            .flat_map(|fr| self.face_edges[fr.face].iter().copied())
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Face cycles of a cell, counter-clockwise seen from outside.
    pub fn oriented_cycles(&self, c: usize) -> Vec<Vec<usize>> {
        self.cells[c]
            .iter()
            .map(|fr| {
                let mut cyc = self.faces[fr.face].clone();
                if fr.reversed {
                    cyc.reverse();
                }
                cyc
            })
            .collect()
    }

    /// Outward unit normal of `face` with respect to cell `owner`.
    pub fn outward_normal(&self, face: usize, owner: usize) -> Result<Point3> {
        let fr = self.cells[owner]
            .iter()
            .find(|fr| fr.face == face)
            .ok_or_else(|| VemError::InvalidArgument(format!("face {face} is not a face of cell {owner}")))?;
        let n = self.face_geometry[face].normal;
        Ok(if fr.reversed { scale(n, -1.0) } else { n })
    }

    pub fn face_frame(&self, face: usize, owner: usize) -> Result<FaceFrame> {
        if face >= self.faces.len() || owner >= self.cells.len() {
            return Err(VemError::InvalidArgument(format!("face {face} / cell {owner} out of range")));
        }
        let g = &self.face_geometry[face];
        Ok(FaceFrame {
            origin: g.origin,
            axes: g.axes,
            normal: self.outward_normal(face, owner)?,
            diameter: g.diameter,
        })
    }

    /// Volume rule for a cell, exact to `degree`.
    pub fn cell_rule(&self, c: usize, degree: usize) -> Result<VolumeRule> {
        let cycles = self.oriented_cycles(c);
        polyhedron_rule(
            &ClosedSurface {
                vertices: &self.vertices,
                faces: &cycles,
            },
            degree,
        )
        .map_err(|e| match e {
            VemError::DegenerateDomain { detail, .. } => VemError::degenerate(format!("cell {c}"), detail),
            VemError::InvalidMesh(m) => VemError::InvalidMesh(format!("cell {c}: {m}")),
            other => other,
        })
    }

    pub fn cell_geometry(&self, c: usize) -> Result<CellGeometry> {
        if c >= self.cells.len() {
            return Err(VemError::InvalidArgument(format!("cell {c} out of range")));
        }
        let rule = self.cell_rule(c, 1)?;
        let volume = rule.measure();
        let vertices = self.cell_vertices(c);
        let pts: Vec<Point3> = vertices.iter().map(|&v| self.vertices[v]).collect();
        let diameter = diameter_of(&pts);
        if !(volume > 1e-14 * diameter.powi(3)) {
            return Err(VemError::degenerate(format!("cell {c}"), format!("volume {volume:.3e}")));
        }
        let mut barycenter = [0.0; 3];
        for d in 0..3 {
            barycenter[d] = rule.integrate(|x| x[d]) / volume;
        }
        Ok(CellGeometry {
            barycenter,
            diameter,
            volume,
            vertices,
        })
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| {
                let pts: Vec<Point3> = self.cell_vertices(c).iter().map(|&v| self.vertices[v]).collect();
                diameter_of(&pts)
            })
            .fold(0.0, f64::max)
    }
}
