//! Gauss and Gauss-Lobatto rules on [-1, 1], and rules on polygons and
//! polyhedra built from signed fan decompositions.

use crate::error::{Result, VemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Gauss,
    GaussLobatto,
}

#[derive(Debug, Clone)]
pub struct QuadRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

/// Legendre `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Gauss-Legendre rule with `n` nodes, exact to degree `2n - 1`.
pub fn gauss_1d(n: usize) -> QuadRule1D {
    assert!(n >= 1, "gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadRule1D {
        nodes,
        weights,
        kind: RuleKind::Gauss,
    }
}

/// Gauss-Lobatto rule with `n ≥ 2` nodes (endpoints included), exact to
/// degree `2n - 3`. Interior nodes are the roots of `P'_{n-1}`, found by
/// Newton iteration.
pub fn gauss_lobatto_1d(n: usize) -> Result<QuadRule1D> {
    if n < 2 {
        return Err(VemError::InvalidArgument(format!(
            "Gauss-Lobatto rule needs at least 2 nodes, got {n}"
        )));
    }
    let m = n - 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    for i in 1..=(m - 1) / 2 {
        // Chebyshev-Gauss-Lobatto initial guess, right half
        let mut x = (std::f64::consts::PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let ddp = (2.0 * x * dp - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[m - i] = x;
        nodes[i] = -x;
    }
    if m % 2 == 0 {
        nodes[m / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(m, x);
            2.0 / ((m * (m + 1)) as f64 * p * p)
        })
        .collect();
    Ok(QuadRule1D {
        nodes,
        weights,
        kind: RuleKind::GaussLobatto,
    })
}

fn points_for(degree: usize, extra: usize) -> usize {
    (degree + extra + 2) / 2
}

/// Collapsed-product rule on the reference triangle (0,0),(1,0),(0,1).
pub fn triangle_rule(degree: usize) -> Vec<([f64; 2], f64)> {
    let g = gauss_1d(points_for(degree, 1).max(1));
    let mut out = Vec::with_capacity(g.nodes.len().pow(2));
    for (xi, wi) in g.nodes.iter().zip(&g.weights) {
        let u = 0.5 * (xi + 1.0);
        for (eta, wj) in g.nodes.iter().zip(&g.weights) {
            let v = 0.5 * (eta + 1.0);
            out.push(([u, v * (1.0 - u)], 0.25 * wi * wj * (1.0 - u)));
        }
    }
    out
}

/// Collapsed-product rule on the reference tetrahedron.
pub fn tetrahedron_rule(degree: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_1d(points_for(degree, 2).max(1));
    let mut out = Vec::with_capacity(g.nodes.len().pow(3));
    for (a, wa) in g.nodes.iter().zip(&g.weights) {
        let u = 0.5 * (a + 1.0);
        for (b, wb) in g.nodes.iter().zip(&g.weights) {
            let v = 0.5 * (b + 1.0);
            for (c, wc) in g.nodes.iter().zip(&g.weights) {
                let w = 0.5 * (c + 1.0);
                let x = u;
                let y = v * (1.0 - u);
                let z = w * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                out.push(([x, y, z], 0.125 * wa * wb * wc * jac));
            }
        }
    }
    out
}

/// Planar rule in 2D coordinates (weights are signed area weights).
#[derive(Debug, Clone)]
pub struct PolygonRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub declared_degree: usize,
}

impl PolygonRule {
    pub fn integrate(&self, f: impl Fn(&[f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct VolumeRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub declared_degree: usize,
}

impl VolumeRule {
    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Rule on a simple planar polygon given by its vertex cycle in 2D.
///
/// Fan triangulation from the vertex mean; each triangle contributes with its
/// signed area, so nonconvex (star-shaped or not) polygons integrate exactly.
pub fn polygon_rule(vertices: &[[f64; 2]], degree: usize) -> Result<PolygonRule> {
    let k = vertices.len();
    if k < 3 {
        return Err(VemError::InvalidGeometry(format!("polygon with {k} vertices")));
    }
    let mut apex = [0.0; 2];
    for v in vertices {
        apex[0] += v[0] / k as f64;
        apex[1] += v[1] / k as f64;
    }
    let diam2 = vertices
        .iter()
        .flat_map(|a| vertices.iter().map(move |b| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)))
        .fold(0.0, f64::max);
    let reference = triangle_rule(degree);
    let mut rule = PolygonRule {
        points: Vec::with_capacity(k * reference.len()),
        weights: Vec::with_capacity(k * reference.len()),
        declared_degree: degree,
    };
    for i in 0..k {
        let a = vertices[i];
        let b = vertices[(i + 1) % k];
        let e1 = [a[0] - apex[0], a[1] - apex[1]];
        let e2 = [b[0] - apex[0], b[1] - apex[1]];
        let det = cross2(e1, e2);
        for (xi, w) in &reference {
            rule.points.push([
                apex[0] + e1[0] * xi[0] + e2[0] * xi[1],
                apex[1] + e1[1] * xi[0] + e2[1] * xi[1],
            ]);
            rule.weights.push(w * det);
        }
    }
    let area = rule.measure();
    if !(area.abs() > 1e-14 * diam2) {
        return Err(VemError::degenerate("polygon", format!("area {area:.3e}")));
    }
    Ok(rule)
}

/// A closed polyhedral surface: vertex coordinates and outward-oriented
/// (counter-clockwise seen from outside) face cycles.
pub struct ClosedSurface<'a> {
    pub vertices: &'a [[f64; 3]],
    pub faces: &'a [Vec<usize>],
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Rule on a polyhedron bounded by `surface`.
///
/// Signed tetrahedra (cell apex, face apex, edge) with apexes at vertex means.
pub fn polyhedron_rule(surface: &ClosedSurface<'_>, degree: usize) -> Result<VolumeRule> {
    // every directed edge must be matched by its reverse
    let mut directed = std::collections::HashMap::<(usize, usize), i32>::new();
    for f in surface.faces {
        if f.len() < 3 {
            return Err(VemError::InvalidMesh("face with fewer than 3 vertices".into()));
        }
        for i in 0..f.len() {
            let (a, b) = (f[i], f[(i + 1) % f.len()]);
            *directed.entry((a, b)).or_default() += 1;
            *directed.entry((b, a)).or_default() -= 1;
        }
    }
    if directed.values().any(|&c| c != 0) {
        return Err(VemError::InvalidMesh("polyhedron boundary is not closed".into()));
    }

    let used: std::collections::BTreeSet<usize> = surface.faces.iter().flatten().copied().collect();
    let nv = used.len() as f64;
    let mut apex = [0.0; 3];
    for &v in &used {
        for d in 0..3 {
            apex[d] += surface.vertices[v][d] / nv;
        }
    }
    let mut diam: f64 = 0.0;
    for &a in &used {
        for &b in &used {
            let d = sub3(surface.vertices[a], surface.vertices[b]);
            diam = diam.max((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        }
    }

    let reference = tetrahedron_rule(degree);
    let mut rule = VolumeRule {
        points: Vec::new(),
        weights: Vec::new(),
        declared_degree: degree,
    };
    for f in surface.faces {
        let k = f.len() as f64;
        let mut fa = [0.0; 3];
        for &v in f {
            for d in 0..3 {
                fa[d] += surface.vertices[v][d] / k;
            }
        }
        for i in 0..f.len() {
            let a = surface.vertices[f[i]];
            let b = surface.vertices[f[(i + 1) % f.len()]];
            let c0 = sub3(fa, apex);
            let c1 = sub3(a, apex);
            let c2 = sub3(b, apex);
            let det = det3(c0, c1, c2);
            if det == 0.0 {
                continue;
            }
            for (xi, w) in &reference {
                let mut p = apex;
                for d in 0..3 {
                    p[d] += c0[d] * xi[0] + c1[d] * xi[1] + c2[d] * xi[2];
                }
                rule.points.push(p);
                rule.weights.push(w * det);
            }
        }
    }
    let volume = rule.measure();
    if !(volume.abs() > 1e-14 * diam.powi(3)) {
        return Err(VemError::degenerate("polyhedron", format!("volume {volume:.3e}")));
    }
    Ok(rule)
}
