use std::fmt::Write as _;
use std::path::Path;

use super::{FaceRef, PolyMesh};
use crate::error::{Result, VemError};

const MAGIC: &str = "vem3d-mesh 1";

/// Serializes a mesh. Coordinates use the shortest round-trip representation.
pub fn write_mesh(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "vertices {}", mesh.num_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} {}", v[0], v[1], v[2]).unwrap();
    }
    writeln!(s, "faces {}", mesh.num_faces()).unwrap();
    for f in mesh.faces() {
        write!(s, "{}", f.len()).unwrap();
        for v in f {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "cells {}", mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        write!(s, "{}", c.len()).unwrap();
        for fr in c {
            let id = fr.face as i64 + 1;
            write!(s, " {}", if fr.reversed { -id } else { id }).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn save_mesh(mesh: &PolyMesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh)).map_err(|e| VemError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

pub fn load_mesh(path: &Path) -> Result<PolyMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| VemError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Result<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let t = l.split('#').next().unwrap().trim();
            if !t.is_empty() {
                self.line = i + 1;
                return Ok(t);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, detail: impl Into<String>) -> VemError {
        VemError::Parse {
            line: self.line,
            detail: detail.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let l = self.next_content()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected '{key} <count>'")));
        }
        let n = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| self.err(format!("bad {key} count")))?;
        if it.next().is_some() {
            return Err(self.err("trailing tokens"));
        }
        Ok(n)
    }

    fn counted<T: std::str::FromStr>(&mut self, what: &str) -> Result<Vec<T>> {
        let l = self.next_content()?;
        let mut it = l.split_whitespace();
        let k: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| self.err(format!("bad {what} size")))?;
        let vals = it
            .map(|t| t.parse::<T>().map_err(|_| self.err(format!("bad {what} entry '{t}'"))))
            .collect::<Result<Vec<T>>>()?;
        if vals.len() != k {
            return Err(self.err(format!("{what} declares {k} entries but has {}", vals.len())));
        }
        Ok(vals)
    }
}

/// Parses the text mesh format; the mesh is validated after parsing.
pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next_content()? != MAGIC {
        return Err(lines.err(format!("expected '{MAGIC}'")));
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = lines.next_content()?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| lines.err(format!("bad coordinate '{t}'"))))
            .collect::<Result<_>>()?;
        if xs.len() != 3 || xs.iter().any(|x| !x.is_finite()) {
            return Err(lines.err("vertex needs three finite coordinates"));
        }
        vertices.push([xs[0], xs[1], xs[2]]);
    }
    let nf = lines.header("faces")?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let f: Vec<usize> = lines.counted("face")?;
        if let Some(v) = f.iter().find(|&&v| v >= nv) {
            return Err(lines.err(format!("vertex index {v} out of range")));
        }
        faces.push(f);
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let refs: Vec<i64> = lines.counted("cell")?;
        let mut cell = Vec::with_capacity(refs.len());
        for r in refs {
            if r == 0 || r.unsigned_abs() as usize > nf {
                return Err(lines.err(format!("face reference {r} out of range")));
            }
            cell.push(FaceRef {
                face: r.unsigned_abs() as usize - 1,
                reversed: r < 0,
            });
        }
        cells.push(cell);
    }
    if lines.next_content().is_ok() {
        return Err(lines.err("trailing content"));
    }
    PolyMesh::new(vertices, faces, cells)
}
