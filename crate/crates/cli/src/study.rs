//! Execution of the study cross product.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use vem3d_core::analysis::{compute_errors, estimate_condition};
use vem3d_core::assembly::{assemble, solve};
use vem3d_core::elemvem::{BasisChoice, Stabilization};
use vem3d_core::mesh::PolyMesh;
use vem3d_core::VemError;

use crate::config::Experiment;

/// One study cell. Numeric fields are `None` when the cell failed before
/// producing them.
#[derive(Debug, Clone)]
pub struct Row {
    pub mesh: String,
    pub h: Option<f64>,
    pub p: u32,
    pub choice: BasisChoice,
    pub stab: Stabilization,
    pub h1_rel: Option<f64>,
    pub l2_rel: Option<f64>,
    pub kappa: Option<f64>,
    pub ndof: Option<usize>,
    pub seconds: f64,
    /// `ok`, or `error:<kind>: <detail>`.
    pub status: String,
    /// Collapse level of the mesh, used only for plotting.
    pub level: Option<u32>,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

struct Cell {
    mesh: usize,
    p: u32,
    choice: BasisChoice,
    stab: Stabilization,
}

fn error_status(e: &VemError) -> String {
    format!("error:{}: {e}", e.kind())
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs every cell on the current rayon pool. Rows come back in cross-product
/// order (mesh, p, choice, stabilization) whatever the scheduling.
pub fn run(exp: &Experiment) -> Report {
    let meshes: Vec<Result<Arc<PolyMesh>, String>> = exp
        .meshes
        .par_iter()
        .map(|m| m.build().map(Arc::new).map_err(|e| error_status(&e)))
        .collect();
    let mut cells = Vec::new();
    for mesh in 0..exp.meshes.len() {
        for &p in &exp.degrees {
            for &choice in &exp.choices {
                for &stab in &exp.stabilizations {
                    cells.push(Cell { mesh, p, choice, stab });
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|cell| {
            let start = Instant::now();
            let mut row = Row {
                mesh: exp.meshes[cell.mesh].id(),
                h: None,
                p: cell.p,
                choice: cell.choice,
                stab: cell.stab,
                h1_rel: None,
                l2_rel: None,
                kappa: None,
                ndof: None,
                seconds: 0.0,
                status: "ok".into(),
                level: exp.meshes[cell.mesh].level(),
            };
            match &meshes[cell.mesh] {
                Err(status) => row.status = status.clone(),
                Ok(mesh) => {
                    let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(exp, mesh, cell, &mut row)));
                    match outcome {
                        Ok(Ok(())) => {}
                        Ok(Err(e)) => row.status = error_status(&e),
                        Err(payload) => row.status = format!("error:panic: {}", panic_message(payload)),
                    }
                }
            }
            row.seconds = start.elapsed().as_secs_f64();
            eprintln!(
                "[{}] {} p={} {} {}: {}",
                exp.study, row.mesh, row.p, row.choice, row.stab, row.status
            );
            row
        })
        .collect();
    Report { rows }
}

fn run_cell(exp: &Experiment, mesh: &PolyMesh, cell: &Cell, row: &mut Row) -> vem3d_core::Result<()> {
    row.h = Some(mesh.mesh_size());
    let assembled = assemble(mesh, cell.p, cell.choice, cell.stab, exp.solution)?;
    row.ndof = Some(assembled.dofmap.num_free());
    let sol = solve(&assembled)?;
    let err = compute_errors(mesh, &assembled, &sol.values, exp.solution)?;
    row.h1_rel = Some(err.h1_rel);
    row.l2_rel = Some(err.l2_rel);
    if exp.condition && row.ndof != Some(0) {
        let (k, _, _) = assembled.reduced_system();
        row.kappa = Some(estimate_condition(&k)?.kappa);
    }
    Ok(())
}
