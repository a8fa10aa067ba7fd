//! CSV output.

use std::path::Path;

use anyhow::{Context, Result};
use vem3d_core::analysis::{convergence_rates, Rate};

use crate::study::Row;

pub const COLUMNS: [&str; 11] = [
    "mesh", "h", "p", "choice", "stab", "h1_rel", "l2_rel", "kappa", "ndof", "seconds", "status",
];

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn write_report(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.mesh.clone(),
            num(r.h),
            r.p.to_string(),
            r.choice.to_string(),
            r.stab.to_string(),
            num(r.h1_rel),
            num(r.l2_rel),
            num(r.kappa),
            r.ndof.map(|n| n.to_string()).unwrap_or_default(),
            format!("{:.16e}", r.seconds),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Observed h-rates between consecutive meshes, per (p, choice, stabilization)
/// series. Failed rows are skipped.
pub fn rate_table(rows: &[Row]) -> Vec<[String; 7]> {
    let mut keys: Vec<(u32, String, String)> = Vec::new();
    for r in rows {
        let k = (r.p, r.choice.to_string(), r.stab.to_string());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (p, choice, stab) in keys {
        let series: Vec<&Row> = rows
            .iter()
            .filter(|r| r.is_ok() && r.p == p && r.choice.to_string() == choice && r.stab.to_string() == stab)
            .collect();
        if series.len() < 2 {
            continue;
        }
        let h: Vec<f64> = series.iter().map(|r| r.h.unwrap()).collect();
        let e1: Vec<f64> = series.iter().map(|r| r.h1_rel.unwrap()).collect();
        let e0: Vec<f64> = series.iter().map(|r| r.l2_rel.unwrap()).collect();
        let (Ok(r1), Ok(r0)) = (convergence_rates(&h, &e1), convergence_rates(&h, &e0)) else {
            continue;
        };
        let show = |r: &Rate| match r {
            Rate::Value(v) => format!("{v:.6}"),
            Rate::Exact => "exact".into(),
        };
        for i in 0..r1.len() {
            out.push([
                p.to_string(),
                choice.clone(),
                stab.clone(),
                format!("{:.16e}", h[i]),
                format!("{:.16e}", h[i + 1]),
                show(&r1[i]),
                show(&r0[i]),
            ]);
        }
    }
    out
}

pub fn write_rates(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["p", "choice", "stab", "h_coarse", "h_fine", "h1_rate", "l2_rate"])?;
    for rec in rate_table(rows) {
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vem3d_core::elemvem::{BasisChoice, Stabilization};

    fn row(h: f64, e: f64) -> Row {
        Row {
            mesh: format!("m{h}"),
            h: Some(h),
            p: 1,
            choice: BasisChoice::Standard,
            stab: Stabilization::S2,
            h1_rel: Some(e),
            l2_rel: Some(e * e),
            kappa: None,
            ndof: Some(1),
            seconds: 0.0,
            status: "ok".into(),
            level: None,
        }
    }

    #[test]
    fn rates_from_synthetic_series() {
        let t = rate_table(&[row(0.4, 0.2), row(0.2, 0.1), row(0.1, 0.05)]);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0][5], "1.000000");
        assert_eq!(t[0][6], "2.000000");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut bad = row(0.5, 0.1);
        bad.status = "error:degenerate-element: x, y".into();
        bad.h1_rel = None;
        write_report(&path, &[row(0.5, 0.25), bad]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mesh,h,p,choice,stab,h1_rel,l2_rel,kappa,ndof,seconds,status");
        assert!(lines[1].starts_with("m0.5,5.0000000000000000e-1,1,standard,S2,2.5000000000000000e-1,"));
        assert!(lines[2].contains(",,") && lines[2].ends_with("\"error:degenerate-element: x, y\""));
    }
}
