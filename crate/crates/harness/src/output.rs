//! CSV, JSON and JSON-lines emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::study::{iteration_cell, ResultRow, Table};

pub const CSV_HEADER: &str = "experiment,grid,scheme,smoother,colors,sweeps,M,iters_mean,solve_s,total_s,e_p,e_u";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

fn opt_secs(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

/// Rows as CSV under [`CSV_HEADER`].
pub fn rows_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.experiment.clone(),
            r.grid.clone(),
            r.scheme.clone(),
            r.smoother.clone(),
            opt(r.colors),
            opt(r.sweeps),
            opt(r.m),
            iteration_cell(r),
            opt_secs(r.solve_s),
            opt_secs(r.total_s),
            opt_sci(r.e_p),
            opt_sci(r.e_u),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn table_csv(table: &Table) -> String {
    let mut out = format!("sweeps,M,{}\n", table.columns.join(","));
    for r in &table.rows {
        out.push_str(&format!("{},{},{}\n", r.sweeps, r.m, r.cells.join(",")));
    }
    out
}

pub fn json_lines<T: Serialize>(items: &[T]) -> anyhow::Result<String> {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it)?);
        out.push('\n');
    }
    Ok(out)
}

/// Output directory of one verb: `<output.dir>/<name>/<verb>`, created with
/// the resolved config written to `config.json`.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(cfg: &ExperimentConfig, verb: &str) -> anyhow::Result<Self> {
        let path = cfg.output.dir.join(&cfg.name).join(verb);
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        let dir = Self { path };
        dir.write("config.json", &serde_json::to_string_pretty(cfg)?)?;
        Ok(dir)
    }

    pub fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let p = self.path.join(name);
        write_file(&p, contents.as_bytes())?;
        Ok(p)
    }

    pub fn write_rows(&self, rows: &[ResultRow]) -> anyhow::Result<()> {
        self.write("results.csv", &rows_csv(rows))?;
        self.write("results.json", &serde_json::to_string_pretty(rows)?)?;
        Ok(())
    }
}

fn write_file(p: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
    f.write_all(bytes).with_context(|| format!("writing {}", p.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            experiment: "solver_nt10".into(),
            grid: "64x64".into(),
            scheme: "ImEx".into(),
            smoother: "VK2".into(),
            colors: Some(4),
            sweeps: Some(3),
            m: Some(8),
            iters_mean: Some(6.5),
            exceeded: None,
            solve_s: None,
            total_s: None,
            e_p: Some(1.25e-9),
            e_u: Some(3e-10),
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(rows_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_line_layout() {
        let mut r = row();
        let csv = rows_csv(&[r.clone()]);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "solver_nt10,64x64,ImEx,VK2,4,3,8,6.50,,,1.250000e-9,3.000000e-10"
        );
        r.iters_mean = None;
        r.exceeded = Some(500);
        assert!(rows_csv(&[r]).lines().nth(1).unwrap().contains(",8,>500,"));
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![row(), ResultRow { e_u: None, ..row() }];
        let text = serde_json::to_string(&rows).unwrap();
        let back: Vec<ResultRow> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rows);
    }
}
