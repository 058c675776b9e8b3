use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use unsat_poro::io::{write_cell_fields, write_snapshot};
use unsat_poro::mesh::StructuredTriMesh;
use unsat_poro::time_integration::Scheme;
use unsat_poro_harness::fields::generate_fields;
use unsat_poro_harness::output::{json_lines, table_csv, RunDir};
use unsat_poro_harness::study::{run_solver_study, run_time_study, simulate, validate_splitting};
use unsat_poro_harness::ExperimentConfig;

#[derive(Parser)]
#[command(name = "unsat-poro", version, about = "Unsaturated poroelasticity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the field seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock columns.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.fields.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.output.timings |= self.timings;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// One transient; writes step reports and the final nodal snapshot.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "imex")]
        scheme: String,
        /// Time steps (default: first entry of time.n_t).
        #[arg(long)]
        n_t: Option<usize>,
    },
    /// Im, sIm and ImEx over the N_t list against an implicit reference.
    TimeStudy {
        #[command(flatten)]
        common: Common,
    },
    /// Two-grid iteration counts over smoothers, sweeps, M and grids.
    SolverStudy {
        #[command(flatten)]
        common: Common,
    },
    /// Per-cell k_s and E_d on the configured mesh.
    GenFields {
        #[command(flatten)]
        common: Common,
    },
    /// Dominance of the bar splitting along a semi-implicit trajectory.
    ValidateSplitting {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.05)]
        rho: f64,
        #[arg(long, default_value_t = 20)]
        states: usize,
    },
}

fn parse_scheme(s: &str) -> anyhow::Result<Scheme> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .with_context(|| format!("unknown scheme {s:?} (expected im, sim or imex)"))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, scheme, n_t } => {
            let cfg = common.resolve()?;
            let scheme = parse_scheme(&scheme)?;
            let n_t = n_t.or(cfg.time.n_t.first().copied()).context("no N_t given")?;
            let dir = RunDir::create(&cfg, "simulate")?;
            let (problem, out) = simulate(&cfg, scheme, n_t)?;
            dir.write("steps.jsonl", &json_lines(&out.steps)?)?;
            let f = File::create(dir.path.join("final.csv"))?;
            write_snapshot(BufWriter::new(f), problem.mesh.vertices(), out.final_state())?;
            println!(
                "{scheme}: {n_t} steps, mean solver iterations {:.2}, output in {}",
                out.mean_iterations(),
                dir.path.display()
            );
        }
        Command::TimeStudy { common } => {
            let cfg = common.resolve()?;
            let dir = RunDir::create(&cfg, "time-study")?;
            let study = run_time_study(&cfg)?;
            dir.write_rows(&study.rows)?;
            dir.write("steps.jsonl", &json_lines(&study.steps)?)?;
            print!("{}", unsat_poro_harness::output::rows_csv(&study.rows));
        }
        Command::SolverStudy { common } => {
            let cfg = common.resolve()?;
            let dir = RunDir::create(&cfg, "solver-study")?;
            let study = run_solver_study(&cfg)?;
            dir.write_rows(&study.rows())?;
            dir.write("steps.jsonl", &json_lines(&study.steps)?)?;
            for &n in &cfg.solver.grids {
                let t = study.table(&cfg, n);
                let text = table_csv(&t);
                dir.write(&format!("table_{n}.csv"), &text)?;
                println!("{}\n{text}", t.grid);
            }
        }
        Command::GenFields { common } => {
            let cfg = common.resolve()?;
            let dir = RunDir::create(&cfg, "gen-fields")?;
            let mesh = StructuredTriMesh::new(cfg.mesh.n, cfg.mesh.length)?;
            let (k_s, e_d) = generate_fields(&cfg.fields, &mesh);
            let path = dir.path.join("fields.csv");
            write_cell_fields(BufWriter::new(File::create(&path)?), &k_s, &e_d)?;
            println!("{} cells written to {}", k_s.len(), path.display());
        }
        Command::ValidateSplitting { common, rho, states } => {
            let cfg = common.resolve()?;
            let dir = RunDir::create(&cfg, "validate-splitting")?;
            let checks = validate_splitting(&cfg, rho, states)?;
            dir.write("dominance.jsonl", &json_lines(&checks)?)?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            println!("{} states checked, {failed} failed", checks.len());
            anyhow::ensure!(failed == 0, "splitting dominance failed at {failed} states");
        }
    }
    Ok(())
}
