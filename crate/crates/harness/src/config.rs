//! JSON experiment configuration.
//!
//! Every section has defaults matching the silt experiment, so `{}` is a
//! valid config. Pressures are in Pa, lengths in m, times in s, moduli in Pa.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unsat_poro::constitutive::{
    CoefficientModel, ElasticityParams, FluidSolidParams, MaterialModel, VanGenuchtenParams,
};
use unsat_poro::mesh::{BoundaryConfig, StructuredTriMesh};
use unsat_poro::smoothers::{PatchKind, SmootherKind};
use unsat_poro::time_integration::{PicardSettings, Scheme};
use unsat_poro::Problem64;

use crate::fields::{generate_fields, HeterogeneityGenSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mesh: MeshConfig,
    pub time: TimeConfig,
    pub physics: PhysicsConfig,
    pub fields: HeterogeneityGenSpec,
    pub schemes: Vec<Scheme>,
    pub picard: PicardSettings<f64>,
    pub solver: SolverStudyConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "silt".into(),
            mesh: MeshConfig::default(),
            time: TimeConfig::default(),
            physics: PhysicsConfig::default(),
            fields: HeterogeneityGenSpec::default(),
            schemes: vec![Scheme::Im, Scheme::SIm, Scheme::ImEx],
            picard: PicardSettings::default(),
            solver: SolverStudyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub n: usize,
    pub length: f64,
    pub n_coarse: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            n: 32,
            length: 10.0,
            n_coarse: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_max: f64,
    pub n_t: Vec<usize>,
    /// Steps of the implicit reference run of the time study.
    pub reference_n_t: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_max: 2.0 * 86_400.0,
            n_t: vec![10, 20, 40, 80],
            reference_n_t: 320,
        }
    }
}

/// Fluid and solid constants without the permeability field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidConfig {
    pub rho_w: f64,
    pub rho_s: f64,
    pub g_scalar: f64,
    pub g_vec: [f64; 2],
    pub phi: f64,
    pub alpha: f64,
    pub c_w: f64,
    pub c_s: f64,
    pub mu_w: f64,
}

impl Default for FluidConfig {
    fn default() -> Self {
        let f = FluidSolidParams::<f64>::with_permeability(Vec::new());
        Self {
            rho_w: f.rho_w,
            rho_s: f.rho_s,
            g_scalar: f.g_scalar,
            g_vec: f.g_vec,
            phi: f.phi,
            alpha: f.alpha,
            c_w: f.c_w,
            c_s: f.c_s,
            mu_w: f.mu_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub van_genuchten: VanGenuchtenParams<f64>,
    pub nu: f64,
    pub zeta_e: f64,
    /// `E_d / E_w`.
    pub r_e: f64,
    pub fluid: FluidConfig,
    pub p0: f64,
    pub p1: f64,
    pub gamma: f64,
    pub elevation_head: bool,
    /// Freeze all coefficients at this pressure (a linear problem).
    pub frozen_p_ref: Option<f64>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            van_genuchten: VanGenuchtenParams::silt(),
            nu: 0.37,
            zeta_e: 1.5,
            r_e: 2.0,
            fluid: FluidConfig::default(),
            p0: 602_700.0,
            p1: 202_860.0,
            gamma: 1e6,
            elevation_head: false,
            frozen_p_ref: None,
        }
    }
}

/// Axes of the solver study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverStudyConfig {
    pub grids: Vec<usize>,
    pub n_t: usize,
    pub smoothers: Vec<SmootherKind>,
    pub sweeps: Vec<usize>,
    pub m_values: Vec<usize>,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub warm_start: bool,
}

impl Default for SolverStudyConfig {
    fn default() -> Self {
        let vanka = |patch, colors| SmootherKind::Vanka { patch, colors };
        Self {
            grids: vec![32, 64],
            n_t: 20,
            smoothers: vec![
                SmootherKind::Jacobi { damping: 1.0 },
                SmootherKind::GaussSeidel,
                vanka(PatchKind::Cell { overlap: 0 }, 4),
                vanka(PatchKind::Cell { overlap: 1 }, 4),
                vanka(PatchKind::Cell { overlap: 2 }, 4),
                vanka(PatchKind::Omega, 4),
            ],
            sweeps: vec![3],
            m_values: vec![1, 8],
            rel_tol: 1e-8,
            max_iters: 500,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Record wall-clock columns; off keeps outputs bit-reproducible.
    pub timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
            timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.mesh.n >= 2, "mesh.n must be at least 2");
        anyhow::ensure!(self.mesh.length > 0.0, "mesh.length must be positive");
        anyhow::ensure!(self.time.t_max > 0.0, "time.t_max must be positive");
        anyhow::ensure!(self.time.n_t.iter().all(|&n| n >= 1), "time.n_t entries must be >= 1");
        anyhow::ensure!(self.time.reference_n_t >= 1, "time.reference_n_t must be >= 1");
        anyhow::ensure!(self.picard.max_iters >= 1, "picard.max_iters must be >= 1");
        self.fields.validate()?;
        let s = &self.solver;
        anyhow::ensure!(s.n_t >= 2, "solver.n_t must be >= 2");
        anyhow::ensure!(s.rel_tol > 0.0 && s.max_iters >= 1, "solver tolerance/cap invalid");
        anyhow::ensure!(s.sweeps.iter().all(|&k| k >= 1), "solver.sweeps entries must be >= 1");
        anyhow::ensure!(s.m_values.iter().all(|&m| m >= 1), "solver.m_values entries must be >= 1");
        for &n in &s.grids {
            anyhow::ensure!(
                n % self.mesh.n_coarse == 0,
                "solver grid {n} is not divisible by mesh.n_coarse = {}",
                self.mesh.n_coarse
            );
        }
        for k in &s.smoothers {
            if let SmootherKind::Vanka { colors, .. } = k {
                anyhow::ensure!([1, 2, 4].contains(colors), "Vanka colors must be 1, 2 or 4");
            }
        }
        Ok(())
    }

    /// The model instance on an `n × n` mesh with fields generated for it.
    pub fn problem(&self, n: usize) -> anyhow::Result<Problem64> {
        let mesh = StructuredTriMesh::new(n, self.mesh.length)?;
        let (k_s, e_d) = generate_fields(&self.fields, &mesh);
        self.problem_with_fields(mesh, k_s, e_d)
    }

    pub fn problem_with_fields(
        &self,
        mesh: StructuredTriMesh<f64>,
        k_s: Vec<f64>,
        e_d: Vec<f64>,
    ) -> anyhow::Result<Problem64> {
        let ph = &self.physics;
        let f = &ph.fluid;
        let fluid = FluidSolidParams {
            rho_w: f.rho_w,
            rho_s: f.rho_s,
            g_scalar: f.g_scalar,
            g_vec: f.g_vec,
            phi: f.phi,
            alpha: f.alpha,
            c_w: f.c_w,
            c_s: f.c_s,
            mu_w: f.mu_w,
            k_s,
        };
        let elasticity = ElasticityParams::from_ratio(ph.nu, ph.zeta_e, e_d, ph.r_e);
        let model = match ph.frozen_p_ref {
            Some(p_ref) => CoefficientModel::Frozen { p_ref },
            None => CoefficientModel::VanGenuchten,
        };
        let material = MaterialModel::new(ph.van_genuchten.clone(), elasticity, fluid, model)?;
        let bc = BoundaryConfig::new(ph.gamma, ph.p1);
        Ok(Problem64::new(mesh, material, bc, ph.p0, ph.elevation_head)?)
    }
}
