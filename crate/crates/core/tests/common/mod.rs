#![allow(dead_code)]

use unsat_poro::constitutive::{CoefficientModel, ElasticityParams, FluidSolidParams, MaterialModel, VanGenuchtenParams};
use unsat_poro::mesh::{BoundaryConfig, StructuredTriMesh};
use unsat_poro::rng::SplitMix64;
use unsat_poro::Problem64;

/// Silt column on an `n × n` mesh of a 10 m square with cellwise random
/// permeability (two decades) and modulus.
pub fn problem(n: usize, gamma: f64, seed: u64) -> Problem64 {
    let mesh = StructuredTriMesh::new(n, 10.0).unwrap();
    let cells = mesh.n_triangles();
    let mut rng = SplitMix64::new(seed);
    let k_s = (0..cells).map(|_| 10f64.powf(rng.uniform(-10.0, -8.0))).collect();
    let e_d = (0..cells).map(|_| 3e6 * rng.uniform(0.5, 1.5)).collect();
    let material = MaterialModel::new(
        VanGenuchtenParams::silt(),
        ElasticityParams::from_ratio(0.37, 1.5, e_d, 2.0),
        FluidSolidParams::with_permeability(k_s),
        CoefficientModel::VanGenuchten,
    )
    .unwrap();
    Problem64::new(mesh, material, BoundaryConfig::new(gamma, 202_860.0), 602_700.0, false).unwrap()
}

pub fn frozen(mut p: Problem64, p_ref: f64) -> Problem64 {
    p.material = p.material.frozen_at(p_ref);
    p
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
