//! Seeded heterogeneity fields.
//!
//! A field is a sum of random cosine modes `cos(k·x + φ)` evaluated at cell
//! centroids and rescaled to `[−1, 1]`. Direction and phase are uniform in
//! `[0, 2π)`, `|k| = 2π/ℓ · U(0.5, 1.5)`. Draws come from SplitMix64 stream 1
//! (permeability) and stream 2 (modulus) of the seed, in the order angle,
//! magnitude, phase per mode. Then
//!
//! ```text
//! log10 k_s = log10 k_s0 + contrast/2 · g₁
//! E_d       = E_d0 · (1 + e_variation · g₂)
//! ```
//!
//! so `max k_s / min k_s = 10^contrast` exactly.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use unsat_poro::mesh::StructuredTriMesh;
use unsat_poro::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeterogeneityGenSpec {
    pub seed: u64,
    /// Orders of magnitude spanned by `k_s`.
    pub contrast: f64,
    /// Geometric-mean permeability (m²).
    pub k_s0: f64,
    /// Mean dry modulus (Pa).
    pub e_d0: f64,
    /// Relative amplitude of `E_d`, in `[0, 1)`.
    pub e_variation: f64,
    pub modes: usize,
    pub correlation_length: f64,
}

impl Default for HeterogeneityGenSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            contrast: 2.0,
            k_s0: 1e-10,
            e_d0: 3e6,
            e_variation: 0.5,
            modes: 16,
            correlation_length: 2.5,
        }
    }
}

impl HeterogeneityGenSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.contrast >= 0.0, "fields.contrast must be >= 0");
        anyhow::ensure!(self.k_s0 > 0.0 && self.e_d0 > 0.0, "fields base values must be positive");
        anyhow::ensure!(
            (0.0..1.0).contains(&self.e_variation),
            "fields.e_variation must lie in [0, 1)"
        );
        anyhow::ensure!(self.correlation_length > 0.0, "fields.correlation_length must be positive");
        Ok(())
    }
}

/// Cosine-mode field at the cell centroids, rescaled to `[−1, 1]`; all zeros
/// when the raw field is constant.
pub fn cosine_field(points: &[[f64; 2]], rng: &mut SplitMix64, modes: usize, ell: f64) -> Vec<f64> {
    let waves: Vec<([f64; 2], f64)> = (0..modes)
        .map(|_| {
            let angle = rng.uniform(0.0, TAU);
            let mag = TAU / ell * rng.uniform(0.5, 1.5);
            let phase = rng.uniform(0.0, TAU);
            ([mag * angle.cos(), mag * angle.sin()], phase)
        })
        .collect();
    let raw: Vec<f64> = points
        .iter()
        .map(|x| waves.iter().map(|(k, ph)| (k[0] * x[0] + k[1] * x[1] + ph).cos()).sum())
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|g| 2.0 * (g - lo) / (hi - lo) - 1.0).collect()
}

pub fn cell_centroids(mesh: &StructuredTriMesh<f64>) -> Vec<[f64; 2]> {
    let v = mesh.vertices();
    mesh.triangles()
        .iter()
        .map(|t| {
            let c = |d: usize| (v[t[0]][d] + v[t[1]][d] + v[t[2]][d]) / 3.0;
            [c(0), c(1)]
        })
        .collect()
}

/// Per-cell `(k_s, E_d)`.
pub fn generate_fields(spec: &HeterogeneityGenSpec, mesh: &StructuredTriMesh<f64>) -> (Vec<f64>, Vec<f64>) {
    let pts = cell_centroids(mesh);
    let g1 = cosine_field(&pts, &mut SplitMix64::stream(spec.seed, 1), spec.modes, spec.correlation_length);
    let g2 = cosine_field(&pts, &mut SplitMix64::stream(spec.seed, 2), spec.modes, spec.correlation_length);
    let log_k0 = spec.k_s0.log10();
    let k_s = g1
        .iter()
        .map(|g| 10f64.powf(log_k0 + 0.5 * spec.contrast * g))
        .collect();
    let e_d = g2.iter().map(|g| spec.e_d0 * (1.0 + spec.e_variation * g)).collect();
    (k_s, e_d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> StructuredTriMesh<f64> {
        StructuredTriMesh::new(16, 10.0).unwrap()
    }

    #[test]
    fn zero_contrast_is_constant() {
        let spec = HeterogeneityGenSpec {
            contrast: 0.0,
            e_variation: 0.0,
            ..Default::default()
        };
        let (k, e) = generate_fields(&spec, &mesh());
        assert!(k.iter().all(|&x| (x - spec.k_s0).abs() <= 1e-15 * spec.k_s0));
        assert!(e.iter().all(|&x| x == spec.e_d0));
    }

    #[test]
    fn same_seed_same_fields() {
        let spec = HeterogeneityGenSpec::default();
        assert_eq!(generate_fields(&spec, &mesh()), generate_fields(&spec, &mesh()));
        let other = HeterogeneityGenSpec { seed: 7, ..spec.clone() };
        assert_ne!(generate_fields(&spec, &mesh()).0, generate_fields(&other, &mesh()).0);
    }

    #[test]
    fn contrast_four_ratio_band() {
        for seed in 0..10 {
            let spec = HeterogeneityGenSpec {
                seed,
                contrast: 4.0,
                ..Default::default()
            };
            let (k, _) = generate_fields(&spec, &mesh());
            let lo = k.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = k.iter().copied().fold(0.0, f64::max);
            let ratio = hi / lo;
            assert!((1e3 * 0.5..=1e5 * 2.0).contains(&ratio), "seed {seed}: {ratio}");
        }
    }
}
