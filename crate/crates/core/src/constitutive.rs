//! Van Genuchten retention and conductivity, water-dependent stiffness, the
//! storage and mobility coefficients `c(x, p)`, `κ(x, p)`, and their per-cell
//! upper bounds over a pressure interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Retention and relative-conductivity parameters. Heads are in cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanGenuchtenParams<T> {
    pub theta_r: T,
    pub theta_s: T,
    /// 1/cm
    pub beta: T,
    pub n_theta: T,
    /// Pore-connectivity exponent.
    pub eta: T,
}

impl<T: Real> VanGenuchtenParams<T> {
    /// Silt: θ_r = 0.03, θ_s = 0.45, β = 0.01 1/cm, n = 1.6, η = 0.5.
    pub fn silt() -> Self {
        Self {
            theta_r: T::lit(0.03),
            theta_s: T::lit(0.45),
            beta: T::lit(0.01),
            n_theta: T::lit(1.6),
            eta: T::lit(0.5),
        }
    }

    pub fn m_theta(&self) -> T {
        T::one() - T::one() / self.n_theta
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.theta_r >= T::zero()
            && self.theta_r < self.theta_s
            && self.theta_s <= T::one()
            && self.beta > T::zero()
            && self.n_theta > T::one()
            && self.eta >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "van Genuchten parameters out of range: {self:?}"
            )))
        }
    }
}

/// Poisson ratio, modulus exponent and per-cell dry/wet Young's moduli (Pa).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityParams<T> {
    pub nu: T,
    pub zeta_e: T,
    pub e_d: Vec<T>,
    pub e_w: Vec<T>,
}

impl<T: Real> ElasticityParams<T> {
    /// Wet modulus from a fixed dry/wet ratio `r_e = E_d / E_w`.
    pub fn from_ratio(nu: T, zeta_e: T, e_d: Vec<T>, r_e: T) -> Self {
        let e_w = e_d.iter().map(|&e| e / r_e).collect();
        Self {
            nu,
            zeta_e,
            e_d,
            e_w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > T::zero() && self.nu < T::lit(0.5)) || !(self.zeta_e > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "elasticity exponents out of range: nu = {}, zeta_E = {}",
                self.nu, self.zeta_e
            )));
        }
        if self.e_d.len() != self.e_w.len() {
            return Err(Error::DimensionMismatch {
                context: "wet modulus field",
                expected: self.e_d.len(),
                got: self.e_w.len(),
            });
        }
        for (cell, (&d, &w)) in self.e_d.iter().zip(&self.e_w).enumerate() {
            if !(d > T::zero() && w > T::zero() && w <= d) {
                return Err(Error::InvalidArgument(format!(
                    "cell {cell}: need 0 < E_w <= E_d, got E_d = {d}, E_w = {w}"
                )));
            }
        }
        Ok(())
    }

    /// `(E, λ, μ)` in `cell` at effective saturation `s_e`.
    pub fn young_and_lame(&self, s_e: T, cell: usize) -> (T, T, T) {
        young_and_lame(s_e, self.e_d[cell], self.e_w[cell], self.nu, self.zeta_e)
    }
}

/// Densities, gravity, porosity, Biot coefficient, compressibilities,
/// viscosity and the per-cell intrinsic permeability (m²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidSolidParams<T> {
    pub rho_w: T,
    pub rho_s: T,
    /// Signed gravity used in the head conversion (m/s²).
    pub g_scalar: T,
    /// Gravity vector of the body force.
    pub g_vec: [T; 2],
    pub phi: T,
    pub alpha: T,
    pub c_w: T,
    pub c_s: T,
    pub mu_w: T,
    pub k_s: Vec<T>,
}

impl<T: Real> FluidSolidParams<T> {
    /// Water/silt defaults with the given permeability field.
    pub fn with_permeability(k_s: Vec<T>) -> Self {
        Self {
            rho_w: T::lit(1000.0),
            rho_s: T::lit(2650.0),
            g_scalar: T::lit(-9.8),
            g_vec: [T::zero(), T::lit(-9.8)],
            phi: T::lit(0.45),
            alpha: T::lit(0.9),
            c_w: T::lit(4.4e-10),
            c_s: T::lit(1e-11),
            mu_w: T::lit(1e-3),
            k_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.phi > T::zero()
            && self.phi <= T::one()
            && self.alpha > T::zero()
            && self.alpha <= T::one()
            && self.rho_w > T::zero()
            && self.rho_s > T::zero()
            && self.mu_w > T::zero()
            && self.c_w >= T::zero()
            && self.c_s >= T::zero()
            && self.g_scalar != T::zero();
        if !ok {
            return Err(Error::InvalidArgument(
                "fluid/solid parameters out of range".into(),
            ));
        }
        if let Some(cell) = self.k_s.iter().position(|&k| !(k >= T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "cell {cell}: negative permeability"
            )));
        }
        Ok(())
    }
}

/// `h_w = p / (ρ_w g)` converted from m to cm.
pub fn pressure_to_head<T: Real>(p: T, fluid: &FluidSolidParams<T>) -> T {
    p / (fluid.rho_w * fluid.g_scalar) * T::lit(100.0)
}

/// Water content and its derivative with respect to head (1/cm).
pub fn water_content<T: Real>(h_w: T, vg: &VanGenuchtenParams<T>) -> (T, T) {
    if h_w >= T::zero() {
        return (vg.theta_s, T::zero());
    }
    let m = vg.m_theta();
    let n = vg.n_theta;
    let x = -vg.beta * h_w;
    let xn = x.powf(n);
    let b = T::one() + xn;
    let range = vg.theta_s - vg.theta_r;
    let theta = vg.theta_r + range * b.powf(-m);
    let dtheta = range * m * n * vg.beta * x.powf(n - T::one()) * b.powf(-m - T::one());
    (theta, dtheta)
}

pub fn effective_saturation<T: Real>(h_w: T, vg: &VanGenuchtenParams<T>) -> T {
    let (theta, _) = water_content(h_w, vg);
    saturation_from_content(theta, vg)
}

fn saturation_from_content<T: Real>(theta: T, vg: &VanGenuchtenParams<T>) -> T {
    let s = (theta - vg.theta_r) / (vg.theta_s - vg.theta_r);
    s.max(T::zero()).min(T::one())
}

/// Mualem–van Genuchten relative conductivity.
pub fn relative_conductivity<T: Real>(s_e: T, vg: &VanGenuchtenParams<T>) -> T {
    if s_e <= T::zero() {
        return T::zero();
    }
    if s_e >= T::one() {
        return T::one();
    }
    let m = vg.m_theta();
    let inner = T::one() - (T::one() - s_e.powf(T::one() / m)).powf(m);
    s_e.powf(vg.eta) * inner * inner
}

/// `E = E_d + (E_w − E_d) S_e^ζ` and the Lamé parameters.
pub fn young_and_lame<T: Real>(s_e: T, e_d: T, e_w: T, nu: T, zeta_e: T) -> (T, T, T) {
    let e = e_d + (e_w - e_d) * s_e.powf(zeta_e);
    let one = T::one();
    let two = T::lit(2.0);
    let lambda = e * nu / ((one + nu) * (one - two * nu));
    let mu = e / (two * (one + nu));
    (e, lambda, mu)
}

/// Every coefficient the discretization needs at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCoefficients<T> {
    /// Storage coefficient `c`.
    pub c: T,
    /// Mobility `κ = k_s k_rw / μ_w`.
    pub kappa: T,
    /// Saturation `S = θ / φ`.
    pub s: T,
    /// `dS/dp` (signed).
    pub s_prime: T,
    pub lambda: T,
    pub mu: T,
    /// Bulk density `φ S ρ_w + (1 − φ) ρ_s`.
    pub rho_b: T,
}

/// How the coefficients depend on pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientModel<T> {
    VanGenuchten,
    /// Coefficients frozen at a reference pressure (a linear problem); the
    /// saturation derivative is zero.
    Frozen { p_ref: T },
}

/// Anything that yields coefficients per cell and pressure.
pub trait CoefficientSource<T: Real>: Sync {
    fn at(&self, cell: usize, p: T) -> PointCoefficients<T>;

    /// `false` when `at` ignores the pressure argument.
    fn depends_on_pressure(&self) -> bool {
        true
    }
}

impl<T: Real> CoefficientSource<T> for PointCoefficients<T> {
    fn at(&self, _cell: usize, _p: T) -> PointCoefficients<T> {
        *self
    }

    fn depends_on_pressure(&self) -> bool {
        false
    }
}

/// Complete material description of a heterogeneous instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel<T> {
    pub van_genuchten: VanGenuchtenParams<T>,
    pub elasticity: ElasticityParams<T>,
    pub fluid: FluidSolidParams<T>,
    pub model: CoefficientModel<T>,
}

impl<T: Real> MaterialModel<T> {
    pub fn new(
        van_genuchten: VanGenuchtenParams<T>,
        elasticity: ElasticityParams<T>,
        fluid: FluidSolidParams<T>,
        model: CoefficientModel<T>,
    ) -> Result<Self> {
        van_genuchten.validate()?;
        elasticity.validate()?;
        fluid.validate()?;
        if fluid.k_s.len() != elasticity.e_d.len() {
            return Err(Error::DimensionMismatch {
                context: "permeability vs modulus field",
                expected: elasticity.e_d.len(),
                got: fluid.k_s.len(),
            });
        }
        Ok(Self {
            van_genuchten,
            elasticity,
            fluid,
            model,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.fluid.k_s.len()
    }

    /// Same material with pressure-independent coefficients.
    pub fn frozen_at(&self, p_ref: T) -> Self {
        Self {
            model: CoefficientModel::Frozen { p_ref },
            ..self.clone()
        }
    }

    /// Saturation `S(p)` and its signed derivative `dS/dp` (1/Pa).
    pub fn saturation(&self, p: T) -> (T, T) {
        let f = &self.fluid;
        let h = pressure_to_head(p, f);
        let (theta, dtheta_dh_cm) = water_content(h, &self.van_genuchten);
        // dθ/dp = dθ/dh_cm · 100 / (ρ_w g)
        let dtheta_dp = dtheta_dh_cm * T::lit(100.0) / (f.rho_w * f.g_scalar);
        (theta / f.phi, dtheta_dp / f.phi)
    }

    /// Coefficients from the constitutive law, ignoring the frozen flag.
    pub fn evaluate(&self, cell: usize, p: T) -> PointCoefficients<T> {
        let f = &self.fluid;
        let vg = &self.van_genuchten;
        let h = pressure_to_head(p, f);
        let (theta, _) = water_content(h, vg);
        let s_e = saturation_from_content(theta, vg);
        let (s, s_prime) = self.saturation(p);
        let k_rw = relative_conductivity(s_e, vg);
        let (_, lambda, mu) = self.elasticity.young_and_lame(s_e, cell);
        let storage_s = f.phi * f.c_w + (f.alpha - f.phi) * f.c_s * s;
        let storage_ds = f.phi + (f.alpha - f.phi) * f.c_s * s * p;
        // the magnitude of S' keeps the storage coefficient non-negative under
        // the signed-gravity head convention
        let c = storage_s * s + storage_ds * s_prime.abs();
        PointCoefficients {
            c,
            kappa: f.k_s[cell] * k_rw / f.mu_w,
            s,
            s_prime,
            lambda,
            mu,
            rho_b: f.phi * s * f.rho_w + (T::one() - f.phi) * f.rho_s,
        }
    }

    /// `(c, κ, S)` at a point.
    pub fn storage_and_mobility(&self, cell: usize, p: T) -> (T, T, T) {
        let q = self.at(cell, p);
        (q.c, q.kappa, q.s)
    }

    pub fn coefficient_bounds(&self, p_min: T, p_max: T, n_samples: usize) -> Result<CoefficientBounds<T>> {
        coefficient_bounds(p_min, p_max, n_samples, self)
    }
}

impl<T: Real> CoefficientSource<T> for MaterialModel<T> {
    fn at(&self, cell: usize, p: T) -> PointCoefficients<T> {
        match self.model {
            CoefficientModel::VanGenuchten => self.evaluate(cell, p),
            CoefficientModel::Frozen { p_ref } => PointCoefficients {
                s_prime: T::zero(),
                ..self.evaluate(cell, p_ref)
            },
        }
    }

    fn depends_on_pressure(&self) -> bool {
        matches!(self.model, CoefficientModel::VanGenuchten)
    }
}

/// Per-cell maxima of the coefficients over `[p_min, p_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds<T> {
    pub c: Vec<T>,
    pub kappa: Vec<T>,
    pub s: Vec<T>,
    pub lambda: Vec<T>,
    pub mu: Vec<T>,
    pub p_min: T,
    pub p_max: T,
}

impl<T: Real> CoefficientBounds<T> {
    pub fn n_cells(&self) -> usize {
        self.c.len()
    }

    /// Bound minus coefficient at a point, per field (`≥ 0` on samples).
    pub fn slack(&self, cell: usize, q: &PointCoefficients<T>) -> [T; 5] {
        [
            self.c[cell] - q.c,
            self.kappa[cell] - q.kappa,
            self.s[cell] - q.s,
            self.lambda[cell] - q.lambda,
            self.mu[cell] - q.mu,
        ]
    }
}

/// Bounds are cellwise constant, so the saturation gradient vanishes and the
/// body force is not part of the fixed operator.
impl<T: Real> CoefficientSource<T> for CoefficientBounds<T> {
    fn at(&self, cell: usize, _p: T) -> PointCoefficients<T> {
        PointCoefficients {
            c: self.c[cell],
            kappa: self.kappa[cell],
            s: self.s[cell],
            s_prime: T::zero(),
            lambda: self.lambda[cell],
            mu: self.mu[cell],
            rho_b: T::zero(),
        }
    }

    fn depends_on_pressure(&self) -> bool {
        false
    }
}

/// Per-cell maxima of `c, κ, S, λ, μ` over `n_samples` uniformly spaced
/// pressures including both endpoints.
pub fn coefficient_bounds<T: Real, S: CoefficientSource<T> + HasCells>(
    p_min: T,
    p_max: T,
    n_samples: usize,
    source: &S,
) -> Result<CoefficientBounds<T>> {
    if !(p_min < p_max) {
        return Err(Error::InvalidArgument(format!(
            "empty pressure interval [{p_min}, {p_max}]"
        )));
    }
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "at least two pressure samples are required".into(),
        ));
    }
    let n = source.n_cells();
    let neg = T::neg_infinity();
    let mut b = CoefficientBounds {
        c: vec![neg; n],
        kappa: vec![neg; n],
        s: vec![neg; n],
        lambda: vec![neg; n],
        mu: vec![neg; n],
        p_min,
        p_max,
    };
    let step = (p_max - p_min) / T::from_count(n_samples - 1);
    for k in 0..n_samples {
        let p = if k + 1 == n_samples {
            p_max
        } else {
            p_min + step * T::from_count(k)
        };
        for cell in 0..n {
            let q = source.at(cell, p);
            b.c[cell] = b.c[cell].max(q.c);
            b.kappa[cell] = b.kappa[cell].max(q.kappa);
            b.s[cell] = b.s[cell].max(q.s);
            b.lambda[cell] = b.lambda[cell].max(q.lambda);
            b.mu[cell] = b.mu[cell].max(q.mu);
        }
    }
    Ok(b)
}

/// Number of cells a coefficient source is defined on.
pub trait HasCells {
    fn n_cells(&self) -> usize;
}

impl<T: Real> HasCells for MaterialModel<T> {
    fn n_cells(&self) -> usize {
        self.fluid.k_s.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn silt_model(n_cells: usize) -> MaterialModel<f64> {
        MaterialModel::new(
            VanGenuchtenParams::silt(),
            ElasticityParams::from_ratio(0.37, 1.5, vec![3e6; n_cells], 2.0),
            FluidSolidParams::with_permeability(vec![1e-12; n_cells]),
            CoefficientModel::VanGenuchten,
        )
        .unwrap()
    }

    /// θ from the closed form written with exp/ln.
    fn theta_oracle(h: f64) -> f64 {
        let (tr, ts, beta, n) = (0.03f64, 0.45f64, 0.01f64, 1.6f64);
        let m = 1.0 - 1.0 / n;
        let x = (n * (beta * h.abs()).ln()).exp();
        tr + (ts - tr) * (-m * (1.0 + x).ln()).exp()
    }

    #[test]
    fn head_conversion() {
        let f = FluidSolidParams::<f64>::with_permeability(vec![]);
        assert_eq!(pressure_to_head(0.0, &f), 0.0);
        assert_relative_eq!(pressure_to_head(9800.0, &f), -100.0, max_relative = 1e-14);
        assert_relative_eq!(pressure_to_head(-9800.0, &f), 100.0, max_relative = 1e-14);
    }

    #[test]
    fn water_content_silt_values() {
        let vg = VanGenuchtenParams::<f64>::silt();
        let (theta, _) = water_content(-100.0, &vg);
        assert_relative_eq!(theta, theta_oracle(-100.0), max_relative = 1e-13);
        assert!((theta - 0.3539).abs() < 5e-5);
        assert_relative_eq!(water_content(-1e-12, &vg).0, 0.45, max_relative = 1e-9);
        assert!((water_content(-1e12, &vg).0 - 0.03) < 1e-6);
        assert_eq!(water_content(5.0, &vg), (0.45, 0.0));
    }

    #[test]
    fn saturation_conductivity_modulus_chain() {
        let vg = VanGenuchtenParams::<f64>::silt();
        let se = effective_saturation(-100.0, &vg);
        assert_relative_eq!(se, (theta_oracle(-100.0) - 0.03) / 0.42, max_relative = 1e-13);
        assert!((se - 0.7711).abs() < 5e-5);
        // S_e^{1/m} = 1/2 exactly at this head, so k_rw = sqrt(S_e)(1 − 2^{−m})²
        let m = 0.375f64;
        let oracle = se.sqrt() * (1.0 - 0.5f64.powf(m)).powi(2);
        let k = relative_conductivity(se, &vg);
        assert_relative_eq!(k, oracle, max_relative = 1e-12);
        assert!((k - 0.0460).abs() < 5e-5);
        let (e, _, _) = young_and_lame(se, 3e6, 1.5e6, 0.37, 1.5);
        assert!((e - 1.984e6).abs() < 1e3);
        assert_eq!(relative_conductivity(1.0, &vg), 1.0);
        assert_eq!(relative_conductivity(0.0, &vg), 0.0);
        assert_eq!(effective_saturation(10.0, &vg), 1.0);
    }

    #[test]
    fn lame_endpoints() {
        let (e0, l0, m0) = young_and_lame(0.0, 3e6, 1.5e6, 0.37, 1.5);
        let (e1, _, _) = young_and_lame(1.0, 3e6, 1.5e6, 0.37, 1.5);
        assert_eq!(e0, 3e6);
        assert_eq!(e1, 1.5e6);
        assert_relative_eq!(l0, 3e6 * 0.37 / (1.37 * 0.26), max_relative = 1e-14);
        assert_relative_eq!(m0, 3e6 / 2.74, max_relative = 1e-14);
    }

    #[test]
    fn saturated_storage_and_mobility() {
        let model = silt_model(1);
        // negative pressures map to positive heads: saturated branch
        let q = model.at(0, -1000.0);
        let f = &model.fluid;
        assert_eq!(q.s, 1.0);
        assert_eq!(q.s_prime, 0.0);
        assert_relative_eq!(q.c, f.phi * f.c_w + (f.alpha - f.phi) * f.c_s, max_relative = 1e-14);
        assert_relative_eq!(q.kappa, 1e-12 / 1e-3, max_relative = 1e-14);
    }

    #[test]
    fn saturation_derivative_matches_central_difference() {
        let model = silt_model(1);
        for &p in &[9800.0, 50_000.0, 202_860.0, 400_000.0, 602_700.0] {
            let (_, ds) = model.saturation(p);
            let fd = (model.saturation(p + 1.0).0 - model.saturation(p - 1.0).0) / 2.0;
            assert!(((ds - fd) / ds).abs() < 1e-6, "p = {p}: {ds} vs {fd}");
        }
    }

    #[test]
    fn zero_permeability_gives_zero_mobility() {
        let mut model = silt_model(2);
        model.fluid.k_s[1] = 0.0;
        assert_eq!(model.at(1, 3e5).kappa, 0.0);
    }

    #[test]
    fn frozen_model_ignores_pressure() {
        let model = silt_model(1).frozen_at(4e5);
        assert_eq!(model.at(0, 2e5), model.at(0, 6e5));
        assert!(!model.depends_on_pressure());
    }

    #[test]
    fn bounds_of_constant_source_are_the_constants() {
        struct Const(PointCoefficients<f64>);
        impl CoefficientSource<f64> for Const {
            fn at(&self, _: usize, _: f64) -> PointCoefficients<f64> {
                self.0
            }
        }
        impl HasCells for Const {
            fn n_cells(&self) -> usize {
                3
            }
        }
        let q = PointCoefficients {
            c: 1.0,
            kappa: 2.0,
            s: 0.5,
            s_prime: 0.0,
            lambda: 3.0,
            mu: 4.0,
            rho_b: 0.0,
        };
        let b = coefficient_bounds(0.0, 1.0, 8, &Const(q)).unwrap();
        assert_eq!(b.c, vec![1.0; 3]);
        assert_eq!(b.mu, vec![4.0; 3]);
    }

    #[test]
    fn kappa_bound_sits_at_the_wet_endpoint() {
        let model = silt_model(1);
        let (p_min, p_max) = (202_860.0, 602_700.0);
        let b = model.coefficient_bounds(p_min, p_max, 64).unwrap();
        let dense_max = (0..10_000)
            .map(|k| model.at(0, p_min + (p_max - p_min) * k as f64 / 9_999.0).kappa)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((b.kappa[0] - dense_max).abs() <= 5e-3 * dense_max);
        assert_relative_eq!(b.kappa[0], model.at(0, p_min).kappa, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_interval() {
        let model = silt_model(1);
        assert!(model.coefficient_bounds(1.0, 1.0, 4).is_err());
        assert!(model.coefficient_bounds(0.0, 1.0, 1).is_err());
    }
}
