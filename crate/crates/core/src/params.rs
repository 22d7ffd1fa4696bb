//! Material constants and the micro/macro change of units.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Poisson ratios above this are accepted but logged.
pub const NU_WARN: f64 = 0.45;

/// μ̄ = μ / (2π(1 − ν)), the prefactor of the edge-dislocation interaction.
pub fn mu_bar_of(mu: f64, nu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::param("mu", format!("shear modulus must be > 0, got {mu}")));
    }
    if !(nu < 0.5) || !nu.is_finite() {
        return Err(Error::param(
            "nu",
            format!("Poisson ratio must be < 1/2, got {nu}"),
        ));
    }
    if nu > NU_WARN {
        log::warn!("Poisson ratio {nu} is close to the incompressible limit");
    }
    Ok(mu / (2.0 * PI * (1.0 - nu)))
}

/// Physical constants of the crystal and the drag law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    mu: f64,
    nu: f64,
    b: f64,
    drag: f64,
    mu_bar: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, nu: f64, b: f64, drag: f64) -> Result<Self> {
        let mu_bar = mu_bar_of(mu, nu)?;
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::param("b", format!("Burgers magnitude must be > 0, got {b}")));
        }
        if !(drag > 0.0) || !drag.is_finite() {
            return Err(Error::param("B", format!("drag must be > 0, got {drag}")));
        }
        Ok(MaterialParams {
            mu,
            nu,
            b,
            drag,
            mu_bar,
        })
    }

    /// The dimensionless regime b = B = μ̄ = 1 (ν = 0, μ = 2π).
    pub fn unit() -> Self {
        MaterialParams::new(2.0 * PI, 0.0, 1.0, 1.0).expect("unit parameters are valid")
    }

    /// Dimensionless regime with a prescribed μ̄ (ν = 0).
    pub fn with_mu_bar(mu_bar: f64) -> Result<Self> {
        MaterialParams::new(2.0 * PI * mu_bar, 0.0, 1.0, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    /// Viscous drag coefficient B.
    pub fn drag(&self) -> f64 {
        self.drag
    }
    pub fn mu_bar(&self) -> f64 {
        self.mu_bar
    }
    /// β = 1/(1 − ν), the anisotropy parameter of the 2D kernel.
    pub fn beta(&self) -> f64 {
        1.0 / (1.0 - self.nu)
    }
}

/// (ε, t₀) for the macroscopic rescaling x̄ = x/Λ, t̄ = t/t₀ with
/// ε = b/Λ and t₀ = BΛ/μ̄.
pub fn normalize(b: f64, macro_length: f64, drag: f64, mu_bar: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) {
        return Err(Error::param("b", "must be > 0"));
    }
    if !(b < macro_length) {
        return Err(Error::param(
            "Lambda",
            format!("need b < Lambda for scale separation (b = {b}, Lambda = {macro_length})"),
        ));
    }
    if !(drag > 0.0) || !(mu_bar > 0.0) {
        return Err(Error::param("B/mu_bar", "must be > 0"));
    }
    Ok((b / macro_length, drag * macro_length / mu_bar))
}

/// Length and time scales linking the microscopic and macroscopic descriptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    macro_length: f64,
    obstacle_period: f64,
    lambda_bar: f64,
    epsilon: f64,
    time_scale: f64,
}

impl Scales {
    /// `obstacle_period` is λ; it must be at least one Burgers length.
    pub fn new(params: &MaterialParams, macro_length: f64, obstacle_period: f64) -> Result<Self> {
        let (epsilon, time_scale) =
            normalize(params.b(), macro_length, params.drag(), params.mu_bar())?;
        let lambda_bar = obstacle_period / params.b();
        // The dimensionless protocol uses λ = b, so λ̄ = 1 must be admitted.
        if !(lambda_bar >= 1.0) {
            return Err(Error::param(
                "lambda",
                format!("obstacle period must be >= b, got lambda/b = {lambda_bar}"),
            ));
        }
        Ok(Scales {
            macro_length,
            obstacle_period,
            lambda_bar,
            epsilon,
            time_scale,
        })
    }

    pub fn macro_length(&self) -> f64 {
        self.macro_length
    }
    pub fn obstacle_period(&self) -> f64 {
        self.obstacle_period
    }
    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    /// BΛ/μ̄: one unit of macroscopic time in physical time.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn to_macro_x(&self, x: f64) -> f64 {
        x / self.macro_length
    }
    pub fn to_micro_x(&self, x_bar: f64) -> f64 {
        x_bar * self.macro_length
    }
    pub fn to_macro_t(&self, t: f64) -> f64 {
        t / self.time_scale
    }
    pub fn to_micro_t(&self, t_bar: f64) -> f64 {
        t_bar * self.time_scale
    }
    /// γ^ε = γ/Λ.
    pub fn to_macro_strain(&self, gamma: f64) -> f64 {
        gamma / self.macro_length
    }
}
