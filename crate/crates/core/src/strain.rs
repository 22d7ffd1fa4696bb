//! Plastic-strain fields and the dislocation density they carry.
//!
//! Sign convention: γ = −b Σ H(x − xᵢ) is non-increasing in x and the density
//! ρ = −∂γ/∂x is nonnegative. An admissible field is therefore non-increasing.

use crate::error::{Error, Result};

/// Relative slack allowed before a negative discrete density is reported.
pub const DENSITY_TOL: f64 = 1e-9;

/// γ(x) = −b · #{i : xᵢ < x} (H(0) = 0, so the jump sits just after xᵢ).
pub fn plastic_strain_1d(positions: &[f64], b: f64, x: f64) -> f64 {
    -b * positions.iter().filter(|&&xi| xi < x).count() as f64
}

/// Samples of a strain field on a uniform grid.
///
/// Periodic fields have nodes `x_min + k·dx`, `dx = (x_max − x_min)/n`, with
/// `x_max` excluded. They may carry a `winding`, the increment
/// γ(x + L) − γ(x) over one period: a field with a nonzero mean density is
/// not itself periodic, only its density is. Non-periodic fields include both
/// end points.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField1D {
    pub values: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub periodic: bool,
    pub winding: f64,
}

impl StrainField1D {
    pub fn new(values: Vec<f64>, x_min: f64, x_max: f64, periodic: bool, winding: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::param("values", "a strain field needs at least 3 nodes"));
        }
        if !(x_max > x_min) {
            return Err(Error::param("x_max", "domain must have positive length"));
        }
        if values.iter().any(|v| !v.is_finite()) || !winding.is_finite() {
            return Err(Error::param("values", "non-finite strain sample"));
        }
        Ok(StrainField1D {
            values,
            x_min,
            x_max,
            periodic,
            winding: if periodic { winding } else { 0.0 },
        })
    }

    /// Sample `f` on a periodic grid of `n` nodes over `[x_min, x_max)`.
    pub fn periodic_from_fn(
        n: usize,
        x_min: f64,
        x_max: f64,
        winding: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let dx = (x_max - x_min) / n as f64;
        let values = (0..n).map(|k| f(x_min + k as f64 * dx)).collect();
        StrainField1D::new(values, x_min, x_max, true, winding)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        if self.periodic {
            self.length() / self.len() as f64
        } else {
            self.length() / (self.len() - 1) as f64
        }
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Value at node index `k`, extended through the winding for indices
    /// outside `0..n` (periodic fields only).
    #[inline]
    pub fn extended(&self, k: isize) -> f64 {
        let n = self.len() as isize;
        let wraps = k.div_euclid(n);
        self.values[k.rem_euclid(n) as usize] + wraps as f64 * self.winding
    }

    /// ψ = γ − winding·(x − x_min)/L, the genuinely periodic part.
    pub fn periodic_part(&self) -> Vec<f64> {
        let slope = self.winding / self.length();
        let dx = self.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v - slope * k as f64 * dx)
            .collect()
    }

    /// Mean of ρ = −∂γ/∂x over a periodic cell, i.e. −winding/L.
    pub fn mean_density(&self) -> f64 {
        -self.winding / self.length()
    }

    /// Centered-difference density without admissibility checks.
    pub fn centered_density(&self) -> Vec<f64> {
        let n = self.len();
        let dx = self.dx();
        let v = &self.values;
        let mut rho = vec![0.0; n];
        if self.periodic {
            for (k, r) in rho.iter_mut().enumerate() {
                let k = k as isize;
                *r = -(self.extended(k + 1) - self.extended(k - 1)) / (2.0 * dx);
            }
        } else {
            rho[0] = -(-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
            rho[n - 1] = -(3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
            for k in 1..n - 1 {
                rho[k] = -(v[k + 1] - v[k - 1]) / (2.0 * dx);
            }
        }
        rho
    }

    /// Largest |second difference| / dx², the discrete |γ''|.
    pub fn max_second_difference(&self) -> f64 {
        let n = self.len() as isize;
        let dx2 = self.dx() * self.dx();
        let range = if self.periodic { 0..n } else { 1..n - 1 };
        range
            .map(|k| {
                let (a, b, c) = if self.periodic {
                    (self.extended(k - 1), self.extended(k), self.extended(k + 1))
                } else {
                    let k = k as usize;
                    (self.values[k - 1], self.values[k], self.values[k + 1])
                };
                ((a - 2.0 * b + c) / dx2).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Check the field is non-increasing node to node (including the wrap).
    pub fn check_monotone(&self) -> Result<()> {
        let n = self.len() as isize;
        let last = if self.periodic { n } else { n - 1 };
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for k in 0..last {
            let (a, b) = if self.periodic {
                (self.extended(k), self.extended(k + 1))
            } else {
                (self.values[k as usize], self.values[k as usize + 1])
            };
            if b > a + 1e-12 * scale {
                return Err(Error::NonMonotone { node: k as usize });
            }
        }
        Ok(())
    }
}

/// ρ⁰ = −∂γ⁰/∂x̄ by centered differences (periodic wrap, or second-order
/// one-sided stencils at the ends of a bounded field). Negative values beyond
/// round-off mark the field as inadmissible.
pub fn density_from_strain(field: &StrainField1D) -> Result<Vec<f64>> {
    let rho = field.centered_density();
    let scale = rho.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(1.0);
    if let Some((node, &density)) = rho
        .iter()
        .enumerate()
        .find(|(_, &r)| r < -DENSITY_TOL * scale)
    {
        return Err(Error::NegativeDensity { node, density });
    }
    Ok(rho)
}
