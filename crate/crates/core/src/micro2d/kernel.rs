use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::Grid2D;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fft2::Fft2;
use crate::params::MaterialParams;

/// Minimum grid cells per cutoff radius.
pub const MIN_CELLS_PER_CUTOFF: f64 = 4.0;
/// Image shells summed explicitly when periodizing; the rest is integrated.
pub const IMAGE_SHELLS: i64 = 3;

fn beta_of(nu: f64) -> Result<f64> {
    if !(nu < 1.0) {
        return Err(Error::param("nu", format!("Poisson ratio {nu} out of range")));
    }
    let beta = 1.0 / (1.0 - nu);
    if beta > 2.0 {
        return Err(Error::param(
            "nu",
            format!("beta = {beta} > 2 makes the kernel negative along e_y"),
        ));
    }
    if beta < 0.5 {
        return Err(Error::param(
            "nu",
            format!("beta = {beta} < 1/2 makes the kernel negative along e_x"),
        ));
    }
    Ok(beta)
}

#[inline]
fn g_unit(cx: f64, cy: f64, prefactor: f64, beta: f64) -> f64 {
    prefactor * (cx * cx * (2.0 * beta - 1.0) + cy * cy * (2.0 - beta))
}

/// Angular amplitude g(X/|X|) = (μb/4π)(x²(2β − 1) + y²(2 − β)), β = 1/(1 − ν).
pub fn kernel_g(direction: (f64, f64), mu: f64, b: f64, nu: f64) -> Result<f64> {
    let (x, y) = direction;
    let norm = (x * x + y * y).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::param("direction", format!("not a unit vector (|d| = {norm})")));
    }
    let beta = beta_of(nu)?;
    Ok(g_unit(x, y, mu * b / (4.0 * PI), beta))
}

/// The interaction kernel J = g(θ)·p(r) sampled and periodized on a grid.
///
/// p(r) = r⁻³ beyond the cutoff R and (5/2 − 3r²/(2R²))/R³ inside, which
/// matches value and slope at R. At the origin g is replaced by its angular
/// mean so J stays single-valued.
#[derive(Debug, Clone)]
pub struct Kernel2D {
    mu: f64,
    b: f64,
    nu: f64,
    beta: f64,
    cutoff: f64,
    grid: Grid2D,
    values: Vec<f64>,
    far_values: Vec<f64>,
    j_hat: Vec<Complex64>,
    far_hat: Vec<Complex64>,
    total: f64,
    fft: Fft2,
}

impl Kernel2D {
    fn prefactor(&self) -> f64 {
        self.mu * self.b / (4.0 * PI)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub(crate) fn fft(&self) -> &Fft2 {
        &self.fft
    }
    pub(crate) fn j_hat(&self) -> &[Complex64] {
        &self.j_hat
    }
    pub(crate) fn far_hat(&self) -> &[Complex64] {
        &self.far_hat
    }

    /// μ̄ = μβ/(2π), the 1D prefactor this kernel reduces to.
    pub fn mu_bar(&self) -> f64 {
        self.mu * self.beta / (2.0 * PI)
    }

    /// ∫ J over the plane (the sum of the periodized samples times h²).
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Periodized J at each grid displacement.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Periodized J_∞ = g/r³ with the origin left out.
    pub fn far_values(&self) -> &[f64] {
        &self.far_values
    }

    /// Free-space J at displacement (x, y).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        let big_r = self.cutoff;
        if r == 0.0 {
            let g_mean = self.prefactor() * (self.beta + 1.0) / 2.0;
            return g_mean * 2.5 / big_r.powi(3);
        }
        let g = g_unit(x / r, y / r, self.prefactor(), self.beta);
        if r >= big_r {
            g / (r * r * r)
        } else {
            g * (2.5 - 1.5 * r * r / (big_r * big_r)) / big_r.powi(3)
        }
    }

    /// Free-space J_∞ = g/r³ (infinite at the origin).
    pub fn eval_far(&self, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        g_unit(x / r, y / r, self.prefactor(), self.beta) / (r * r * r)
    }

    /// (1/|cell|)∫ J_∞ over the plane outside the rectangle
    /// [−a, a] × [−c, c]: Σ images beyond it, spread uniformly.
    fn far_tail(&self, a: f64, c: f64) -> f64 {
        let m = 8192;
        let dth = 2.0 * PI / m as f64;
        let mut s = 0.0;
        for k in 0..m {
            let th = (k as f64 + 0.5) * dth;
            let (sn, cs) = th.sin_cos();
            let rb = (a / cs.abs()).min(c / sn.abs());
            s += g_unit(cs, sn, self.prefactor(), self.beta) / rb;
        }
        s * dth / (self.grid.length_x() * self.grid.length_y())
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.fft = Fft2::new(self.grid.nx, self.grid.ny, exec);
        self
    }
}

/// Sample and periodize J on `grid` for cutoff R = r_bar·b.
pub fn build_kernel(params: &MaterialParams, r_bar: f64, grid: Grid2D, exec: Execution) -> Result<Kernel2D> {
    let beta = beta_of(params.nu())?;
    if !(r_bar > 1.0) {
        return Err(Error::param("r_bar", format!("cutoff must exceed one Burgers length, got {r_bar}")));
    }
    let cutoff = r_bar * params.b();
    if cutoff / grid.spacing < MIN_CELLS_PER_CUTOFF {
        return Err(Error::param(
            "grid",
            format!(
                "spacing {} resolves the cutoff {cutoff} with fewer than {MIN_CELLS_PER_CUTOFF} cells",
                grid.spacing
            ),
        ));
    }
    if grid.length_x() <= 2.0 * cutoff || grid.length_y() <= 2.0 * cutoff {
        return Err(Error::param("grid", "periodic cell must be wider than twice the cutoff"));
    }
    let mut k = Kernel2D {
        mu: params.mu(),
        b: params.b(),
        nu: params.nu(),
        beta,
        cutoff,
        grid,
        values: Vec::new(),
        far_values: Vec::new(),
        j_hat: Vec::new(),
        far_hat: Vec::new(),
        total: 0.0,
        fft: Fft2::new(grid.nx, grid.ny, exec),
    };
    let (lx, ly) = (grid.length_x(), grid.length_y());
    let reach = IMAGE_SHELLS as f64 + 0.5;
    let tail = k.far_tail(reach * lx, reach * ly);
    let kr = &k;
    let image_sum = |idx: usize, far: bool| {
        let (dx, dy) = grid.displacement(idx);
        let mut s = tail;
        for m in -IMAGE_SHELLS..=IMAGE_SHELLS {
            for n in -IMAGE_SHELLS..=IMAGE_SHELLS {
                let (x, y) = (dx + m as f64 * lx, dy + n as f64 * ly);
                s += if !far {
                    kr.eval(x, y)
                } else if idx == 0 && m == 0 && n == 0 {
                    0.0
                } else {
                    kr.eval_far(x, y)
                };
            }
        }
        s
    };
    let mut raw = vec![0.0; grid.len()];
    exec.fill(&mut raw, |i| image_sum(i, false));
    let mut raw_far = vec![0.0; grid.len()];
    exec.fill(&mut raw_far, |i| image_sum(i, true));
    // exact evenness on the grid
    let sym = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|i| 0.5 * (v[i] + v[grid.mirror(i)])).collect() };
    k.values = sym(&raw);
    k.far_values = sym(&raw_far);
    if let Some(i) = k.values.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::param("kernel", format!("negative sample at node {i}")));
    }
    let area = grid.cell_area();
    k.total = k.values.iter().sum::<f64>() * area;
    let scaled = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * area).collect() };
    k.j_hat = k.fft.forward_real(&scaled(&k.values));
    k.far_hat = k.fft.forward_real(&scaled(&k.far_values));
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_examples() {
        let q = 1.0 / (4.0 * PI);
        assert!((kernel_g((1.0, 0.0), 1.0, 1.0, 0.0).unwrap() - q).abs() < 1e-15);
        assert!((kernel_g((0.0, 1.0), 1.0, 1.0, 0.0).unwrap() - q).abs() < 1e-15);
        assert!((kernel_g((0.0, 1.0), 1.0, 1.0, 1.0 / 3.0).unwrap() - q * 0.5).abs() < 1e-15);
        assert!(kernel_g((1.0, 1.0), 1.0, 1.0, 0.0).is_err());
        assert!(kernel_g((0.0, 1.0), 1.0, 1.0, 0.6).is_err());
    }

    #[test]
    fn g_is_nonnegative_on_the_admissible_range() {
        for &nu in &[-1.0, -0.5, 0.0, 0.25, 0.49, 0.5] {
            for k in 0..360 {
                let th = k as f64 * PI / 180.0;
                assert!(kernel_g((th.cos(), th.sin()), 1.0, 1.0, nu).unwrap() >= 0.0);
            }
        }
    }

    fn small() -> Kernel2D {
        let grid = Grid2D::new(32, 24, 0.5).unwrap();
        build_kernel(&MaterialParams::new(1.0, 0.25, 1.0, 1.0).unwrap(), 2.0, grid, Execution::Sequential).unwrap()
    }

    #[test]
    fn profile_is_c1_at_the_cutoff() {
        let k = small();
        let r = k.cutoff();
        for &th in &[0.0, 0.4, 1.3, 2.0] {
            let (c, s) = (f64::cos(th), f64::sin(th));
            let inside = k.eval((r - 1e-7) * c, (r - 1e-7) * s);
            let outside = k.eval((r + 1e-7) * c, (r + 1e-7) * s);
            assert!((inside - outside).abs() < 1e-6 * outside);
            let slope_in = (k.eval(r * c, r * s) - k.eval((r - 1e-4) * c, (r - 1e-4) * s)) / 1e-4;
            let slope_out = (k.eval((r + 1e-4) * c, (r + 1e-4) * s) - k.eval(r * c, r * s)) / 1e-4;
            assert!((slope_in - slope_out).abs() < 1e-3 * slope_out.abs());
        }
        let g = kernel_g((1.0, 0.0), 1.0, 1.0, 0.25).unwrap();
        assert!((k.eval(2.0 * r, 0.0) - g / (2.0 * r).powi(3)).abs() < 1e-15);
    }

    #[test]
    fn sampled_kernel_is_even_and_nonnegative() {
        let k = small();
        let g = k.grid();
        for i in 0..g.len() {
            assert_eq!(k.values()[i], k.values()[g.mirror(i)]);
            assert_eq!(k.far_values()[i], k.far_values()[g.mirror(i)]);
            assert!(k.values()[i] >= 0.0);
        }
        // the singular point is dropped, its periodic images are not
        assert!(k.far_values()[0] > 0.0 && k.far_values()[0] < k.values()[0]);
    }

    #[test]
    fn rejects_coarse_grids_and_small_cutoffs() {
        let p = MaterialParams::unit();
        let coarse = Grid2D::new(32, 32, 1.0).unwrap();
        assert!(build_kernel(&p, 2.0, coarse, Execution::Sequential).is_err());
        let fine = Grid2D::new(64, 64, 0.25).unwrap();
        assert!(build_kernel(&p, 1.0, fine, Execution::Sequential).is_err());
        assert!(build_kernel(&p, 2.0, fine, Execution::Sequential).is_ok());
    }
}
