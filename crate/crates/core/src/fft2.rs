//! Two-dimensional FFTs and periodic convolution on row-major grids
//! (index `iy * nx + ix`).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec::Execution;

#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    exec: Execution,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{}, {:?})", self.nx, self.ny, self.exec)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize, exec: Execution) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
            exec,
        }
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    fn transform(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(data.len(), nx * ny);
        self.exec.for_each_chunk(data, nx, |_, r| row.process(r));
        let mut t = transpose(data, nx, ny);
        self.exec.for_each_chunk(&mut t, ny, |_, c| col.process(c));
        data.copy_from_slice(&transpose(&t, ny, nx));
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the 1/(nx·ny) factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Periodic convolution Σ_z k(x − z) u(z), given the spectrum of k.
    pub fn convolve(&self, kernel_hat: &[Complex64], u: &[f64]) -> Vec<f64> {
        let mut buf = self.forward_real(u);
        buf.iter_mut().zip(kernel_hat).for_each(|(b, k)| *b *= k);
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

fn transpose(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            out[ix * ny + iy] = data[iy * nx + ix];
        }
    }
    out
}
