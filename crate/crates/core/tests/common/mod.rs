#![allow(dead_code)]

use std::f64::consts::PI;

use dhomog_core::exec::Execution;
use dhomog_core::micro2d::{build_kernel, Grid2D, Kernel2D};
use dhomog_core::params::MaterialParams;
use dhomog_core::strain::StrainField1D;

/// PV∫₀^{2π} u(x′)·½cot((x − x′)/2) dx′ by the midpoint rule on a grid
/// straddling x symmetrically.
pub fn pv_quadrature(u: &dyn Fn(f64) -> f64, x: f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|j| {
            let d = (j as f64 + 0.5) * h;
            u(x + d) * 0.5 / (-d / 2.0).tan()
        })
        .sum::<f64>()
        * h
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// μ = 1, ν = 0, b = 1, cutoff 2b on an n×n grid.
pub fn iso_kernel(n: usize, h: f64) -> Kernel2D {
    let grid = Grid2D::new(n, n, h).unwrap();
    let params = MaterialParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
    build_kernel(&params, 2.0, grid, Execution::Parallel).unwrap()
}

pub fn bilinear(field: &[f64], g: &Grid2D, x: f64, y: f64) -> f64 {
    let (u, v) = (x / g.spacing, y / g.spacing);
    let (i, j) = (u.floor(), v.floor());
    let (s, t) = (u - i, v - j);
    let at = |a: f64, b: f64| field[g.index((a as usize) % g.nx, (b as usize) % g.ny)];
    (1.0 - s) * (1.0 - t) * at(i, j) + s * (1.0 - t) * at(i + 1.0, j) + (1.0 - s) * t * at(i, j + 1.0) + s * t * at(i + 1.0, j + 1.0)
}

/// Two strain fields of unit mean density with the second above the first.
pub fn ordered_pair(n: usize) -> (StrainField1D, StrainField1D) {
    let g1 = |x: f64| -x + 0.3 * (2.0 * PI * x).sin() / (2.0 * PI);
    let g2 = |x: f64| g1(x) + 0.05 + 0.02 * (4.0 * PI * x).cos();
    (
        StrainField1D::periodic_from_fn(n, 0.0, 1.0, -1.0, g1).unwrap(),
        StrainField1D::periodic_from_fn(n, 0.0, 1.0, -1.0, g2).unwrap(),
    )
}
