use std::f64::consts::PI;

use super::Grid2D;
use crate::error::{Error, Result};

/// Level function γ̃ on a periodic grid; dislocation j is the curve γ̃ = jb.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl LevelSetField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param("values", "size does not match the grid"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite level value at node {i}")));
        }
        Ok(LevelSetField2D { grid, values, time: 0.0 })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        LevelSetField2D::new(grid, values)
    }

    /// γ̃ = R0 − |X − c|, positive inside: the loop is the level-0 curve and
    /// a positive normal velocity expands it.
    pub fn circle(grid: Grid2D, center: (f64, f64), radius: f64) -> Result<Self> {
        LevelSetField2D::from_fn(grid, |x, y| radius - ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// γ = b⌊γ̃/b⌋ pointwise.
pub fn plastic_strain_2d(field: &LevelSetField2D, b: f64) -> Vec<f64> {
    field.values.iter().map(|v| b * (v / b).floor()).collect()
}

/// The periodic obstacle stress τ^per (applied stress included).
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ObstacleField2D {
    pub fn constant(grid: Grid2D, tau: f64) -> Self {
        ObstacleField2D {
            grid,
            values: vec![tau; grid.len()],
        }
    }

    /// A₂ sin(2πx/λ) sin(2πy/λ) + τ_ext. The grid must hold a whole number
    /// of periods, each a whole number of cells, so periodicity is exact.
    pub fn sinusoidal(grid: Grid2D, amplitude: f64, period: f64, tau_ext: f64) -> Result<Self> {
        let cells = period / grid.spacing;
        let m = cells.round() as usize;
        if m == 0 || (cells - m as f64).abs() > 1e-9 * cells {
            return Err(Error::param("lambda", "obstacle period must be a whole number of grid cells"));
        }
        if grid.nx % m != 0 || grid.ny % m != 0 {
            return Err(Error::param("lambda", "grid must hold a whole number of obstacle periods"));
        }
        let phase: Vec<f64> = (0..m).map(|i| (2.0 * PI * i as f64 / m as f64).sin()).collect();
        let values = (0..grid.len())
            .map(|k| amplitude * phase[(k % grid.nx) % m] * phase[(k / grid.nx) % m] + tau_ext)
            .collect();
        Ok(ObstacleField2D { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_examples() {
        let g = Grid2D::new(4, 4, 1.0).unwrap();
        let mut v = vec![0.0; 16];
        v[0] = 2.7;
        v[1] = -0.3;
        v[2] = 3.0;
        v[3] = -2.0;
        let f = LevelSetField2D::new(g, v).unwrap();
        let q = plastic_strain_2d(&f, 1.0);
        assert_eq!(&q[..4], &[2.0, -1.0, 3.0, -2.0]);
        let half = plastic_strain_2d(&f, 0.5);
        assert_eq!(half[0], 2.5);
    }

    #[test]
    fn obstacles_are_exactly_periodic() {
        let g = Grid2D::new(32, 16, 0.25).unwrap();
        let o = ObstacleField2D::sinusoidal(g, 2.0, 2.0, 0.5).unwrap();
        for iy in 0..16 {
            for ix in 0..32 {
                let v = o.values[g.index(ix, iy)];
                assert_eq!(v, o.values[g.index((ix + 8) % 32, iy)]);
                assert_eq!(v, o.values[g.index(ix, (iy + 8) % 16)]);
            }
        }
        assert!(ObstacleField2D::sinusoidal(g, 1.0, 0.3, 0.0).is_err());
        assert!(ObstacleField2D::sinusoidal(g, 1.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn rejects_mismatched_or_nonfinite_values() {
        let g = Grid2D::new(4, 4, 1.0).unwrap();
        assert!(LevelSetField2D::new(g, vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(LevelSetField2D::new(g, v).is_err());
    }
}
