//! Curved dislocations in a slip plane, carried as the level sets γ̃ = jb of
//! a level function on a periodic grid, moving with the normal velocity
//!
//! ```text
//! B·V = τ^per + Σ_j F_j,    F_j(X) = ½ ∫ J(X − Z) sign(γ̃(Z) − jb) dZ.
//! ```

mod dynamics;
mod field;
mod io;
mod kernel;

pub use dynamics::*;
pub use field::*;
pub use io::*;
pub use kernel::*;

use crate::error::{Error, Result};

/// Uniform periodic grid with square cells, row-major (`iy * nx + ix`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::param("grid", "need at least 4 nodes per direction"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::param("spacing", "must be > 0"));
        }
        Ok(Grid2D { nx, ny, spacing })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length_x(&self) -> f64 {
        self.nx as f64 * self.spacing
    }

    pub fn length_y(&self) -> f64 {
        self.ny as f64 * self.spacing
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Node coordinates, origin at node (0, 0).
    pub fn point(&self, k: usize) -> (f64, f64) {
        ((k % self.nx) as f64 * self.spacing, (k / self.nx) as f64 * self.spacing)
    }

    /// Shortest periodic displacement represented by node `k`.
    pub fn displacement(&self, k: usize) -> (f64, f64) {
        let wrap = |i: usize, n: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        (
            wrap(k % self.nx, self.nx) * self.spacing,
            wrap(k / self.nx, self.ny) * self.spacing,
        )
    }

    /// Index of the node at displacement −X.
    pub fn mirror(&self, k: usize) -> usize {
        let (ix, iy) = (k % self.nx, k / self.nx);
        self.index((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }
}
