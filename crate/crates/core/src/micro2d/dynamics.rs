use super::{Kernel2D, LevelSetField2D, ObstacleField2D};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Levels that can contribute non-constant forces: those crossed by γ̃, with
/// one level of margin on each side.
pub fn level_range(field: &LevelSetField2D, b: f64) -> (i64, i64) {
    (
        (field.min() / b).floor() as i64 - 1,
        (field.max() / b).ceil() as i64 + 1,
    )
}

fn check_grid(field: &LevelSetField2D, kernel: &Kernel2D) -> Result<()> {
    if field.grid != *kernel.grid() {
        return Err(Error::param("field", "grid differs from the kernel grid"));
    }
    Ok(())
}

/// F_j = ½ Σ_Z J(X − Z) sign(γ̃(Z) − jb) h².
pub fn force_of_curve(field: &LevelSetField2D, j: i64, kernel: &Kernel2D) -> Result<Vec<f64>> {
    check_grid(field, kernel)?;
    let level = j as f64 * kernel.b();
    let sign: Vec<f64> = field.values.iter().map(|v| sign(v - level)).collect();
    let mut f = kernel.fft().convolve(kernel.j_hat(), &sign);
    f.iter_mut().for_each(|v| *v *= 0.5);
    Ok(f)
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Width, in levels, of the transitions of [`level_stair`].
pub const GAUGE_TRANSITION: f64 = 0.5;

/// Nearest level index of s = γ̃/b, made continuous by linear transitions
/// of width [`GAUGE_TRANSITION`] centred on the half levels.
#[inline]
fn level_stair(s: f64) -> f64 {
    let m = s.floor();
    m + ((s - m - 0.5) / GAUGE_TRANSITION + 0.5).clamp(0.0, 1.0)
}

/// V = (τ^per + Σ_j F_j)/B over `j_range` (inclusive).
///
/// Every level that no curve crosses contributes the constant ±½∫J, so the
/// bare sum depends on how many of them are included. Terms are instead
/// paired symmetrically about the nearest level ℓ(X): levels outside the
/// range add ½∫J·(j_lo + j_hi − 2ℓ(X)). ℓ is the nearest level index,
/// smoothed across half levels so V stays continuous and monotone; on a
/// curve it is the curve's own level.
pub fn normal_velocity(
    field: &LevelSetField2D,
    obstacles: &ObstacleField2D,
    kernel: &Kernel2D,
    j_range: (i64, i64),
    drag: f64,
) -> Result<Vec<f64>> {
    check_grid(field, kernel)?;
    if obstacles.grid != field.grid {
        return Err(Error::param("obstacles", "grid differs from the field grid"));
    }
    if !(drag > 0.0) {
        return Err(Error::param("B", "drag must be > 0"));
    }
    let b = kernel.b();
    let (lo, hi) = j_range;
    if lo > hi {
        return Err(Error::param("j_range", "empty level range"));
    }
    let (min, max) = (field.min() / b, field.max() / b);
    if min < (lo as f64) + 0.5 || max > (hi as f64) - 0.5 {
        log::warn!("level function spans [{min}, {max}] levels, outside the summed range [{lo}, {hi}]");
    }
    let levels: Vec<f64> = (lo..=hi).map(|j| j as f64 * b).collect();
    let s: Vec<f64> = field
        .values
        .iter()
        .map(|v| levels.iter().map(|l| sign(v - l)).sum())
        .collect();
    let conv = kernel.fft().convolve(kernel.j_hat(), &s);
    let half_total = 0.5 * kernel.total();
    let ends = (lo + hi) as f64;
    let mut v = vec![0.0; field.values.len()];
    kernel.fft().execution().fill(&mut v, |k| {
        let outside = ends - 2.0 * level_stair(field.values[k] / b);
        (obstacles.values[k] + 0.5 * conv[k] + half_total * outside) / drag
    });
    Ok(v)
}

/// Largest |V|·dt·√2/h allowed by [`levelset_step`].
pub const CFL_LIMIT: f64 = 1.0;

/// One upwind step of γ̃_t = V|∇γ̃| with Godunov's gradient norm.
pub fn levelset_step(field: &LevelSetField2D, velocity: &[f64], dt: f64) -> Result<LevelSetField2D> {
    levelset_step_with(field, velocity, dt, Execution::default())
}

/// [`levelset_step`] with an explicit execution strategy.
pub fn levelset_step_with(
    field: &LevelSetField2D,
    velocity: &[f64],
    dt: f64,
    exec: Execution,
) -> Result<LevelSetField2D> {
    let g = field.grid;
    if velocity.len() != g.len() {
        return Err(Error::param("velocity", "size does not match the grid"));
    }
    if !(dt >= 0.0) {
        return Err(Error::param("dt", "must be >= 0"));
    }
    let vmax = velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cfl = dt * vmax * std::f64::consts::SQRT_2 / g.spacing;
    if !(cfl <= CFL_LIMIT) {
        return Err(Error::Stability {
            step: 0,
            reason: format!("CFL number {cfl} exceeds {CFL_LIMIT} (max |V| = {vmax}, dt = {dt})"),
        });
    }
    if dt == 0.0 {
        return Ok(field.clone());
    }
    let u = &field.values;
    let (nx, ny, h) = (g.nx, g.ny, g.spacing);
    let mut next = vec![0.0; g.len()];
    exec.fill(&mut next, |k| {
        let v = velocity[k];
        if v == 0.0 {
            return u[k];
        }
        let (ix, iy) = (k % nx, k / nx);
        let c = u[k];
        let xm = (c - u[iy * nx + (ix + nx - 1) % nx]) / h;
        let xp = (u[iy * nx + (ix + 1) % nx] - c) / h;
        let ym = (c - u[((iy + ny - 1) % ny) * nx + ix]) / h;
        let yp = (u[((iy + 1) % ny) * nx + ix] - c) / h;
        let norm = if v > 0.0 {
            (xm.min(0.0).powi(2) + xp.max(0.0).powi(2) + ym.min(0.0).powi(2) + yp.max(0.0).powi(2)).sqrt()
        } else {
            (xm.max(0.0).powi(2) + xp.min(0.0).powi(2) + ym.max(0.0).powi(2) + yp.min(0.0).powi(2)).sqrt()
        };
        c + dt * v * norm
    });
    Ok(LevelSetField2D {
        grid: g,
        values: next,
        time: field.time + dt,
    })
}

/// Bound on the Godunov gradient norm over the grid.
fn max_one_sided_gradient(field: &LevelSetField2D) -> f64 {
    let g = field.grid;
    let u = &field.values;
    let mut m: f64 = 0.0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let c = u[g.index(ix, iy)];
            let dx = (u[g.index((ix + 1) % g.nx, iy)] - c).abs();
            let dy = (u[g.index(ix, (iy + 1) % g.ny)] - c).abs();
            m = m.max(dx).max(dy);
        }
    }
    std::f64::consts::SQRT_2 * m / g.spacing
}

/// Run `steps` explicit steps of size `dt`, calling `observe` after each.
///
/// Aborts unless the CFL number plus the stiffness of the gauge term,
/// dt·max|∇γ̃|·∫J/(wbB) with w = [`GAUGE_TRANSITION`], stays below
/// [`CFL_LIMIT`].
pub fn evolve<F: FnMut(&LevelSetField2D)>(
    initial: &LevelSetField2D,
    obstacles: &ObstacleField2D,
    kernel: &Kernel2D,
    drag: f64,
    dt: f64,
    steps: u64,
    mut observe: F,
) -> Result<LevelSetField2D> {
    let mut field = initial.clone();
    for step in 0..steps {
        let range = level_range(&field, kernel.b());
        let v = normal_velocity(&field, obstacles, kernel, range, drag)?;
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let cfl = dt * vmax * std::f64::consts::SQRT_2 / field.grid.spacing;
        let stiff = dt * max_one_sided_gradient(&field) * kernel.total() / (GAUGE_TRANSITION * kernel.b() * drag);
        if cfl + stiff > CFL_LIMIT {
            return Err(Error::Stability {
                step,
                reason: format!("dt = {dt} too large: CFL {cfl} plus gauge term {stiff} exceeds {CFL_LIMIT}"),
            });
        }
        field = levelset_step_with(&field, &v, dt, kernel.fft().execution())?;
        observe(&field);
    }
    Ok(field)
}

/// τ_sc(X) = PV Σ_Z J_∞(X − Z) γ(Z) h² with the zero mode removed, i.e.
/// Σ_Z J_∞(X − Z)(γ(Z) − γ(X)) h² over the periodized kernel.
pub fn tau_sc_2d(gamma: &[f64], kernel: &Kernel2D) -> Result<Vec<f64>> {
    if gamma.len() != kernel.grid().len() {
        return Err(Error::param("gamma", "size does not match the kernel grid"));
    }
    let zero = kernel.far_hat()[0];
    let hat: Vec<_> = kernel.far_hat().iter().map(|c| c - zero).collect();
    Ok(kernel.fft().convolve(&hat, gamma))
}
