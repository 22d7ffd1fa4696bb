//! Overdamped dynamics of parallel straight edge dislocations in a periodic
//! obstacle potential:
//!
//! ```text
//! B dxᵢ/dt = −A cos(2πxᵢ/λₚ) + Σ_{j≠i} (μ̄bπ/l) cot(π(xᵢ − xⱼ)/l) + τ_ext
//! ```
//!
//! on a cell of length `l` repeated periodically. The cotangent is the exact
//! image sum of the logarithmic pair interaction −μ̄b ln|x|.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::params::MaterialParams;

/// Smallest admissible separation, as a fraction of the cell length.
pub const GAP_GUARD: f64 = 1e-12;
/// Displacement over one probe window below which a run is declared pinned.
pub const PINNING_TOL: f64 = 1e-8;

/// −dV^per/dx for V^per(x) = (A/2π) sin(2πx/λₚ)·λₚ, i.e. −A cos(2πx/λₚ).
#[inline]
pub fn obstacle_force(x: f64, amplitude: f64, period: f64) -> f64 {
    -amplitude * (2.0 * PI * x / period).cos()
}

/// Σ_k μ̄b/(dx − kl) = (μ̄bπ/l)·cot(π dx/l).
pub fn pair_force_periodized(dx: f64, cell_length: f64, mu_bar: f64, b: f64) -> Result<f64> {
    let reduced = dx.rem_euclid(cell_length);
    let gap = reduced.min(cell_length - reduced);
    let guard = GAP_GUARD * cell_length;
    if !(gap >= guard) {
        return Err(Error::Coincident { gap, guard });
    }
    let arg = PI * dx / cell_length;
    Ok(mu_bar * b * PI / cell_length * arg.cos() / arg.sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroState1D {
    /// Unwrapped abscissas, strictly increasing, spanning less than one cell.
    positions: Vec<f64>,
    cell_length: f64,
    amplitude: f64,
    obstacle_period: f64,
    tau_ext: f64,
    time: f64,
    steps: u64,
}

impl MicroState1D {
    pub fn new(
        positions: Vec<f64>,
        cell_length: f64,
        amplitude: f64,
        obstacle_period: f64,
        tau_ext: f64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::param("N", "need at least one dislocation"));
        }
        if !(cell_length > 0.0) || !(obstacle_period > 0.0) {
            return Err(Error::param("l", "cell length and obstacle period must be > 0"));
        }
        let periods = cell_length / obstacle_period;
        if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) {
            return Err(Error::param(
                "l",
                format!("cell length {cell_length} is not a multiple of the obstacle period {obstacle_period}"),
            ));
        }
        if !amplitude.is_finite() || !tau_ext.is_finite() {
            return Err(Error::param("A/tau_ext", "must be finite"));
        }
        let state = MicroState1D {
            positions,
            cell_length,
            amplitude,
            obstacle_period,
            tau_ext,
            time: 0.0,
            steps: 0,
        };
        state.check_order().map_err(|_| {
            Error::param(
                "positions",
                "must be strictly increasing and span less than one cell",
            )
        })?;
        Ok(state)
    }

    /// `n` equally spaced dislocations, the first one at a minimum of V^per.
    pub fn equally_spaced(
        n: usize,
        cell_length: f64,
        amplitude: f64,
        obstacle_period: f64,
        tau_ext: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("N", "need at least one dislocation"));
        }
        let x0 = 0.75 * obstacle_period;
        let spacing = cell_length / n as f64;
        let positions = (0..n).map(|i| x0 + i as f64 * spacing).collect();
        MicroState1D::new(positions, cell_length, amplitude, obstacle_period, tau_ext)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
    pub fn len(&self) -> usize {
        self.positions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
    pub fn cell_length(&self) -> f64 {
        self.cell_length
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    pub fn obstacle_period(&self) -> f64 {
        self.obstacle_period
    }
    pub fn tau_ext(&self) -> f64 {
        self.tau_ext
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn steps(&self) -> u64 {
        self.steps
    }
    /// N/l.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.cell_length
    }

    pub fn set_tau_ext(&mut self, tau: f64) {
        self.tau_ext = tau;
    }

    /// Shift every dislocation by `dx`.
    pub fn translate(&mut self, dx: f64) {
        self.positions.iter_mut().for_each(|x| *x += dx);
    }

    fn check_order(&self) -> std::result::Result<(), f64> {
        let guard = GAP_GUARD * self.cell_length;
        let mut min_gap = f64::INFINITY;
        for w in self.positions.windows(2) {
            min_gap = min_gap.min(w[1] - w[0]);
        }
        let first = self.positions[0];
        let last = self.positions[self.positions.len() - 1];
        if self.positions.len() > 1 {
            min_gap = min_gap.min(first + self.cell_length - last);
        }
        if min_gap >= guard || (self.positions.len() == 1 && min_gap.is_infinite()) {
            Ok(())
        } else {
            Err(min_gap)
        }
    }
}

/// Reusable buffers for the O(N²) force sum.
#[derive(Debug, Default, Clone)]
struct ForceWorkspace {
    cos: Vec<f64>,
    sin: Vec<f64>,
    forces: Vec<f64>,
}

impl ForceWorkspace {
    /// Fills `self.forces`. Pair terms use cot(θ/2) = sin θ / (1 − cos θ)
    /// written with unit phasors, so the denominator is a squared difference
    /// and keeps full relative precision for close pairs.
    fn compute(&mut self, state: &MicroState1D, params: &MaterialParams) -> Result<()> {
        let n = state.len();
        let l = state.cell_length;
        if let Err(gap) = state.check_order() {
            return Err(Error::Coincident {
                gap,
                guard: GAP_GUARD * l,
            });
        }
        self.cos.resize(n, 0.0);
        self.sin.resize(n, 0.0);
        self.forces.resize(n, 0.0);
        let omega = 2.0 * PI / l;
        let k_obst = 2.0 * PI / state.obstacle_period;
        for (i, &x) in state.positions.iter().enumerate() {
            let (s, c) = (omega * x.rem_euclid(l)).sin_cos();
            self.sin[i] = s;
            self.cos[i] = c;
            self.forces[i] = state.tau_ext - state.amplitude * (k_obst * x).cos();
        }
        let pref = 2.0 * params.mu_bar() * params.b() * PI / l;
        for i in 0..n {
            let (ci, si) = (self.cos[i], self.sin[i]);
            let mut acc = 0.0;
            for j in i + 1..n {
                let (cj, sj) = (self.cos[j], self.sin[j]);
                let dc = ci - cj;
                let ds = si - sj;
                let f = pref * (si * cj - ci * sj) / (dc * dc + ds * ds);
                acc += f;
                self.forces[j] -= f;
            }
            self.forces[i] += acc;
        }
        Ok(())
    }
}

/// Fᵢ = obstacle + periodized pair forces + τ_ext for every dislocation.
pub fn total_forces(state: &MicroState1D, params: &MaterialParams) -> Result<Vec<f64>> {
    let mut ws = ForceWorkspace::default();
    ws.compute(state, params)?;
    Ok(ws.forces)
}

fn apply_step(
    state: &mut MicroState1D,
    forces: &[f64],
    params: &MaterialParams,
    dt: f64,
) -> Result<()> {
    let scale = dt / params.drag();
    for (x, f) in state.positions.iter_mut().zip(forces) {
        *x += scale * f;
    }
    state.time += dt;
    state.steps += 1;
    if state.check_order().is_err() {
        return Err(Error::OrderingViolated {
            step: state.steps,
            time: state.time,
        });
    }
    Ok(())
}

/// One explicit Euler step xᵢ ← xᵢ + (dt/B)Fᵢ, all dislocations at once.
pub fn step_euler(state: &mut MicroState1D, params: &MaterialParams, dt: f64) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be >= 0, got {dt}")));
    }
    let forces = total_forces(state, params)?;
    apply_step(state, &forces, params, dt)
}

/// Sampled unwrapped trajectories.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory1D {
    pub times: Vec<f64>,
    /// `positions[s][i]` is dislocation `i` at `times[s]`.
    pub positions: Vec<Vec<f64>>,
    pub cell_length: f64,
}

impl Trajectory1D {
    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.positions.push(x.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean displacement from the first sample.
    pub fn mean_displacement(&self) -> Vec<f64> {
        let Some(first) = self.positions.first() else {
            return Vec::new();
        };
        let n = first.len() as f64;
        self.positions
            .iter()
            .map(|p| p.iter().zip(first).map(|(x, x0)| x - x0).sum::<f64>() / n)
            .collect()
    }

    /// CSV with header `t,i,x_unwrapped`, one row per sample and dislocation.
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> Result<()> {
        writeln!(w, "t,i,x_unwrapped")?;
        for (t, xs) in self
            .times
            .iter()
            .zip(&self.positions)
            .step_by(stride.max(1))
        {
            for (i, x) in xs.iter().enumerate() {
                writeln!(w, "{t},{i},{x}")?;
            }
        }
        Ok(())
    }

    /// x_i at an arbitrary time by 4-point Lagrange interpolation on the
    /// (uniform) sample grid. `None` outside the sampled window.
    fn position_at(&self, i: usize, t: f64) -> Option<f64> {
        let n = self.times.len();
        if n < 4 {
            return None;
        }
        let t0 = self.times[0];
        let h = self.times[1] - t0;
        let s = (t - t0) / h;
        if s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
            return None;
        }
        let nearest = s.round();
        if (s - nearest).abs() < 1e-9 {
            return Some(self.positions[nearest as usize][i]);
        }
        let k = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
        let u = s - k as f64;
        let p = |m: usize| self.positions[m][i];
        let (a, b, c, d) = (p(k - 1), p(k), p(k + 1), p(k + 2));
        Some(
            -u * (u - 1.0) * (u - 2.0) / 6.0 * a + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * b
                - (u + 1.0) * u * (u - 2.0) / 2.0 * c
                + (u + 1.0) * u * (u - 1.0) / 6.0 * d,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub total_time: f64,
    /// Start of the velocity window; `None` means half the run.
    pub burn_in: Option<f64>,
    /// Record every `k`-th step into the trajectory; `None` keeps only the
    /// window end points.
    pub sample_every: Option<u64>,
    pub detect_pinning: bool,
}

impl SimConfig {
    /// Δt = 0.01, T = 1000, burn-in T/2.
    pub fn protocol() -> Self {
        SimConfig {
            dt: 0.01,
            total_time: 1000.0,
            burn_in: None,
            sample_every: None,
            detect_pinning: true,
        }
    }

    pub fn burn_in_time(&self) -> f64 {
        self.burn_in.unwrap_or(0.5 * self.total_time)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trajectory: Trajectory1D,
    /// Mean velocity over the window (0 when pinned).
    pub velocity: f64,
    pub pinned: bool,
    pub final_state: MicroState1D,
}

/// Run explicit Euler to `total_time` and measure the mean velocity over
/// `[burn_in, total_time]` on unwrapped coordinates.
///
/// With `detect_pinning`, the run stops early once the largest displacement
/// over one probe window λₚB/max(|τ|, 1) drops below [`PINNING_TOL`]; the
/// velocity is then exactly zero.
pub fn simulate(
    state: &MicroState1D,
    params: &MaterialParams,
    config: &SimConfig,
) -> Result<SimOutcome> {
    let dt = config.dt;
    let total = config.total_time;
    let burn_in = config.burn_in_time();
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    if !(burn_in >= 0.0 && burn_in < total) {
        return Err(Error::param(
            "burn_in",
            format!("need 0 <= burn_in < T, got burn_in = {burn_in}, T = {total}"),
        ));
    }
    let n_steps = (total / dt).round() as u64;
    let burn_step = (burn_in / dt).round() as u64;
    let probe_steps = {
        let window = state.obstacle_period * params.drag() / state.tau_ext.abs().max(1.0);
        ((window / dt).round() as u64).max(1)
    };

    let mut st = state.clone();
    let mut ws = ForceWorkspace::default();
    let mut traj = Trajectory1D {
        cell_length: st.cell_length,
        ..Default::default()
    };
    let mut window_start: Option<(f64, Vec<f64>)> = None;
    let mut probe = st.positions.clone();

    for step in 0..n_steps {
        if step == burn_step {
            window_start = Some((st.time, st.positions.clone()));
        }
        match config.sample_every {
            Some(k) if step % k.max(1) == 0 => traj.push(st.time, &st.positions),
            None if step == burn_step => traj.push(st.time, &st.positions),
            _ => {}
        }
        if config.detect_pinning && step > 0 && step % probe_steps == 0 {
            let moved = st
                .positions
                .iter()
                .zip(&probe)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if moved < PINNING_TOL {
                return Ok(SimOutcome {
                    trajectory: traj,
                    velocity: 0.0,
                    pinned: true,
                    final_state: st,
                });
            }
            probe.copy_from_slice(&st.positions);
        }
        ws.compute(&st, params)?;
        let forces = std::mem::take(&mut ws.forces);
        apply_step(&mut st, &forces, params, dt)?;
        ws.forces = forces;
    }
    traj.push(st.time, &st.positions);

    let (t0, x0) = window_start.unwrap_or_else(|| (st.time, st.positions.clone()));
    let span = st.time - t0;
    let velocity = if span > 0.0 {
        st.positions
            .iter()
            .zip(&x0)
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / (st.len() as f64 * span)
    } else {
        0.0
    };
    Ok(SimOutcome {
        trajectory: traj,
        velocity,
        pinned: false,
        final_state: st,
    })
}

/// max over samples t ≥ `cutoff` and dislocations i of
/// |x_{i+shift}(t) − x_i(t + shift·delta)|, where indices past N wrap to the
/// next cell image (x_{i+N} = x_i + l).
pub fn time_shift_residual(traj: &Trajectory1D, shift: usize, delta: f64, cutoff: f64) -> Result<f64> {
    if traj.len() < 4 {
        return Err(Error::param("trajectory", "need at least 4 samples"));
    }
    let n = traj.positions[0].len();
    let lag = shift as f64 * delta;
    let t_end = *traj.times.last().unwrap();
    let mut worst: f64 = 0.0;
    let mut any = false;
    for (s, &t) in traj.times.iter().enumerate() {
        if t < cutoff || t + lag > t_end + 1e-9 || t + lag < traj.times[0] - 1e-9 {
            continue;
        }
        for i in 0..n {
            let j = i + shift;
            let lhs = traj.positions[s][j % n] + (j / n) as f64 * traj.cell_length;
            let Some(rhs) = traj.position_at(i, t + lag) else {
                continue;
            };
            any = true;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    if !any {
        return Err(Error::param("cutoff", "no samples left after the cutoff"));
    }
    Ok(worst)
}

/// Traveling-wave (hull function) residual: consecutive dislocations must
/// follow the same path shifted in time by Δ = b/(ρ⁰v).
pub fn hull_residual(traj: &Trajectory1D, rho0: f64, v: f64, b: f64, cutoff: f64) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::param("v", "hull residual needs a moving chain (v != 0)"));
    }
    if !(rho0 > 0.0) {
        return Err(Error::param("rho0", "must be > 0"));
    }
    let delta = b / (rho0 * v);
    let t_end = *traj.times.last().unwrap_or(&0.0);
    if t_end - cutoff < 2.0 * delta.abs() {
        return Err(Error::param(
            "trajectory",
            "must cover at least two shift periods after the cutoff",
        ));
    }
    time_shift_residual(traj, 1, delta, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> MaterialParams {
        MaterialParams::unit()
    }

    #[test]
    fn obstacle_force_examples() {
        assert_eq!(obstacle_force(0.0, 3.0, 1.0), -3.0);
        assert!(obstacle_force(0.25, 3.0, 1.0).abs() < 1e-15);
        assert!((obstacle_force(0.5, 3.0, 1.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn pair_force_half_cell_vanishes() {
        assert!(pair_force_periodized(5.0, 10.0, 1.0, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn pair_force_matches_truncated_image_sum() {
        let (dx, l) = (0.01, 1e6);
        let images: f64 = (-10_000i64..=10_000)
            .map(|k| 1.0 / (dx - k as f64 * l))
            .sum();
        let closed = pair_force_periodized(dx, l, 1.0, 1.0).unwrap();
        assert!((closed - images).abs() < 1e-9 * images.abs());
        assert!((closed - 100.0).abs() < 1e-6);
    }

    #[test]
    fn pair_force_guards_pole() {
        assert!(matches!(
            pair_force_periodized(0.0, 10.0, 1.0, 1.0),
            Err(Error::Coincident { .. })
        ));
        assert!(pair_force_periodized(20.0, 10.0, 1.0, 1.0).is_err());
        assert!(pair_force_periodized(1e-6, 10.0, 1.0, 1.0).unwrap() > 1e5);
    }

    #[test]
    fn phasor_forces_match_cotangent_sum() {
        let params = unit();
        let pos = vec![0.1, 0.35, 1.9, 4.2, 4.25, 7.7, 9.95];
        let st = MicroState1D::new(pos.clone(), 10.0, 3.0, 1.0, 0.7).unwrap();
        let f = total_forces(&st, &params).unwrap();
        for i in 0..pos.len() {
            let mut expect = 0.7 + obstacle_force(pos[i], 3.0, 1.0);
            for j in 0..pos.len() {
                if j != i {
                    expect += pair_force_periodized(pos[i] - pos[j], 10.0, 1.0, 1.0).unwrap();
                }
            }
            assert!((f[i] - expect).abs() < 1e-11 * expect.abs().max(1.0), "{i}: {} vs {expect}", f[i]);
        }
    }

    #[test]
    fn force_examples() {
        let p = unit();
        let st = MicroState1D::new(vec![0.3], 10.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(total_forces(&st, &p).unwrap(), vec![2.0]);
        let st = MicroState1D::new(vec![0.0], 10.0, 3.0, 1.0, 5.0).unwrap();
        assert!((total_forces(&st, &p).unwrap()[0] - 2.0).abs() < 1e-15);
        let st = MicroState1D::equally_spaced(7, 10.0, 0.0, 1.0, 0.0).unwrap();
        for f in total_forces(&st, &p).unwrap() {
            assert!(f.abs() < 1e-13);
        }
    }

    #[test]
    fn euler_examples() {
        let p = unit();
        let mut st = MicroState1D::new(vec![0.3], 10.0, 0.0, 1.0, 2.0).unwrap();
        step_euler(&mut st, &p, 0.01).unwrap();
        assert!((st.positions()[0] - 0.32).abs() < 1e-15);
        assert_eq!(st.steps(), 1);

        let st0 = MicroState1D::equally_spaced(5, 10.0, 0.0, 1.0, 0.0).unwrap();
        let mut st = st0.clone();
        step_euler(&mut st, &p, 0.01).unwrap();
        for (a, b) in st.positions().iter().zip(st0.positions()) {
            assert!((a - b).abs() < 1e-15);
        }

        let st0 = MicroState1D::new(vec![0.1, 2.0, 3.3], 10.0, 3.0, 1.0, 1.3).unwrap();
        let mut st = st0.clone();
        step_euler(&mut st, &p, 0.0).unwrap();
        assert_eq!(st.positions(), st0.positions());
    }

    #[test]
    fn oversized_step_reports_crossing() {
        let p = unit();
        let mut st = MicroState1D::new(vec![0.0, 0.02, 5.0], 10.0, 0.0, 1.0, 0.0).unwrap();
        let err = step_euler(&mut st, &p, 10.0).unwrap_err();
        assert!(matches!(err, Error::OrderingViolated { step: 1, .. }));
    }

    #[test]
    fn state_validation() {
        assert!(MicroState1D::new(vec![1.0, 0.5], 10.0, 0.0, 1.0, 0.0).is_err());
        assert!(MicroState1D::new(vec![0.0, 10.5], 10.0, 0.0, 1.0, 0.0).is_err());
        assert!(MicroState1D::new(vec![0.0], 10.5, 0.0, 1.0, 0.0).is_err());
        assert!(MicroState1D::equally_spaced(0, 10.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn free_particle_moves_at_tau() {
        let p = unit();
        let st = MicroState1D::new(vec![0.0], 10.0, 0.0, 1.0, 2.0).unwrap();
        let cfg = SimConfig {
            total_time: 10.0,
            ..SimConfig::protocol()
        };
        let out = simulate(&st, &p, &cfg).unwrap();
        assert!((out.velocity - 2.0).abs() < 1e-12);
        assert!(!out.pinned);
    }

    #[test]
    fn single_dislocation_below_threshold_is_pinned() {
        let p = unit();
        let st = MicroState1D::equally_spaced(1, 10.0, 3.0, 1.0, 1.0).unwrap();
        let out = simulate(&st, &p, &SimConfig::protocol()).unwrap();
        assert_eq!(out.velocity, 0.0);
        assert!(out.pinned);
    }

    #[test]
    fn pinned_lattice_at_minima() {
        let p = unit();
        let st = MicroState1D::equally_spaced(10, 10.0, 3.0, 1.0, 0.0).unwrap();
        let out = simulate(&st, &p, &SimConfig::protocol()).unwrap();
        assert_eq!(out.velocity, 0.0);
    }

    #[test]
    fn washboard_velocity() {
        let p = unit();
        let st = MicroState1D::equally_spaced(1, 10.0, 3.0, 1.0, 5.0).unwrap();
        let out = simulate(&st, &p, &SimConfig::protocol()).unwrap();
        assert!((out.velocity - 4.0).abs() < 0.02 * 4.0, "v = {}", out.velocity);
    }

    #[test]
    fn galilean_invariance_without_obstacles() {
        let p = unit();
        for n in [2usize, 5, 13] {
            let pos: Vec<f64> = (0..n).map(|i| i as f64 * 0.5 + 0.02 * (i * i) as f64).collect();
            let st = MicroState1D::new(pos, 10.0, 0.0, 1.0, 1.7).unwrap();
            let cfg = SimConfig {
                total_time: 20.0,
                detect_pinning: false,
                ..SimConfig::protocol()
            };
            let out = simulate(&st, &p, &cfg).unwrap();
            assert!((out.velocity - 1.7).abs() < 1e-10, "n = {n}: {}", out.velocity);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let p = unit();
        let st = MicroState1D::equally_spaced(2, 10.0, 0.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            dt: 0.5,
            total_time: 1.0,
            burn_in: Some(0.0),
            sample_every: Some(1),
            detect_pinning: false,
        };
        let out = simulate(&st, &p, &cfg).unwrap();
        let mut buf = Vec::new();
        out.trajectory.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,i,x_unwrapped");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert_eq!(lines[1], "0,0,0.75");
        assert_eq!(out.trajectory.mean_displacement(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn uniform_motion_is_an_exact_hull() {
        let (n, l, v) = (4usize, 8.0, 1.5);
        let rho = n as f64 / l;
        let times: Vec<f64> = (0..400).map(|s| s as f64 * 0.05).collect();
        let positions = times
            .iter()
            .map(|t| (0..n).map(|i| v * t + i as f64 / rho).collect())
            .collect();
        let traj = Trajectory1D {
            times,
            positions,
            cell_length: l,
        };
        assert!(hull_residual(&traj, rho, v, 1.0, 1.0).unwrap() < 1e-12);
        assert_eq!(time_shift_residual(&traj, 0, 0.0, 0.0).unwrap(), 0.0);
        assert!(hull_residual(&traj, rho, 0.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ordering_is_preserved(seed in prop::collection::vec(0.05f64..1.0, 2..12), tau in 0.0f64..6.0) {
            let mut x = 0.0;
            let mut pos = Vec::new();
            for g in &seed { x += g; pos.push(x); }
            let l = (x + 1.0).ceil();
            let st = MicroState1D::new(pos, l, 3.0, 1.0, tau).unwrap();
            let p = unit();
            let mut s = st.clone();
            for _ in 0..300 {
                step_euler(&mut s, &p, 0.005).unwrap();
                let q = s.positions();
                for w in q.windows(2) { prop_assert!(w[1] > w[0]); }
                prop_assert!(q[q.len() - 1] - q[0] < l);
            }
        }

        #[test]
        fn translation_by_obstacle_period(shift in -3i32..3, tau in -4.0f64..4.0) {
            let p = unit();
            let st = MicroState1D::new(vec![0.2, 1.1, 2.9, 6.3], 10.0, 3.0, 1.0, tau).unwrap();
            let mut moved = st.clone();
            moved.translate(shift as f64);
            let a = total_forces(&st, &p).unwrap();
            let b = total_forces(&moved, &p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-11 * x.abs().max(1.0));
            }
        }
    }
}
