//! Macroscopic plastic flow on a periodic cell:
//!
//! ```text
//! ∂γ/∂t = f(ρ, τ_ext + τ_sc),   ρ = −∂γ/∂x,
//! τ_sc(x) = −μ̄ PV∫ ∂γ/∂x(x′) / (x − x′) dx′
//! ```
//!
//! The self-consistent stress is the periodic Hilbert transform of the
//! strain gradient, applied spectrally. Time stepping is an explicit
//! Lax–Friedrichs scheme that is monotone under the step-size bound returned
//! by [`MacroStepper::monotone_dt`], so ordered initial data stay ordered.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flowrule::FlowRule;
use crate::micro1d::{simulate, MicroState1D, SimConfig};
use crate::params::MaterialParams;
use crate::strain::{density_from_strain, StrainField1D};

/// Spectral evaluator of τ_sc on a fixed periodic grid.
pub struct SelfStress1D {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    multiplier: Vec<f64>,
    buf: Vec<Complex64>,
}

impl SelfStress1D {
    pub fn new(n: usize, length: f64, mu_bar: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        // PV∫ u(x′)/(x − x′) dx′ = π H[u]; H∂ has symbol |k|. The Nyquist
        // mode keeps |k|, which makes the discrete operator monotone.
        let multiplier = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                -mu_bar * PI * (2.0 * PI / length) * k.abs() / n as f64
            })
            .collect();
        SelfStress1D {
            n,
            fwd,
            inv,
            multiplier,
            buf: vec![Complex64::default(); n],
        }
    }

    /// τ_sc at every node of `field` (which must match this grid).
    pub fn apply(&mut self, field: &StrainField1D, out: &mut [f64]) {
        debug_assert_eq!(field.len(), self.n);
        let slope = field.winding / field.length();
        let dx = field.dx();
        for (k, (b, v)) in self.buf.iter_mut().zip(&field.values).enumerate() {
            *b = Complex64::new(v - slope * k as f64 * dx, 0.0);
        }
        self.fwd.process(&mut self.buf);
        for (b, m) in self.buf.iter_mut().zip(&self.multiplier) {
            *b *= *m;
        }
        self.inv.process(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }

    /// Diagonal of the discrete operator, −μ̄π²/(2Δx) for even n.
    pub fn diagonal(&self) -> f64 {
        self.multiplier.iter().sum::<f64>()
    }
}

/// Self-consistent stress of a periodic strain field. Its spatial mean is zero.
pub fn tau_sc_1d(field: &StrainField1D, mu_bar: f64) -> Result<Vec<f64>> {
    if !field.periodic {
        return Err(Error::param("field", "the spectral self-stress needs a periodic field"));
    }
    let mut op = SelfStress1D::new(field.len(), field.length(), mu_bar);
    let mut out = vec![0.0; field.len()];
    op.apply(field, &mut out);
    Ok(out)
}

/// What one explicit step saw and used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// |∂f/∂ρ| bound on the current (ρ, τ) box.
    pub lipschitz_rho: f64,
    /// ∂f/∂τ bound on the same box.
    pub lipschitz_tau: f64,
    /// Flow-rule queries that fell outside a table and were clamped.
    pub clamped: usize,
}

/// Scratch state shared by consecutive steps on one grid.
pub struct MacroStepper {
    stress: SelfStress1D,
    mu_bar: f64,
    rho: Vec<f64>,
    tau: Vec<f64>,
    rate: Vec<f64>,
    exec: Execution,
}

const BOX_MARGIN: f64 = 1e-9;

impl MacroStepper {
    pub fn new(field: &StrainField1D, mu_bar: f64, exec: Execution) -> Result<Self> {
        if !field.periodic {
            return Err(Error::param("field", "the macroscopic solver needs a periodic field"));
        }
        let n = field.len();
        Ok(MacroStepper {
            stress: SelfStress1D::new(n, field.length(), mu_bar),
            mu_bar,
            rho: vec![0.0; n],
            tau: vec![0.0; n],
            rate: vec![0.0; n],
            exec,
        })
    }

    /// Fill density and total stress for `field`, and return Lipschitz
    /// bounds of `rule` on the box they span.
    pub fn prepare(&mut self, field: &StrainField1D, rule: &FlowRule, tau_ext: f64) -> StepReport {
        self.rho = field.centered_density();
        self.stress.apply(field, &mut self.tau);
        self.tau.iter_mut().for_each(|t| *t += tau_ext);
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = BOX_MARGIN * (1.0 + hi.abs().max(lo.abs()));
            (lo - pad, hi + pad)
        };
        let rb = span(&self.rho);
        let tb = span(&self.tau);
        StepReport {
            lipschitz_rho: rule.lipschitz_rho(rb, tb),
            lipschitz_tau: rule.lipschitz_tau(rb, tb),
            clamped: 0,
        }
    }

    /// Largest dt keeping the scheme monotone for viscosity `theta`.
    pub fn monotone_dt(&self, dx: f64, theta: f64, lipschitz_tau: f64) -> f64 {
        dx / (theta + lipschitz_tau * self.mu_bar * PI * PI / 2.0)
    }

    /// Advance `field` by one step, assuming [`prepare`](Self::prepare) was
    /// just called on it.
    fn advance(&mut self, field: &StrainField1D, rule: &FlowRule, dt: f64, theta: f64) -> (StrainField1D, usize) {
        let n = field.len() as isize;
        let dx = field.dx();
        let visc = theta / (2.0 * dx);
        let (rho, tau) = (&self.rho, &self.tau);
        self.exec.fill(&mut self.rate, |k| {
            let ki = k as isize;
            let lap = if ki > 0 && ki < n - 1 {
                field.values[k + 1] - 2.0 * field.values[k] + field.values[k - 1]
            } else {
                field.extended(ki + 1) - 2.0 * field.values[k] + field.extended(ki - 1)
            };
            rule.eval(rho[k], tau[k]).0 + visc * lap
        });
        let clamped = match rule {
            FlowRule::CaseA { .. } => 0,
            FlowRule::Table(_) => (0..field.len()).filter(|&k| rule.eval(rho[k], tau[k]).1).count(),
        };
        let values = field
            .values
            .iter()
            .zip(&self.rate)
            .map(|(g, r)| g + dt * r)
            .collect();
        let next = StrainField1D {
            values,
            ..field.clone()
        };
        (next, clamped)
    }
}

/// One explicit Lax–Friedrichs step of ∂γ/∂t = f(ρ, τ_ext + τ_sc).
///
/// Fails if `theta` does not dominate |∂f/∂ρ| on the current state or if
/// `dt` exceeds the monotone bound Δx/(θ + κμ̄π²/2), κ the τ-Lipschitz
/// constant.
pub fn hj_step(
    field: &StrainField1D,
    rule: &FlowRule,
    tau_ext: f64,
    mu_bar: f64,
    dt: f64,
    theta: f64,
) -> Result<(StrainField1D, StepReport)> {
    if !(dt >= 0.0) {
        return Err(Error::param("dt", "must be >= 0"));
    }
    let mut stepper = MacroStepper::new(field, mu_bar, Execution::Sequential)?;
    let mut report = stepper.prepare(field, rule, tau_ext);
    check_step(&stepper, field.dx(), dt, theta, &report, 0)?;
    if dt == 0.0 {
        return Ok((field.clone(), report));
    }
    let (next, clamped) = stepper.advance(field, rule, dt, theta);
    report.clamped = clamped;
    Ok((next, report))
}

fn check_step(
    stepper: &MacroStepper,
    dx: f64,
    dt: f64,
    theta: f64,
    report: &StepReport,
    step: u64,
) -> Result<()> {
    if theta < report.lipschitz_rho * (1.0 - 1e-12) {
        return Err(Error::Stability {
            step,
            reason: format!(
                "viscosity {theta} below the local Lipschitz constant {} of f in rho",
                report.lipschitz_rho
            ),
        });
    }
    let bound = stepper.monotone_dt(dx, theta, report.lipschitz_tau);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability {
            step,
            reason: format!("dt = {dt} exceeds the monotone bound {bound}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Viscosity {
    /// θ = local Lipschitz bound of f in ρ, recomputed every step.
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `cfl` times the monotone bound, never above `max`.
    Adaptive { cfl: f64, max: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct MacroProblem {
    pub initial: StrainField1D,
    pub tau_ext: f64,
    pub rule: FlowRule,
    pub mu_bar: f64,
    pub t_final: f64,
    /// Extra output times in (0, t_final); 0 and t_final are always kept.
    pub snapshot_times: Vec<f64>,
    pub viscosity: Viscosity,
    pub time_step: TimeStep,
}

impl MacroProblem {
    /// Adaptive θ and dt (half the monotone bound).
    pub fn new(initial: StrainField1D, rule: FlowRule, tau_ext: f64, mu_bar: f64, t_final: f64) -> Self {
        MacroProblem {
            initial,
            tau_ext,
            rule,
            mu_bar,
            t_final,
            snapshot_times: Vec::new(),
            viscosity: Viscosity::Adaptive,
            time_step: TimeStep::Adaptive { cfl: 0.5, max: f64::INFINITY },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub field: StrainField1D,
}

#[derive(Debug, Clone)]
pub struct MacroSolution {
    pub snapshots: Vec<Snapshot>,
    pub steps: u64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub theta_max: f64,
    pub clamped_queries: usize,
    /// max |γ''| of the initial data.
    pub initial_curvature: f64,
}

impl MacroSolution {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a solution has at least one snapshot")
    }
}

/// Advance to `t_final`, keeping snapshots at 0, the requested times and
/// `t_final`. The winding, hence the mean density, is never touched.
pub fn solve_macro(problem: &MacroProblem, exec: Execution) -> Result<MacroSolution> {
    let field0 = &problem.initial;
    density_from_strain(field0)?;
    if !(problem.t_final >= 0.0) {
        return Err(Error::param("t_final", "must be >= 0"));
    }
    let mut stops: Vec<f64> = problem
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < problem.t_final)
        .collect();
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.dedup();
    stops.push(problem.t_final);

    let mut stepper = MacroStepper::new(field0, problem.mu_bar, exec)?;
    let dx = field0.dx();
    let mut field = field0.clone();
    let mut t = 0.0;
    let mut sol = MacroSolution {
        snapshots: vec![Snapshot {
            time: 0.0,
            field: field.clone(),
        }],
        steps: 0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
        theta_max: 0.0,
        clamped_queries: 0,
        initial_curvature: field0.max_second_difference(),
    };
    for &stop in &stops {
        while t < stop {
            let report = stepper.prepare(&field, &problem.rule, problem.tau_ext);
            let theta = match problem.viscosity {
                Viscosity::Adaptive => report.lipschitz_rho,
                Viscosity::Fixed(th) => th,
            };
            let remaining = stop - t;
            let mut dt = match problem.time_step {
                TimeStep::Fixed(dt) => dt,
                TimeStep::Adaptive { cfl, max } => {
                    (cfl * stepper.monotone_dt(dx, theta, report.lipschitz_tau)).min(max)
                }
            };
            let last = dt >= remaining * (1.0 - 1e-12);
            if last {
                dt = remaining;
            }
            check_step(&stepper, dx, dt, theta, &report, sol.steps)?;
            let (next, clamped) = stepper.advance(&field, &problem.rule, dt, theta);
            field = next;
            sol.clamped_queries += clamped;
            sol.steps += 1;
            sol.dt_min = sol.dt_min.min(dt);
            sol.dt_max = sol.dt_max.max(dt);
            sol.theta_max = sol.theta_max.max(theta);
            t = if last { stop } else { t + dt };
        }
        sol.snapshots.push(Snapshot {
            time: t,
            field: field.clone(),
        });
    }
    if sol.clamped_queries > 0 {
        log::warn!(
            "{} flow-rule queries were clamped to the table box",
            sol.clamped_queries
        );
    }
    Ok(sol)
}

/// Snapshot CSV `x,gamma,rho,tau_sc`.
pub fn write_snapshot<W: Write>(mut w: W, field: &StrainField1D, mu_bar: f64) -> Result<()> {
    let rho = field.centered_density();
    let tau = tau_sc_1d(field, mu_bar)?;
    writeln!(w, "x,gamma,rho,tau_sc")?;
    for k in 0..field.len() {
        writeln!(w, "{},{},{},{}", field.node(k), field.values[k], rho[k], tau[k])?;
    }
    Ok(())
}

/// Which monotonicity the initial strain has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// γ₀ non-increasing, so ρ = −γ₀′ ≥ 0.
    #[default]
    NonIncreasing,
    /// γ₀ non-decreasing (dislocations of the opposite sign convention).
    NonDecreasing,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::NonIncreasing => 1.0,
            Orientation::NonDecreasing => -1.0,
        }
    }
}

/// Jump locations of ε⌊γ₀/ε⌋ over one period `[x_min, x_min + length)`,
/// in microscopic coordinates x = x̄·b/ε, ascending.
///
/// The jump for level kε sits at the point where γ₀ = kε; ε⌊γ₀/ε⌋ takes its
/// lower value just after it, matching γ = −bΣH(x − xᵢ) with H(0) = 0.
pub fn positions_from_fn(
    gamma0: &dyn Fn(f64) -> f64,
    x_min: f64,
    length: f64,
    epsilon: f64,
    b: f64,
    orientation: Orientation,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) || !(b > 0.0) {
        return Err(Error::param("epsilon", "epsilon and b must be > 0"));
    }
    let s = orientation.sign();
    let g = |x: f64| s * gamma0(x);
    // monotonicity check on a fine sample
    let probes = 4096;
    let mut prev = g(x_min);
    for k in 1..=probes {
        let cur = g(x_min + length * k as f64 / probes as f64);
        if cur > prev + 1e-12 * prev.abs().max(1.0) {
            return Err(Error::NonMonotone { node: k });
        }
        prev = cur;
    }
    let hi = g(x_min);
    let lo = g(x_min + length);
    // levels k with lo < kε ≤ hi
    let k_top = (hi / epsilon).floor() as i64;
    let k_bot = (lo / epsilon).floor() as i64;
    let mut out = Vec::with_capacity((k_top - k_bot).max(0) as usize);
    for k in ((k_bot + 1)..=k_top).rev() {
        let level = k as f64 * epsilon;
        if !(level > lo) {
            continue;
        }
        // last x with g(x) >= level
        let (mut a, mut c) = (x_min, x_min + length);
        for _ in 0..200 {
            let m = 0.5 * (a + c);
            if m <= a || m >= c {
                break;
            }
            if g(m) >= level {
                a = m;
            } else {
                c = m;
            }
        }
        out.push(a * b / epsilon);
    }
    Ok(out)
}

/// [`positions_from_fn`] for a sampled field, using its piecewise-linear
/// interpolant (through the winding for periodic fields).
pub fn positions_from_strain(field: &StrainField1D, epsilon: f64, b: f64, orientation: Orientation) -> Result<Vec<f64>> {
    let s = orientation.sign();
    for k in 0..field.len() - 1 {
        if s * (field.values[k + 1] - field.values[k]) > 1e-12 * field.values[k].abs().max(1.0) {
            return Err(Error::NonMonotone { node: k });
        }
    }
    let dx = field.dx();
    let n = field.len();
    let interp = |x: f64| {
        let u = (x - field.x_min) / dx;
        let k = (u.floor() as isize).clamp(0, n as isize - 1);
        let w = u - k as f64;
        let a = if field.periodic { field.extended(k) } else { field.values[k as usize] };
        let c = if field.periodic {
            field.extended(k + 1)
        } else {
            field.values[(k as usize + 1).min(n - 1)]
        };
        a + w * (c - a)
    };
    let length = if field.periodic { field.length() } else { field.length() * (1.0 - 1e-15) };
    positions_from_fn(&interp, field.x_min, length, epsilon, b, orientation)
}

/// Microscopic side of a convergence run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroSide {
    pub params: MaterialParams,
    pub amplitude: f64,
    pub obstacle_period: f64,
    pub dt: f64,
}

/// A smooth periodic-density initial strain, the loading, and how both sides
/// are discretized.
#[derive(Clone)]
pub struct ConvergenceSetup {
    pub gamma0: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Macroscopic cell length L̄ (the cell starts at 0).
    pub length: f64,
    /// γ₀(x̄ + L̄) − γ₀(x̄).
    pub winding: f64,
    pub tau_ext: f64,
    pub t_final: f64,
    pub micro: MicroSide,
    pub rule: FlowRule,
    pub macro_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub dislocations: usize,
    /// sup over macro nodes of |γ^ε − γ⁰| at t_final.
    pub error: f64,
    /// Same at t = 0 (pure quantization).
    pub initial_error: f64,
    /// The microscopic run stopped on the pinning criterion.
    pub pinned: bool,
    /// sup |γ⁰(t_final) − γ⁰(0)| of the macroscopic solution.
    pub macro_change: f64,
}

/// Compare rescaled microscopic strain with the macroscopic solution at
/// `t_final` for each ε.
pub fn convergence_experiment(setup: &ConvergenceSetup, eps_list: &[f64], exec: Execution) -> Result<Vec<ConvergenceRow>> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("eps_list", "must be nonempty and strictly decreasing"));
    }
    let p = setup.micro.params;
    let initial = StrainField1D::periodic_from_fn(
        setup.macro_nodes,
        0.0,
        setup.length,
        setup.winding,
        |x| (setup.gamma0)(x),
    )?;
    let problem = MacroProblem::new(initial.clone(), setup.rule.clone(), setup.tau_ext, p.mu_bar(), setup.t_final);
    let macro_sol = solve_macro(&problem, exec)?;
    let macro_final = &macro_sol.last().field;
    let nodes = initial.nodes();
    let macro_change = macro_final
        .values
        .iter()
        .zip(&initial.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    exec.map(eps_list, |&eps| -> Result<ConvergenceRow> {
        let g0 = |x: f64| (setup.gamma0)(x);
        let pos0 = positions_from_fn(&g0, 0.0, setup.length, eps, p.b(), Orientation::NonIncreasing)?;
        let cell = setup.length * p.b() / eps;
        let state = MicroState1D::new(pos0.clone(), cell, setup.micro.amplitude, setup.micro.obstacle_period, setup.tau_ext)?;
        // t̄ = (μ̄/B) t/Λ with Λ = b/ε
        let t_micro = setup.t_final * p.drag() * p.b() / (eps * p.mu_bar());
        let cfg = SimConfig {
            dt: setup.micro.dt,
            total_time: t_micro,
            burn_in: Some(0.0),
            sample_every: None,
            detect_pinning: true,
        };
        let out = simulate(&state, &p, &cfg)?;
        let to_macro = eps / p.b();
        let y0: Vec<f64> = pos0.iter().map(|x| x * to_macro).collect();
        let y1: Vec<f64> = out.final_state.positions().iter().map(|x| x * to_macro).collect();
        let lbar = setup.length;
        let quantized = |x: f64| eps * ((setup.gamma0)(x) / eps).floor();
        let mut error: f64 = 0.0;
        let mut initial_error: f64 = 0.0;
        for (k, &x) in nodes.iter().enumerate() {
            let q = quantized(x);
            let crossings: f64 = y0
                .iter()
                .zip(&y1)
                .map(|(a, b)| ((x - b) / lbar).floor() - ((x - a) / lbar).floor())
                .sum();
            let micro_strain = q - eps * crossings;
            error = error.max((micro_strain - macro_final.values[k]).abs());
            initial_error = initial_error.max((q - initial.values[k]).abs());
        }
        Ok(ConvergenceRow {
            epsilon: eps,
            dislocations: pos0.len(),
            error,
            initial_error,
            pinned: out.pinned,
            macro_change,
        })
    })
    .into_iter()
    .collect()
}
