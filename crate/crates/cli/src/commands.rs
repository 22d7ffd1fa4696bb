use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context as _, Result};
use sha2::{Digest, Sha256};

use dhomog_core::exec::Execution;
use dhomog_core::flowrule::{self, FlowRule, FlowRuleTable, SweepSetup};
use dhomog_core::macro1d::{self, ConvergenceSetup, MacroProblem, MicroSide, TimeStep, Viscosity};
use dhomog_core::micro1d::{self, MicroState1D, SimConfig};
use dhomog_core::micro2d::{self, Grid2D, LevelSetField2D, ObstacleField2D};
use dhomog_core::params::MaterialParams;
use dhomog_core::strain::StrainField1D;

use crate::config::RunConfig;
use crate::UsageError;

/// A run that finished its outputs but must still report failure.
#[derive(Debug)]
pub struct NumericalAbort(pub String);

impl std::fmt::Display for NumericalAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalAbort {}

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    pub exec: Execution,
}

impl Context<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn manifest(&self, command: &str, info: &[(String, String)]) -> Result<()> {
        self.cfg.write_manifest(&self.path("manifest.txt"), command, info)
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Size the worker pool from `threads` (0: one per core, 1: sequential).
pub fn init_workers(cfg: &RunConfig) -> Result<Execution> {
    let threads = cfg.usize("threads")?;
    if threads == 1 {
        return Ok(Execution::Sequential);
    }
    if threads > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("worker pool already initialized: {e}");
        }
    }
    Ok(Execution::Parallel)
}

/// μ̄ = μ/(2π(1 − ν)), so ν = 0 by default gives μ = 2πμ̄.
fn material(cfg: &RunConfig, nu: f64) -> Result<MaterialParams> {
    let mu_bar = cfg.f64("mu_bar")?;
    Ok(MaterialParams::new(2.0 * PI * (1.0 - nu) * mu_bar, nu, cfg.f64("b")?, cfg.f64("B")?)?)
}

pub static SIMULATE1D: &[(&str, &str)] = &[
    ("N", "1"),
    ("tau", "0"),
    ("A", "3"),
    ("l", "10"),
    ("lambda", "1"),
    ("b", "1"),
    ("B", "1"),
    ("mu_bar", "1"),
    ("dt", "0.01"),
    ("T", "1000"),
    ("burn_in", "auto"),
    ("sample_every", "1"),
    ("csv_stride", "10"),
    ("detect_pinning", "true"),
    ("threads", "0"),
    ("seed", "0"),
];

fn sim_config(cfg: &RunConfig, sample_every: Option<u64>, detect_pinning: bool) -> Result<SimConfig> {
    Ok(SimConfig {
        dt: cfg.f64("dt")?,
        total_time: cfg.f64("T")?,
        burn_in: cfg.f64_or_auto("burn_in")?,
        sample_every,
        detect_pinning,
    })
}

pub fn simulate1d(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg;
    let params = material(cfg, 0.0)?;
    let n = cfg.usize("N")?;
    let tau = cfg.f64("tau")?;
    let l = cfg.f64("l")?;
    let sample_every = cfg.u64("sample_every")?.max(1);
    let sim = sim_config(cfg, Some(sample_every), cfg.bool("detect_pinning")?)?;
    let state = MicroState1D::equally_spaced(n, l, cfg.f64("A")?, cfg.f64("lambda")?, tau)?;
    let outcome = micro1d::simulate(&state, &params, &sim)?;

    outcome
        .trajectory
        .write_csv(ctx.create("trajectory.csv")?, cfg.usize("csv_stride")?)?;

    let rho0 = n as f64 / l;
    let v = outcome.velocity;
    let hull = if outcome.pinned || v == 0.0 {
        "n/a".to_string()
    } else {
        match micro1d::hull_residual(&outcome.trajectory, rho0, v, params.b(), sim.burn_in_time()) {
            Ok(r) => r.to_string(),
            Err(e) => {
                log::warn!("hull residual unavailable: {e}");
                "n/a".to_string()
            }
        }
    };
    let f = rho0 * params.b() * v / params.drag();
    let summary = format!(
        "N={n} tau={tau} rho0={rho0} v={v} f={f} pinned={} hull_residual={hull}",
        outcome.pinned
    );
    println!("{summary}");
    writeln!(ctx.create("summary.txt")?, "{summary}")?;
    ctx.manifest(
        "simulate1d",
        &[
            kv("velocity", v),
            kv("pinned", outcome.pinned),
            kv("hull_residual", &hull),
            kv("final_time", outcome.final_state.time()),
        ],
    )
}

pub static SWEEP: &[(&str, &str)] = &[
    ("preset", "full"),
    ("N_list", "1:200"),
    ("tau_list", "0:9:201"),
    ("A", "3"),
    ("l", "10"),
    ("lambda", "1"),
    ("b", "1"),
    ("B", "1"),
    ("mu_bar", "1"),
    ("dt", "0.01"),
    ("T", "1000"),
    ("burn_in", "auto"),
    ("resume", ""),
    ("matrix_sentinel", "none"),
    ("threads", "0"),
    ("seed", "0"),
];

/// Grid and horizon of each sweep preset.
pub fn sweep_preset(name: &str, cfg: &mut RunConfig) -> Result<()> {
    match name {
        "full" => {
            cfg.set("N_list", "1:200");
            cfg.set("tau_list", "0:9:201");
            cfg.set("T", "1000");
        }
        "desk" | "case-a" => {
            cfg.set("N_list", "1:50");
            cfg.set("tau_list", "0:9:50");
            cfg.set("T", "200");
        }
        "custom" => {}
        other => return Err(usage(format!("`preset` must be full|desk|case-a|custom, got `{other}`"))),
    }
    if name == "case-a" {
        cfg.set("A", "0");
    }
    cfg.set("preset", name);
    Ok(())
}

fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

fn read_table(csv: &Path) -> Result<FlowRuleTable> {
    let table = FlowRuleTable::read(open_input(csv)?, open_input(&meta_path(csv))?)
        .with_context(|| format!("reading flow-rule table {}", csv.display()))?;
    Ok(table)
}

fn write_table(ctx: &Context, stem: &str, table: &FlowRuleTable) -> Result<()> {
    let mut w = ctx.create(&format!("{stem}.csv"))?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut w = ctx.create(&format!("{stem}.meta"))?;
    table.write_meta(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn sweep(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg;
    let n_list = cfg.usize_list("N_list")?;
    let tau_list = cfg.f64_list("tau_list")?;
    let setup = SweepSetup {
        params: material(cfg, 0.0)?,
        cell_length: cfg.f64("l")?,
        amplitude: cfg.f64("A")?,
        obstacle_period: cfg.f64("lambda")?,
        sim: sim_config(cfg, None, true)?,
    };
    let previous = match cfg.raw("resume") {
        "" => None,
        dir => Some(read_table(&Path::new(dir).join("flowrule.csv"))?),
    };
    let sentinel = match cfg.raw("matrix_sentinel") {
        "none" => None,
        _ => Some(cfg.f64("matrix_sentinel")?),
    };

    log::info!("sweeping {} x {} cells", n_list.len(), tau_list.len());
    let started = std::time::Instant::now();
    let table = flowrule::sweep_resume(&n_list, &tau_list, &setup, ctx.exec, previous.as_ref())?;
    log::info!("sweep finished in {:.1?}", started.elapsed());

    write_table(ctx, "flowrule", &table)?;
    let odd = flowrule::extend_odd(&table);
    write_table(ctx, "flowrule_odd", &odd)?;
    let mut w = ctx.create("flowrule_matrix.csv")?;
    table.write_matrix(&mut w, sentinel)?;
    w.flush()?;

    let audit = odd.audit();
    let mut info = vec![
        kv("cells", table.rho_axis.len() * table.tau_axis.len()),
        kv("failed_cells", table.failed.len()),
        kv("audit_passed", audit.passed()),
        kv("monotone_violations", audit.monotone_violations.len()),
        kv("noise_floor", table.meta.noise_floor),
    ];
    let mut report = format!(
        "cells={} failed={} audit={}",
        table.rho_axis.len() * table.tau_axis.len(),
        table.failed.len(),
        if audit.passed() { "pass" } else { "FAIL" }
    );
    if setup.amplitude == 0.0 {
        let dev = case_a_deviation(&table, setup.params.mu_bar());
        info.push(kv("case_a_max_rel_deviation", dev));
        report.push_str(&format!(" case_a_max_rel_deviation={dev}"));
    }
    println!("{report}");
    ctx.manifest("sweep", &info)?;
    if !table.failed.is_empty() {
        return Err(NumericalAbort(format!(
            "{} cells failed; rerun with --resume {} to retry them",
            table.failed.len(),
            ctx.out.display()
        ))
        .into());
    }
    Ok(())
}

/// max |f − ρτ/μ̄| / (ρτ/μ̄) over cells with τ ≠ 0.
fn case_a_deviation(table: &FlowRuleTable, mu_bar: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, &rho) in table.rho_axis.iter().enumerate() {
        for (c, &tau) in table.tau_axis.iter().enumerate() {
            let exact = flowrule::f_case_a(rho, tau, mu_bar);
            if exact != 0.0 {
                worst = worst.max(((table.get(r, c) - exact) / exact).abs());
            }
        }
    }
    worst
}

/// The flow rule named by `rule`/`table` and the SHA-256 of the table files.
fn load_rule(cfg: &RunConfig) -> Result<(FlowRule, Option<(PathBuf, String)>)> {
    match cfg.choice("rule", &["case-a", "table"])?.as_str() {
        "case-a" => Ok((FlowRule::CaseA { mu_bar: cfg.f64("mu_bar")? }, None)),
        _ => {
            let path = PathBuf::from(cfg.raw("table"));
            if path.as_os_str().is_empty() {
                return Err(usage("rule=table needs `table` (or --table PATH)"));
            }
            let table = flowrule::extend_odd(&read_table(&path)?);
            if !table.is_complete() {
                return Err(usage(format!(
                    "flow-rule table {} has {} failed cells; finish it with sweep --resume",
                    path.display(),
                    table.failed.len()
                )));
            }
            let mut hash = Sha256::new();
            hash.update(std::fs::read(&path)?);
            hash.update(std::fs::read(meta_path(&path))?);
            let digest = format!("{:x}", hash.finalize());
            let mu_bar = cfg.f64("mu_bar")?;
            if table.meta.mu_bar != mu_bar {
                return Err(usage(format!(
                    "table was built with mu_bar = {} but mu_bar = {mu_bar}",
                    table.meta.mu_bar
                )));
            }
            Ok((FlowRule::Table(table), Some((path, digest))))
        }
    }
}

fn rule_info(table: &Option<(PathBuf, String)>) -> Vec<(String, String)> {
    match table {
        Some((path, digest)) => vec![kv("flow_rule_file", path.display()), kv("flow_rule_sha256", digest)],
        None => vec![kv("flow_rule", "closed form rho*tau/mu_bar")],
    }
}

/// γ₀(x) = −ρ₀x + a·L/(2π)·sin(2πx/L), density ρ₀ − a·cos(2πx/L).
fn initial_profile(cfg: &RunConfig) -> Result<(Arc<dyn Fn(f64) -> f64 + Send + Sync>, f64, f64)> {
    let length = cfg.f64("length")?;
    let rho0 = cfg.f64("rho0")?;
    let a = cfg.f64("amplitude")?;
    if !(length > 0.0) {
        return Err(usage("`length` must be > 0"));
    }
    if a.abs() > rho0 {
        return Err(usage(format!("|amplitude| = {} exceeds rho0 = {rho0}: negative density", a.abs())));
    }
    let k = 2.0 * PI / length;
    Ok((Arc::new(move |x: f64| -rho0 * x + a / k * (k * x).sin()), length, -rho0 * length))
}

pub static MACRO: &[(&str, &str)] = &[
    ("rule", "case-a"),
    ("table", ""),
    ("mu_bar", "1"),
    ("tau", "1"),
    ("length", "1"),
    ("nodes", "1024"),
    ("rho0", "1"),
    ("amplitude", "0.5"),
    ("T", "0.25"),
    ("snapshot_times", ""),
    ("theta", "auto"),
    ("dt", "auto"),
    ("cfl", "0.5"),
    ("threads", "0"),
    ("seed", "0"),
];

pub fn macro_solve(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg;
    let (rule, table) = load_rule(cfg)?;
    let (gamma0, length, winding) = initial_profile(cfg)?;
    let initial = StrainField1D::periodic_from_fn(cfg.usize("nodes")?, 0.0, length, winding, |x| gamma0(x))?;
    let mu_bar = cfg.f64("mu_bar")?;
    let mut problem = MacroProblem::new(initial, rule, cfg.f64("tau")?, mu_bar, cfg.f64("T")?);
    problem.snapshot_times = cfg.f64_list("snapshot_times")?;
    if let Some(theta) = cfg.f64_or_auto("theta")? {
        problem.viscosity = Viscosity::Fixed(theta);
    }
    problem.time_step = match cfg.f64_or_auto("dt")? {
        Some(dt) => TimeStep::Fixed(dt),
        None => TimeStep::Adaptive {
            cfl: cfg.f64("cfl")?,
            max: f64::INFINITY,
        },
    };
    let sol = macro1d::solve_macro(&problem, ctx.exec)?;

    let mut index = ctx.create("snapshots.csv")?;
    writeln!(index, "index,time,file")?;
    for (k, snap) in sol.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        let mut w = ctx.create(&name)?;
        macro1d::write_snapshot(&mut w, &snap.field, mu_bar)?;
        w.flush()?;
        writeln!(index, "{k},{},{name}", snap.time)?;
    }
    index.flush()?;

    let last = &sol.last().field;
    let change = last
        .values
        .iter()
        .zip(&problem.initial.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "steps={} dt_min={} dt_max={} theta_max={} max_change={change}",
        sol.steps, sol.dt_min, sol.dt_max, sol.theta_max
    );
    let mut info = vec![
        kv("boundary", "periodic, winding = -rho0*length"),
        kv("grid_nodes", last.len()),
        kv("dx", last.dx()),
        kv(
            "dt_policy",
            match problem.time_step {
                TimeStep::Fixed(_) => "fixed".to_string(),
                TimeStep::Adaptive { cfl, .. } => format!("adaptive, {cfl} x monotone bound"),
            },
        ),
        kv("theta_policy", if matches!(problem.viscosity, Viscosity::Adaptive) { "adaptive" } else { "fixed" }),
        kv("steps", sol.steps),
        kv("dt_min", sol.dt_min),
        kv("dt_max", sol.dt_max),
        kv("theta_max", sol.theta_max),
        kv("clamped_queries", sol.clamped_queries),
        kv("max_change", change),
    ];
    info.extend(rule_info(&table));
    ctx.manifest("macro", &info)
}

pub static CONVERGE: &[(&str, &str)] = &[
    ("rule", "case-a"),
    ("table", ""),
    ("eps", "0.04,0.02,0.01"),
    ("tau", "1"),
    ("A", "0"),
    ("lambda", "1"),
    ("b", "1"),
    ("B", "1"),
    ("mu_bar", "1"),
    ("dt", "0.01"),
    ("length", "1"),
    ("nodes", "1024"),
    ("rho0", "1"),
    ("amplitude", "0.5"),
    ("T", "0.25"),
    ("threads", "0"),
    ("seed", "0"),
];

pub fn converge(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg;
    let mut eps = cfg.f64_list("eps")?;
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(usage("`eps` must list positive values"));
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if let Some(w) = eps.windows(2).find(|w| w[0] == w[1]) {
        return Err(usage(format!("duplicate epsilon {}", w[0])));
    }
    let (rule, table) = load_rule(cfg)?;
    let params = material(cfg, 0.0)?;
    let amplitude = cfg.f64("A")?;
    let obstacle_period = cfg.f64("lambda")?;
    if let FlowRule::Table(t) = &rule {
        let m = &t.meta;
        if m.amplitude != amplitude || m.obstacle_period != obstacle_period || m.drag != params.drag() {
            return Err(usage(format!(
                "table was built with A = {}, lambda = {}, B = {}; the microscopic side uses A = {amplitude}, lambda = {obstacle_period}, B = {}",
                m.amplitude,
                m.obstacle_period,
                m.drag,
                params.drag()
            )));
        }
    }
    let (gamma0, length, winding) = initial_profile(cfg)?;
    let setup = ConvergenceSetup {
        gamma0,
        length,
        winding,
        tau_ext: cfg.f64("tau")?,
        t_final: cfg.f64("T")?,
        micro: MicroSide {
            params,
            amplitude,
            obstacle_period,
            dt: cfg.f64("dt")?,
        },
        rule,
        macro_nodes: cfg.usize("nodes")?,
    };
    let rows = macro1d::convergence_experiment(&setup, &eps, ctx.exec)?;

    let mut w = ctx.create("converge.csv")?;
    writeln!(w, "epsilon,dislocations,error,initial_error,error_over_eps,pinned,macro_change")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.epsilon,
            r.dislocations,
            r.error,
            r.initial_error,
            r.error / r.epsilon,
            r.pinned,
            r.macro_change
        )?;
        println!("eps={} error={} error/eps={} pinned={}", r.epsilon, r.error, r.error / r.epsilon, r.pinned);
    }
    w.flush()?;
    let monotone = rows.windows(2).all(|p| p[1].error <= p[0].error);
    let mut info = vec![kv("errors_non_increasing", monotone)];
    info.extend(rule_info(&table));
    ctx.manifest("converge", &info)
}

pub static SIMULATE2D: &[(&str, &str)] = &[
    ("nx", "128"),
    ("ny", "128"),
    ("h", "0.25"),
    ("r_bar", "2"),
    ("mu_bar", "1"),
    ("nu", "0"),
    ("b", "1"),
    ("B", "1"),
    ("A2", "0"),
    ("lambda", "2"),
    ("tau", "0.5"),
    ("init", "circle"),
    ("init_file", ""),
    ("radius", "8"),
    ("center_x", "auto"),
    ("center_y", "auto"),
    ("profile_width", "1.5"),
    ("dt", "0.05"),
    ("steps", "100"),
    ("snapshot_every", "10"),
    ("threads", "0"),
    ("seed", "0"),
];

/// Height of the initial loop profile, in Burgers lengths: the level
/// function stays inside (−b/2, b/2), so only the curve j = 0 exists.
const LOOP_HEIGHT: f64 = 0.45;

fn snapshot_2d(ctx: &Context, k: usize, step: u64, field: &LevelSetField2D, b: f64, index: &mut impl Write) -> Result<()> {
    let field_name = format!("field_{k:04}.csv");
    let contour_name = format!("contours_{k:04}.csv");
    let mut w = ctx.create(&field_name)?;
    micro2d::write_grid(&mut w, field)?;
    w.flush()?;
    let lo = (field.min() / b).ceil() as i64;
    let hi = (field.max() / b).floor() as i64;
    let levels: Vec<(f64, Vec<micro2d::Polyline>)> = (lo..=hi)
        .map(|j| {
            let level = j as f64 * b;
            (level, micro2d::contours(field, level))
        })
        .collect();
    let mut w = ctx.create(&contour_name)?;
    micro2d::write_contours(&mut w, &levels)?;
    w.flush()?;
    let loops: usize = levels.iter().map(|(_, l)| l.iter().filter(|p| p.closed).count()).sum();
    let area: f64 = levels
        .iter()
        .filter(|(level, _)| *level == 0.0)
        .flat_map(|(_, l)| l.iter())
        .map(|p| p.area().abs())
        .sum();
    writeln!(index, "{k},{step},{},{field_name},{contour_name},{loops},{area}", field.time)?;
    Ok(())
}

pub fn simulate2d(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg;
    let nu = cfg.f64("nu")?;
    let params = material(cfg, nu)?;
    let b = params.b();
    let initial = match cfg.choice("init", &["circle", "file"])?.as_str() {
        "file" => {
            let path = PathBuf::from(cfg.raw("init_file"));
            micro2d::read_grid(open_input(&path)?).with_context(|| format!("reading {}", path.display()))?
        }
        _ => {
            let grid = Grid2D::new(cfg.usize("nx")?, cfg.usize("ny")?, cfg.f64("h")?)?;
            let cx = cfg.f64_or_auto("center_x")?.unwrap_or(0.5 * grid.length_x());
            let cy = cfg.f64_or_auto("center_y")?.unwrap_or(0.5 * grid.length_y());
            let radius = cfg.f64("radius")?;
            let width = cfg.f64("profile_width")?;
            if !(width > 0.0) {
                return Err(usage("`profile_width` must be > 0"));
            }
            LevelSetField2D::from_fn(grid, |x, y| {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                LOOP_HEIGHT * b * ((radius - r) / width).tanh()
            })?
        }
    };
    let grid = initial.grid;
    let kernel = micro2d::build_kernel(&params, cfg.f64("r_bar")?, grid, ctx.exec)?;
    let tau = cfg.f64("tau")?;
    let a2 = cfg.f64("A2")?;
    let obstacles = if a2 == 0.0 {
        ObstacleField2D::constant(grid, tau)
    } else {
        ObstacleField2D::sinusoidal(grid, a2, cfg.f64("lambda")?, tau)?
    };
    let dt = cfg.f64("dt")?;
    let steps = cfg.u64("steps")?;
    let every = cfg.u64("snapshot_every")?.max(1);

    let mut index = ctx.create("snapshots.csv")?;
    writeln!(index, "index,step,time,field,contours,loops,area_level0")?;
    snapshot_2d(ctx, 0, 0, &initial, b, &mut index)?;
    let mut written = 1;
    let mut step = 0u64;
    let mut failure: Option<anyhow::Error> = None;
    let result = micro2d::evolve(&initial, &obstacles, &kernel, params.drag(), dt, steps, |f| {
        step += 1;
        if failure.is_none() && (step % every == 0 || step == steps) {
            if let Err(e) = snapshot_2d(ctx, written, step, f, b, &mut index) {
                failure = Some(e);
            }
            written += 1;
        }
    });
    index.flush()?;
    if let Some(e) = failure {
        return Err(e);
    }
    let info = [
        kv("grid", format!("{}x{}", grid.nx, grid.ny)),
        kv("cutoff", kernel.cutoff()),
        kv("kernel_total", kernel.total()),
        kv("steps_completed", step),
        kv("snapshots", written),
    ];
    ctx.manifest("simulate2d", &info)?;
    let last = result?;
    println!("steps={step} time={} snapshots={written}", last.time);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_set_grid_and_amplitude() {
        let mut c = RunConfig::new(SWEEP);
        sweep_preset("case-a", &mut c).unwrap();
        assert_eq!(c.raw("A"), "0");
        assert_eq!(c.usize_list("N_list").unwrap().len(), 50);
        assert_eq!(c.f64_list("tau_list").unwrap().len(), 50);
        let mut c = RunConfig::new(SWEEP);
        sweep_preset("full", &mut c).unwrap();
        let taus = c.f64_list("tau_list").unwrap();
        assert_eq!(taus.len(), 201);
        assert!((taus[1] - 9.0 / 200.0).abs() < 1e-15);
        assert!(sweep_preset("huge", &mut c).is_err());
    }

    #[test]
    fn profile_rejects_negative_density() {
        let mut c = RunConfig::new(MACRO);
        c.set("amplitude", "1.5");
        assert!(initial_profile(&c).is_err());
        c.set("amplitude", "0.5");
        let (g, l, w) = initial_profile(&c).unwrap();
        assert_eq!((l, w), (1.0, -1.0));
        assert!((g(0.25) - (-0.25 + 0.5 / (2.0 * PI))).abs() < 1e-15);
    }
}
