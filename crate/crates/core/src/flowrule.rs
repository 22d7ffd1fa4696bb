//! The effective flow rule f(ρ⁰, τ): plastic strain rate as a function of
//! dislocation density and resolved stress.
//!
//! Without obstacles it is Orowan's law ρ⁰τ/μ̄. With a periodic obstacle
//! potential it is measured: simulate N dislocations on a cell of length l,
//! take their long-time mean velocity v, and set f = (N/l)(B/μ̄)v.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::micro1d::{simulate, MicroState1D, SimConfig};
use crate::params::MaterialParams;

/// Default detection level for "f vanishes".
pub const F_TOL: f64 = 1e-6;
/// Base tolerance of the nondecreasing-in-τ audit.
pub const MONOTONE_TOL: f64 = 1e-8;

/// Orowan's law without obstacles: f = ρ⁰ τ / μ̄.
pub fn f_case_a(rho0: f64, tau: f64, mu_bar: f64) -> f64 {
    rho0 * tau / mu_bar
}

/// Everything needed to turn (N, τ) into one measured value of f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSetup {
    pub params: MaterialParams,
    pub cell_length: f64,
    pub amplitude: f64,
    pub obstacle_period: f64,
    pub sim: SimConfig,
}

impl SweepSetup {
    /// Dimensionless protocol: λ = b = B = μ̄ = 1, l = 10, A = 3, Δt = 0.01,
    /// T = 1000.
    pub fn protocol() -> Self {
        SweepSetup {
            params: MaterialParams::unit(),
            cell_length: 10.0,
            amplitude: 3.0,
            obstacle_period: 1.0,
            sim: SimConfig::protocol(),
        }
    }

    /// Same physics with the shorter T = 200 used for desk-scale sweeps.
    pub fn desk() -> Self {
        let mut s = SweepSetup::protocol();
        s.sim.total_time = 200.0;
        s
    }

    /// Uncertainty of a measured f from the unknown phase of the hull
    /// oscillation at the ends of the velocity window.
    pub fn noise_floor(&self, rho_max: f64) -> f64 {
        let window = self.sim.total_time - self.sim.burn_in_time();
        2.0 * self.obstacle_period * rho_max * self.params.drag()
            / (self.params.mu_bar() * window)
    }
}

/// `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// N ∈ {1..50} × 50 stresses on [0, 9].
pub fn desk_axes() -> (Vec<usize>, Vec<f64>) {
    ((1..=50).collect(), linspace(0.0, 9.0, 50))
}

/// N ∈ {1..200} × τ ∈ {0, 9/200, …, 9}.
pub fn full_axes() -> (Vec<usize>, Vec<f64>) {
    ((1..=200).collect(), (0..=200).map(|k| k as f64 * 9.0 / 200.0).collect())
}

/// Measured f at (N, τ). Negative stresses are answered by odd symmetry.
pub fn f_measure(n: usize, tau_ext: f64, setup: &SweepSetup) -> Result<f64> {
    if tau_ext < 0.0 {
        return f_measure(n, -tau_ext, setup).map(|f| -f);
    }
    let cell = |e: Error| Error::Cell {
        n,
        tau: tau_ext,
        source: Box::new(e),
    };
    let state = MicroState1D::equally_spaced(
        n,
        setup.cell_length,
        setup.amplitude,
        setup.obstacle_period,
        tau_ext,
    )
    .map_err(cell)?;
    let out = simulate(&state, &setup.params, &setup.sim).map_err(cell)?;
    let rho0 = n as f64 / setup.cell_length;
    Ok(rho0 * setup.params.drag() / setup.params.mu_bar() * out.velocity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedCell {
    pub n: usize,
    pub tau: f64,
    pub reason: String,
}

/// Provenance of a table. f depends on the measurement protocol, so every
/// table carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub dt: f64,
    pub total_time: f64,
    pub burn_in: f64,
    pub amplitude: f64,
    pub cell_length: f64,
    pub obstacle_period: f64,
    pub mu_bar: f64,
    pub drag: f64,
    pub n_list: Vec<usize>,
    pub f_tol: f64,
    pub noise_floor: f64,
    pub code_version: String,
}

impl TableMeta {
    fn from_setup(setup: &SweepSetup, n_list: &[usize]) -> Self {
        let rho_max = n_list.iter().copied().max().unwrap_or(0) as f64 / setup.cell_length;
        TableMeta {
            dt: setup.sim.dt,
            total_time: setup.sim.total_time,
            burn_in: setup.sim.burn_in_time(),
            amplitude: setup.amplitude,
            cell_length: setup.cell_length,
            obstacle_period: setup.obstacle_period,
            mu_bar: setup.params.mu_bar(),
            drag: setup.params.drag(),
            n_list: n_list.to_vec(),
            f_tol: F_TOL,
            noise_floor: setup.noise_floor(rho_max),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn same_protocol(&self, other: &TableMeta) -> bool {
        self.dt == other.dt
            && self.total_time == other.total_time
            && self.burn_in == other.burn_in
            && self.amplitude == other.amplitude
            && self.cell_length == other.cell_length
            && self.obstacle_period == other.obstacle_period
            && self.mu_bar == other.mu_bar
            && self.drag == other.drag
    }
}

/// f sampled on a (ρ, τ) grid. Rows are densities, columns stresses.
/// Failed cells hold NaN and are listed in `failed`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRuleTable {
    pub rho_axis: Vec<f64>,
    pub tau_axis: Vec<f64>,
    f_values: Vec<f64>,
    pub failed: Vec<FailedCell>,
    pub meta: TableMeta,
}

/// Result of the structural checks every table must pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    /// (row, column, drop) for every decrease of f along τ beyond tolerance.
    pub monotone_violations: Vec<(usize, usize, f64)>,
    pub zero_column_exact: bool,
    /// Exact oddness on mirrored pairs (vacuous without negative stresses).
    pub odd_exact: bool,
    pub tolerance: f64,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.monotone_violations.is_empty() && self.zero_column_exact && self.odd_exact
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::param(name, "axis must be nonempty"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(name, "axis must be strictly ascending"));
    }
    Ok(())
}

impl FlowRuleTable {
    pub fn from_parts(
        rho_axis: Vec<f64>,
        tau_axis: Vec<f64>,
        f_values: Vec<f64>,
        meta: TableMeta,
    ) -> Result<Self> {
        check_axis("rho_axis", &rho_axis)?;
        check_axis("tau_axis", &tau_axis)?;
        if f_values.len() != rho_axis.len() * tau_axis.len() {
            return Err(Error::param("f_values", "size does not match the axes"));
        }
        Ok(FlowRuleTable {
            rho_axis,
            tau_axis,
            f_values,
            failed: Vec::new(),
            meta,
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.f_values[row * self.tau_axis.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.tau_axis.len();
        &self.f_values[row * m..(row + 1) * m]
    }

    pub fn is_complete(&self) -> bool {
        self.failed.is_empty() && self.f_values.iter().all(|f| f.is_finite())
    }

    pub fn row_of(&self, rho0: f64) -> Result<usize> {
        self.rho_axis
            .iter()
            .position(|&r| (r - rho0).abs() <= 1e-12 * rho0.abs().max(1.0))
            .ok_or_else(|| Error::param("rho0", format!("{rho0} is not on the table's density axis")))
    }

    pub fn audit(&self) -> Audit {
        let tolerance = MONOTONE_TOL + self.meta.noise_floor;
        let mut monotone_violations = Vec::new();
        for r in 0..self.rho_axis.len() {
            let row = self.row(r);
            for c in 1..row.len() {
                let drop = row[c - 1] - row[c];
                if drop > tolerance {
                    monotone_violations.push((r, c, drop));
                }
            }
        }
        let zero_column_exact = match self.tau_axis.iter().position(|&t| t == 0.0) {
            Some(c) => (0..self.rho_axis.len()).all(|r| self.get(r, c) == 0.0),
            None => true,
        };
        let mut odd_exact = true;
        for (c, &t) in self.tau_axis.iter().enumerate() {
            if t < 0.0 {
                if let Some(c2) = self.tau_axis.iter().position(|&s| s == -t) {
                    for r in 0..self.rho_axis.len() {
                        if self.get(r, c) + self.get(r, c2) != 0.0 {
                            odd_exact = false;
                        }
                    }
                }
            }
        }
        Audit {
            monotone_violations,
            zero_column_exact,
            odd_exact,
            tolerance,
        }
    }

    /// Largest τ ≥ 0 below which f(ρ⁰, ·) stays under `f_tol`, refined by
    /// linear interpolation between the bracketing grid stresses.
    pub fn threshold(&self, rho0: f64, f_tol: f64) -> Result<f64> {
        let r = self.row_of(rho0)?;
        let row = self.row(r);
        let cols: Vec<usize> = (0..self.tau_axis.len())
            .filter(|&c| self.tau_axis[c] >= 0.0)
            .collect();
        let mut last_quiet: Option<usize> = None;
        for (k, &c) in cols.iter().enumerate() {
            if row[c] <= f_tol {
                last_quiet = Some(k);
            } else {
                break;
            }
        }
        let Some(k) = last_quiet else {
            return Ok(0.0);
        };
        let c = cols[k];
        if self.tau_axis[c] == 0.0 && cols.len() > k + 1 {
            // f is already above the tolerance at the first positive stress
            return Ok(0.0);
        }
        let Some(&c_next) = cols.get(k + 1) else {
            return Ok(self.tau_axis[c]);
        };
        let (t0, t1) = (self.tau_axis[c], self.tau_axis[c_next]);
        let (f0, f1) = (row[c], row[c_next]);
        Ok(t0 + (f_tol - f0) / (f1 - f0) * (t1 - t0))
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64, bool) {
        let n = axis.len();
        if n == 1 {
            return (0, 0.0, x != axis[0]);
        }
        if x <= axis[0] {
            return (0, 0.0, x < axis[0]);
        }
        if x >= axis[n - 1] {
            return (n - 2, 1.0, x > axis[n - 1]);
        }
        let k = axis.partition_point(|&a| a <= x) - 1;
        let k = k.min(n - 2);
        (k, (x - axis[k]) / (axis[k + 1] - axis[k]), false)
    }

    /// Bilinear interpolation; queries outside the box are clamped to it.
    /// The flag reports whether clamping happened.
    pub fn interp_checked(&self, rho0: f64, tau: f64) -> (f64, bool) {
        let (r, u, cr) = Self::locate(&self.rho_axis, rho0);
        let (c, w, ct) = Self::locate(&self.tau_axis, tau);
        let r1 = (r + 1).min(self.rho_axis.len() - 1);
        let c1 = (c + 1).min(self.tau_axis.len() - 1);
        let f00 = self.get(r, c);
        let f01 = self.get(r, c1);
        let f10 = self.get(r1, c);
        let f11 = self.get(r1, c1);
        let lo = if w == 0.0 { f00 } else { f00 + w * (f01 - f00) };
        let hi = if w == 0.0 { f10 } else { f10 + w * (f11 - f10) };
        let v = if u == 0.0 { lo } else { lo + u * (hi - lo) };
        (v, cr || ct)
    }

    pub fn interp(&self, rho0: f64, tau: f64) -> f64 {
        let (v, clamped) = self.interp_checked(rho0, tau);
        if clamped {
            log::warn!("flow-rule query ({rho0}, {tau}) clamped to the table box");
        }
        v
    }

    fn cells_overlapping(axis: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = axis.len();
        if n < 2 {
            return 0..0;
        }
        let a = axis.partition_point(|&x| x <= lo).saturating_sub(1).min(n - 2);
        let b = axis.partition_point(|&x| x < hi).clamp(a + 1, n - 1);
        a..b
    }

    /// Bound on |∂f/∂ρ| over the box (exact for the bilinear interpolant).
    pub fn lipschitz_rho(&self, rho: (f64, f64), tau: (f64, f64)) -> f64 {
        let mut m: f64 = 0.0;
        for r in Self::cells_overlapping(&self.rho_axis, rho.0, rho.1) {
            let dr = self.rho_axis[r + 1] - self.rho_axis[r];
            let cols = Self::cells_overlapping(&self.tau_axis, tau.0, tau.1);
            let cols = if self.tau_axis.len() < 2 { 0..1 } else { cols.start..cols.end + 1 };
            for c in cols {
                m = m.max(((self.get(r + 1, c) - self.get(r, c)) / dr).abs());
            }
        }
        m
    }

    /// Bound on ∂f/∂τ over the box.
    pub fn lipschitz_tau(&self, rho: (f64, f64), tau: (f64, f64)) -> f64 {
        let mut m: f64 = 0.0;
        for c in Self::cells_overlapping(&self.tau_axis, tau.0, tau.1) {
            let dt = self.tau_axis[c + 1] - self.tau_axis[c];
            let rows = Self::cells_overlapping(&self.rho_axis, rho.0, rho.1);
            let rows = if self.rho_axis.len() < 2 { 0..1 } else { rows.start..rows.end + 1 };
            for r in rows {
                m = m.max(((self.get(r, c + 1) - self.get(r, c)) / dt).abs());
            }
        }
        m
    }

    /// Canonical data file: `rho,tau,f`, one row per cell.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rho,tau,f")?;
        for (r, rho) in self.rho_axis.iter().enumerate() {
            for (c, tau) in self.tau_axis.iter().enumerate() {
                writeln!(w, "{rho},{tau},{}", self.get(r, c))?;
            }
        }
        Ok(())
    }

    /// Sidecar `key=value` metadata.
    pub fn write_meta<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.meta;
        let join = |v: &[String]| v.join(",");
        writeln!(w, "dt={}", m.dt)?;
        writeln!(w, "T={}", m.total_time)?;
        writeln!(w, "burn_in={}", m.burn_in)?;
        writeln!(w, "A={}", m.amplitude)?;
        writeln!(w, "l={}", m.cell_length)?;
        writeln!(w, "lambda_p={}", m.obstacle_period)?;
        writeln!(w, "mu_bar={}", m.mu_bar)?;
        writeln!(w, "B={}", m.drag)?;
        writeln!(
            w,
            "N_list={}",
            join(&m.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>())
        )?;
        writeln!(
            w,
            "tau_list={}",
            join(&self.tau_axis.iter().map(|t| t.to_string()).collect::<Vec<_>>())
        )?;
        writeln!(w, "f_tol={}", m.f_tol)?;
        writeln!(w, "noise_floor={}", m.noise_floor)?;
        writeln!(w, "code_version={}", m.code_version)?;
        let mut failed = String::new();
        for (k, f) in self.failed.iter().enumerate() {
            if k > 0 {
                failed.push(';');
            }
            let _ = write!(failed, "{}@{}", f.n, f.tau);
        }
        writeln!(w, "failed={failed}")?;
        Ok(())
    }

    /// Plot matrix: first row the stresses, then one row per density.
    /// With `sentinel`, cells where f ≤ f_tol are replaced by it (display
    /// only; never written to the data file).
    pub fn write_matrix<W: Write>(&self, mut w: W, sentinel: Option<f64>) -> Result<()> {
        let head: Vec<String> = self.tau_axis.iter().map(|t| t.to_string()).collect();
        writeln!(w, "rho\\tau,{}", head.join(","))?;
        for (r, rho) in self.rho_axis.iter().enumerate() {
            let cells: Vec<String> = self
                .row(r)
                .iter()
                .map(|&f| match sentinel {
                    Some(s) if f.abs() <= self.meta.f_tol => s.to_string(),
                    _ => f.to_string(),
                })
                .collect();
            writeln!(w, "{rho},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Read back a table written by [`write_csv`](Self::write_csv) and
    /// [`write_meta`](Self::write_meta).
    pub fn read<R1: BufRead, R2: BufRead>(csv: R1, meta: R2) -> Result<Self> {
        let kv = read_key_values(meta)?;
        let get = |k: &str| -> Result<&String> {
            kv.get(k)
                .ok_or_else(|| Error::Parse(format!("metadata key `{k}` missing")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("metadata `{k}`: {e}")))
        };
        let n_list = get("N_list")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("N_list: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let meta = TableMeta {
            dt: num("dt")?,
            total_time: num("T")?,
            burn_in: num("burn_in")?,
            amplitude: num("A")?,
            cell_length: num("l")?,
            obstacle_period: num("lambda_p")?,
            mu_bar: num("mu_bar")?,
            drag: num("B")?,
            n_list,
            f_tol: num("f_tol")?,
            noise_floor: num("noise_floor")?,
            code_version: get("code_version")?.clone(),
        };

        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (k, line) in csv.lines().enumerate() {
            let line = line?;
            if k == 0 {
                if line.trim() != "rho,tau,f" {
                    return Err(Error::Parse(format!("unexpected header `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", k + 1)));
            }
            let p = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))
            };
            rows.push((p(parts[0])?, p(parts[1])?, p(parts[2])?));
        }
        let mut rho_axis: Vec<f64> = Vec::new();
        let mut tau_axis: Vec<f64> = Vec::new();
        for &(r, t, _) in &rows {
            if !rho_axis.contains(&r) {
                rho_axis.push(r);
            }
            if !tau_axis.contains(&t) {
                tau_axis.push(t);
            }
        }
        if rows.len() != rho_axis.len() * tau_axis.len() {
            return Err(Error::Parse("table is not a full rectangular grid".into()));
        }
        let f_values = rows.iter().map(|r| r.2).collect();
        let mut table = FlowRuleTable::from_parts(rho_axis, tau_axis, f_values, meta)?;
        if let Some(failed) = kv.get("failed") {
            for item in failed.split(';').filter(|s| !s.is_empty()) {
                let (n, tau) = item
                    .split_once('@')
                    .ok_or_else(|| Error::Parse(format!("bad failed cell `{item}`")))?;
                table.failed.push(FailedCell {
                    n: n.parse().map_err(|_| Error::Parse(format!("bad N `{n}`")))?,
                    tau: tau.parse().map_err(|_| Error::Parse(format!("bad tau `{tau}`")))?,
                    reason: "failed in a previous run".into(),
                });
            }
        }
        Ok(table)
    }
}

/// Parse `key=value` lines; `#` starts a comment.
pub fn read_key_values<R: BufRead>(r: R) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", k + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Fill a table cell by cell. Cells at τ = 0 are set to 0 without
/// simulating; failed cells are recorded, not interpolated.
pub fn sweep(n_list: &[usize], tau_list: &[f64], setup: &SweepSetup, exec: Execution) -> Result<FlowRuleTable> {
    sweep_resume(n_list, tau_list, setup, exec, None)
}

/// Like [`sweep`], reusing every finite cell of `previous` whose protocol
/// matches; only failed or missing cells are simulated.
pub fn sweep_resume(
    n_list: &[usize],
    tau_list: &[f64],
    setup: &SweepSetup,
    exec: Execution,
    previous: Option<&FlowRuleTable>,
) -> Result<FlowRuleTable> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::param("N_list", "must be nonempty, ascending and >= 1"));
    }
    check_axis("tau_list", tau_list)?;
    if tau_list[0] < 0.0 {
        return Err(Error::param("tau_list", "sweeps cover tau >= 0; use extend_odd"));
    }
    let meta = TableMeta::from_setup(setup, n_list);
    let previous = previous.filter(|p| p.meta.same_protocol(&meta));
    let cached = |n: usize, tau: f64| -> Option<f64> {
        let p = previous?;
        let rho = n as f64 / setup.cell_length;
        let r = p.rho_axis.iter().position(|&x| x == rho)?;
        let c = p.tau_axis.iter().position(|&x| x == tau)?;
        Some(p.get(r, c)).filter(|f| f.is_finite())
    };

    let cells: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| tau_list.iter().map(move |&t| (n, t)))
        .collect();
    let results = exec.map(&cells, |&(n, tau)| {
        if tau == 0.0 {
            return Ok(0.0);
        }
        if let Some(f) = cached(n, tau) {
            return Ok(f);
        }
        f_measure(n, tau, setup)
    });

    let mut f_values = Vec::with_capacity(cells.len());
    let mut failed = Vec::new();
    for (&(n, tau), res) in cells.iter().zip(results) {
        match res {
            Ok(f) => f_values.push(f),
            Err(e) => {
                log::warn!("{e}");
                failed.push(FailedCell {
                    n,
                    tau,
                    reason: e.to_string(),
                });
                f_values.push(f64::NAN);
            }
        }
    }
    let rho_axis = n_list.iter().map(|&n| n as f64 / setup.cell_length).collect();
    let mut table = FlowRuleTable::from_parts(rho_axis, tau_list.to_vec(), f_values, meta)?;
    table.failed = failed;
    Ok(table)
}

/// Mirror a τ ≥ 0 table to [−τ_max, τ_max] with f(ρ, −τ) = −f(ρ, τ).
/// Tables that already contain negative stresses are returned unchanged.
pub fn extend_odd(table: &FlowRuleTable) -> FlowRuleTable {
    if table.tau_axis[0] < 0.0 {
        return table.clone();
    }
    let m = table.tau_axis.len();
    let mirrored: Vec<usize> = (0..m).rev().filter(|&c| table.tau_axis[c] > 0.0).collect();
    let mut tau_axis: Vec<f64> = mirrored.iter().map(|&c| -table.tau_axis[c]).collect();
    tau_axis.extend_from_slice(&table.tau_axis);
    let mut f_values = Vec::with_capacity(table.rho_axis.len() * tau_axis.len());
    for r in 0..table.rho_axis.len() {
        let row = table.row(r);
        f_values.extend(mirrored.iter().map(|&c| -row[c]));
        f_values.extend_from_slice(row);
    }
    FlowRuleTable {
        rho_axis: table.rho_axis.clone(),
        tau_axis,
        f_values,
        failed: table.failed.clone(),
        meta: table.meta.clone(),
    }
}

/// The flow rule handed to the macroscopic solver.
#[derive(Debug, Clone)]
pub enum FlowRule {
    CaseA { mu_bar: f64 },
    Table(FlowRuleTable),
}

impl FlowRule {
    /// f(ρ, τ) and whether the query had to be clamped.
    #[inline]
    pub fn eval(&self, rho: f64, tau: f64) -> (f64, bool) {
        match self {
            FlowRule::CaseA { mu_bar } => (f_case_a(rho, tau, *mu_bar), false),
            FlowRule::Table(t) => t.interp_checked(rho, tau),
        }
    }

    pub fn lipschitz_rho(&self, rho: (f64, f64), tau: (f64, f64)) -> f64 {
        match self {
            FlowRule::CaseA { mu_bar } => tau.0.abs().max(tau.1.abs()) / mu_bar,
            FlowRule::Table(t) => t.lipschitz_rho(rho, tau),
        }
    }

    pub fn lipschitz_tau(&self, rho: (f64, f64), tau: (f64, f64)) -> f64 {
        match self {
            FlowRule::CaseA { mu_bar } => rho.0.abs().max(rho.1.abs()) / mu_bar,
            FlowRule::Table(t) => t.lipschitz_tau(rho, tau),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TableMeta {
        TableMeta::from_setup(&SweepSetup::protocol(), &[1, 2])
    }

    fn toy() -> FlowRuleTable {
        // rows rho = 0.1, 0.2; tau = 0, 1, 2, 3
        FlowRuleTable::from_parts(
            vec![0.1, 0.2],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.0, 0.2, 0.4, 0.0, 0.1, 0.3, 0.6],
            meta(),
        )
        .unwrap()
    }

    #[test]
    fn case_a_examples() {
        assert!((f_case_a(0.1, 2.0, 1.0) - 0.2).abs() < 1e-16);
        assert_eq!(f_case_a(0.7, 0.0, 1.0), 0.0);
        assert_eq!(f_case_a(0.0, 5.0, 1.0), 0.0);
    }

    #[test]
    fn measure_free_dislocation() {
        let mut s = SweepSetup::protocol();
        s.amplitude = 0.0;
        s.sim.total_time = 10.0;
        let f = f_measure(1, 2.0, &s).unwrap();
        assert!((f - 0.2).abs() < 1e-12);
        assert!((f_measure(1, -2.0, &s).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn measure_pinned_single_dislocation() {
        let s = SweepSetup::protocol();
        assert_eq!(f_measure(1, 2.0, &s).unwrap(), 0.0);
    }

    #[test]
    fn measure_reports_bad_cell() {
        let s = SweepSetup::protocol();
        let err = f_measure(0, 1.0, &s).unwrap_err();
        assert!(matches!(err, Error::Cell { n: 0, .. }));
    }

    #[test]
    fn single_cell_sweep() {
        let t = sweep(&[1], &[0.0], &SweepSetup::protocol(), Execution::Sequential).unwrap();
        assert_eq!(t.get(0, 0), 0.0);
        assert!(sweep(&[2, 1], &[0.0], &SweepSetup::protocol(), Execution::Sequential).is_err());
        assert!(sweep(&[1], &[-1.0, 0.0], &SweepSetup::protocol(), Execution::Sequential).is_err());
    }

    #[test]
    fn odd_extension() {
        let t = toy();
        let e = extend_odd(&t);
        assert_eq!(e.tau_axis, vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(e.get(0, 0), -0.4);
        assert_eq!(e.get(1, 6), 0.6);
        assert_eq!(e.get(1, 3), 0.0);
        assert_eq!(extend_odd(&e), e);
        assert!(e.audit().passed());
    }

    #[test]
    fn threshold_refinement() {
        let t = toy();
        // row 0: zero up to tau = 1, then 0.2 at tau = 2
        let tc = t.threshold(0.1, 1e-6).unwrap();
        assert!((tc - (1.0 + 1e-6 / 0.2)).abs() < 1e-12);
        // row 1: positive at the first positive stress
        assert_eq!(t.threshold(0.2, 1e-6).unwrap(), 0.0);
        assert!(t.threshold(0.3, 1e-6).is_err());
        let flat = FlowRuleTable::from_parts(vec![1.0], vec![0.0, 1.0], vec![0.0, 0.0], meta()).unwrap();
        assert_eq!(flat.threshold(1.0, 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn interpolation_rules() {
        let t = toy();
        assert_eq!(t.interp(0.2, 2.0), 0.3);
        assert!((t.interp(0.2, 2.5) - 0.45).abs() < 1e-15);
        assert!((t.interp(0.15, 2.0) - 0.25).abs() < 1e-15);
        let (v, clamped) = t.interp_checked(0.5, 10.0);
        assert!(clamped);
        assert_eq!(v, 0.6);
        let (_, clamped) = t.interp_checked(0.15, 1.5);
        assert!(!clamped);
    }

    #[test]
    fn lipschitz_bounds_dominate_finite_differences() {
        let t = extend_odd(&toy());
        let lr = t.lipschitz_rho((0.1, 0.2), (-3.0, 3.0));
        let lt = t.lipschitz_tau((0.1, 0.2), (-3.0, 3.0));
        assert!((lr - 2.0).abs() < 1e-12);
        assert!((lt - 0.3).abs() < 1e-12);
        // zero plateau
        assert_eq!(t.lipschitz_rho((0.1, 0.1), (-0.5, 0.5)), 1.0);
        let pinned = FlowRuleTable::from_parts(
            vec![0.1, 0.2, 0.3],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            meta(),
        )
        .unwrap();
        let e = extend_odd(&pinned);
        assert_eq!(e.lipschitz_rho((0.12, 0.28), (-1.5, 1.5)), 0.0);
        assert_eq!(e.lipschitz_tau((0.12, 0.28), (-1.5, 1.5)), 0.0);
    }

    #[test]
    fn audit_catches_decrease() {
        let mut t = toy();
        t.f_values[3] = 0.1;
        let a = t.audit();
        assert_eq!(a.monotone_violations.len(), 1);
        assert!(!a.passed());
    }

    #[test]
    fn csv_round_trip_and_matrix() {
        let mut t = toy();
        t.failed.push(FailedCell {
            n: 2,
            tau: 3.0,
            reason: "x".into(),
        });
        let mut csv = Vec::new();
        let mut meta = Vec::new();
        t.write_csv(&mut csv).unwrap();
        t.write_meta(&mut meta).unwrap();
        let back = FlowRuleTable::read(&csv[..], &meta[..]).unwrap();
        assert_eq!(back.rho_axis, t.rho_axis);
        assert_eq!(back.tau_axis, t.tau_axis);
        assert_eq!(back.f_values, t.f_values);
        assert_eq!(back.failed.len(), 1);
        assert_eq!(back.meta.n_list, t.meta.n_list);

        let mut m = Vec::new();
        t.write_matrix(&mut m, Some(-1.0)).unwrap();
        let text = String::from_utf8(m).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0.1,-1,-1,0.2"));
        assert!(!String::from_utf8(csv).unwrap().contains("-1"));
    }
}
