mod common;

use std::f64::consts::PI;

use dhomog_core::error::Error;
use dhomog_core::exec::Execution;
use dhomog_core::flowrule::{FlowRule, FlowRuleTable, TableMeta};
use dhomog_core::macro1d::*;
use dhomog_core::strain::StrainField1D;

use common::{ordered_pair, pv_quadrature};

fn meta() -> TableMeta {
    TableMeta {
        dt: 0.01,
        total_time: 1.0,
        burn_in: 0.5,
        amplitude: 3.0,
        cell_length: 10.0,
        obstacle_period: 1.0,
        mu_bar: 1.0,
        drag: 1.0,
        n_list: vec![],
        f_tol: 1e-6,
        noise_floor: 0.0,
        code_version: "test".into(),
    }
}

/// f = ρ·sign(τ)·max(|τ| − τ_c, 0) with τ_c = 1.5 − 0.3ρ, tabulated.
fn threshold_table() -> FlowRuleTable {
    let rho: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
    let tau: Vec<f64> = (-36..=36).map(|k| k as f64 * 0.25).collect();
    let mut f = Vec::new();
    for &r in &rho {
        for &t in &tau {
            let tc = 1.5 - 0.3 * r;
            f.push(r * t.signum() * (t.abs() - tc).max(0.0));
        }
    }
    FlowRuleTable::from_parts(rho, tau, f, meta()).unwrap()
}

#[test]
fn quadrature_oracle_converges() {
    let u = |x: f64| x.cos();
    for &x in &[0.3, 1.7, 4.0] {
        let coarse = pv_quadrature(&u, x, 128);
        let fine = pv_quadrature(&u, x, 1024);
        // the principal value of cos against the periodized kernel is π sin
        assert!((fine - PI * x.sin()).abs() < 1e-10);
        assert!((fine - coarse).abs() < 1e-8);
    }
}

#[test]
fn spectral_stress_matches_quadrature_at_512_nodes() {
    let n = 512;
    let mu_bar = 1.3;
    let cases: Vec<(Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>)> = vec![
        (Box::new(|x: f64| x.sin()), Box::new(|x: f64| x.cos())),
        (
            Box::new(|x: f64| (x.sin()).exp() * 0.2),
            Box::new(|x: f64| 0.2 * x.cos() * x.sin().exp()),
        ),
        (
            Box::new(|x: f64| 0.3 * (3.0 * x).cos() - 0.1 * (2.0 * x).sin()),
            Box::new(|x: f64| -0.9 * (3.0 * x).sin() - 0.2 * (2.0 * x).cos()),
        ),
    ];
    for (gamma, dgamma) in &cases {
        let field = StrainField1D::periodic_from_fn(n, 0.0, 2.0 * PI, 0.0, gamma).unwrap();
        let tau = tau_sc_1d(&field, mu_bar).unwrap();
        let mut err: f64 = 0.0;
        for (k, t) in tau.iter().enumerate() {
            let oracle = -mu_bar * pv_quadrature(dgamma.as_ref(), field.node(k), 2048);
            err = err.max((t - oracle).abs());
        }
        assert!(err < 1e-6, "sup error {err}");
        let mean = tau.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-14);
    }
}

#[test]
fn winding_does_not_change_the_stress() {
    let a = StrainField1D::periodic_from_fn(128, 0.0, 1.0, 0.0, |x| 0.1 * (2.0 * PI * x).sin()).unwrap();
    let b = StrainField1D::periodic_from_fn(128, 0.0, 1.0, -3.0, |x| -3.0 * x + 0.1 * (2.0 * PI * x).sin()).unwrap();
    let ta = tau_sc_1d(&a, 1.0).unwrap();
    let tb = tau_sc_1d(&b, 1.0).unwrap();
    for (x, y) in ta.iter().zip(&tb) {
        assert!((x - y).abs() < 1e-12);
    }
}

fn run_pair(rule: FlowRule, tau_ext: f64) {
    let n = 256;
    let steps = 1000;
    let (lo, hi) = ordered_pair(n);
    // one θ and one dt for both runs, with room for the state box to grow
    let theta = 1.5 * rule.lipschitz_rho((0.0, 2.0), (tau_ext - 3.0, tau_ext + 3.0)) + 1e-3;
    let kappa = rule.lipschitz_tau((0.0, 2.0), (tau_ext - 3.0, tau_ext + 3.0));
    let dt = 0.5 * lo.dx() / (theta + kappa * PI * PI / 2.0);
    let mut a = lo.clone();
    let mut b = hi.clone();
    let mut violations = 0;
    for _ in 0..steps {
        a = hj_step(&a, &rule, tau_ext, 1.0, dt, theta).unwrap().0;
        b = hj_step(&b, &rule, tau_ext, 1.0, dt, theta).unwrap().0;
        violations += a.values.iter().zip(&b.values).filter(|(x, y)| x > y).count();
    }
    assert_eq!(violations, 0);
    assert_eq!(a.mean_density(), lo.mean_density());
    assert_eq!(b.mean_density(), hi.mean_density());
    // the discrete density, not just the stored winding, keeps its mean
    let mean_rho = a.centered_density().iter().sum::<f64>() / n as f64;
    assert!((mean_rho - 1.0).abs() < 1e-12, "{mean_rho}");
    // and the data actually moved
    assert!(a.values.iter().zip(&lo.values).any(|(x, y)| (x - y).abs() > 1e-3));
}

#[test]
fn comparison_principle_case_a() {
    run_pair(FlowRule::CaseA { mu_bar: 1.0 }, 1.0);
}

#[test]
fn comparison_principle_table() {
    run_pair(FlowRule::Table(threshold_table()), 2.5);
}

#[test]
fn pinned_table_leaves_strain_unchanged() {
    let table = threshold_table();
    // uniform ρ = 1 has τ_c = 1.2; load below it
    let field = StrainField1D::periodic_from_fn(128, 0.0, 1.0, -1.0, |x| -x).unwrap();
    let tc = table.threshold(1.0, 1e-6).unwrap();
    assert!(tc > 1.0);
    let problem = MacroProblem::new(field.clone(), FlowRule::Table(table), 0.9 * tc, 1.0, 5.0);
    let sol = solve_macro(&problem, Execution::Sequential).unwrap();
    assert_eq!(sol.last().field.values, field.values);
    assert_eq!(sol.theta_max, 0.0);
}

#[test]
fn case_a_time_integration() {
    let rho = 0.5;
    let field = StrainField1D::periodic_from_fn(64, 0.0, 2.0, -2.0 * rho, |x| -rho * x).unwrap();
    let mut problem = MacroProblem::new(field.clone(), FlowRule::CaseA { mu_bar: 2.0 }, 3.0, 2.0, 0.7);
    problem.snapshot_times = vec![0.35];
    let sol = solve_macro(&problem, Execution::Sequential).unwrap();
    for snap in &sol.snapshots {
        for (a, b) in snap.field.values.iter().zip(&field.values) {
            assert!((a - b - snap.time * rho * 3.0 / 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn parallel_and_sequential_solves_agree() {
    let (lo, _) = ordered_pair(128);
    let problem = MacroProblem::new(lo, FlowRule::CaseA { mu_bar: 1.0 }, 0.5, 1.0, 0.2);
    let a = solve_macro(&problem, Execution::Sequential).unwrap();
    let b = solve_macro(&problem, Execution::Parallel).unwrap();
    assert_eq!(a.last().field, b.last().field);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn fixed_step_too_large_aborts_with_step_index() {
    let (lo, _) = ordered_pair(128);
    let mut problem = MacroProblem::new(lo, FlowRule::CaseA { mu_bar: 1.0 }, 1.0, 1.0, 1.0);
    problem.time_step = TimeStep::Fixed(0.1);
    match solve_macro(&problem, Execution::Sequential) {
        Err(Error::Stability { step, .. }) => assert_eq!(step, 0),
        other => panic!("expected a stability abort, got {other:?}"),
    }
}

#[test]
fn rejects_negative_initial_density() {
    let field = StrainField1D::periodic_from_fn(64, 0.0, 1.0, 0.0, |x| (2.0 * PI * x).sin()).unwrap();
    let problem = MacroProblem::new(field, FlowRule::CaseA { mu_bar: 1.0 }, 1.0, 1.0, 1.0);
    assert!(matches!(
        solve_macro(&problem, Execution::Sequential),
        Err(Error::NegativeDensity { .. })
    ));
}
