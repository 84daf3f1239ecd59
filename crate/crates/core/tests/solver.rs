use std::sync::Arc;

use sinhrobin_core::ansatz::{build_ansatz, Params};
use sinhrobin_core::asymptotics::find_theta0;
use sinhrobin_core::elliptic::{Field, RobinOperator};
use sinhrobin_core::green::GreenSolver;
use sinhrobin_core::hamiltonian::{compute_masses, ConcentrationConfig, MassRule, SpinConfig};
use sinhrobin_core::solver::*;
use sinhrobin_core::{Domain, Error, Grid, Point};

const LAMBDA: f64 = 10.0;

fn setup(nr: usize) -> (GreenSolver, ConcentrationConfig) {
    let grid = Arc::new(Grid::new(Domain::disk(1.0).unwrap(), nr, 2 * nr).unwrap());
    let g = GreenSolver::new(grid, LAMBDA).unwrap();
    let t = 1.0 - find_theta0().unwrap().theta0 / LAMBDA;
    let cfg = ConcentrationConfig::new(
        vec![Point::new(-t, 0.0), Point::new(t, 0.0)],
        SpinConfig::new(&[1, -1]).unwrap(),
        LAMBDA,
    )
    .unwrap();
    let cfg = compute_masses(&cfg, &g, MassRule::SpinProduct, 700.0).unwrap().0;
    (g, cfg)
}

fn seed(g: &GreenSolver, cfg: &ConcentrationConfig, eps: f64) -> Field {
    let p = Params::new(eps, LAMBDA, 1.0, 0.05, false).unwrap();
    build_ansatz(g, cfg, p).unwrap().grid_seed().unwrap()
}

#[test]
fn energy_stabilizes_under_refinement() {
    let f = |x: Point| (1.5 * x.x).sin() * (0.5 + x.y * x.y);
    let values: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&nr| {
            let grid = Arc::new(Grid::new(Domain::disk(1.0).unwrap(), nr, 2 * nr).unwrap());
            let op = RobinOperator::assemble(grid.clone(), 4.0).unwrap();
            energy(&op, 0.3, &Field::from_fn(&grid, f))
        })
        .collect();
    let rel = ((values[2] - values[1]) / values[2]).abs();
    assert!(rel < 1e-3, "{values:?}");
    assert!((values[2] - values[1]).abs() < (values[1] - values[0]).abs());
}

#[test]
fn disk_solve_is_sign_changing_and_symmetric() {
    let (g, cfg) = setup(48);
    let eps = 1e-3;
    let s = seed(&g, &cfg, eps);
    let out = newton_solve(g.operator(), eps, &s, &NewtonOptions::default()).unwrap();
    assert!(out.converged());
    assert!(out.iterations <= 15);
    let grid = g.grid();
    let tol = 1e-9 * out.seed_residual;
    for k in 0..grid.node_count() {
        let m = grid.mirror_index(k);
        assert!((out.solution[k] - out.solution[m]).abs() <= tol.max(1e-10), "node {k}");
    }
    let peaks = concentration_report(grid, &out.solution, &cfg).unwrap();
    assert_eq!(peaks.len(), 2);
    assert!(peaks[0].value > 0.0 && peaks[1].value < 0.0);
    let theta0 = find_theta0().unwrap().theta0;
    for p in &peaks {
        assert!(p.position.y.abs() < 1e-12);
        assert!((0.8..=1.25).contains(&(p.lambda_d / theta0)), "{}", p.lambda_d / theta0);
        assert!(p.cells <= 1.0);
    }
}

#[test]
fn negated_seed_gives_negated_solution() {
    let (g, cfg) = setup(48);
    let eps = 1e-3;
    let s = seed(&g, &cfg, eps);
    let a = newton_solve(g.operator(), eps, &s, &NewtonOptions::default()).unwrap();
    let b = newton_solve(g.operator(), eps, &s.scaled(-1.0), &NewtonOptions::default()).unwrap();
    let diff = (0..s.len()).map(|k| (a.solution[k] + b.solution[k]).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-8, "{diff}");
}

#[test]
fn continuation_recovers_a_failed_direct_solve() {
    let (g, cfg) = setup(32);
    let eps = 1e-3;
    let opts = NewtonOptions { max_iter: 8, ..Default::default() };
    // a far-off constant seed at the target ε, good seeds on the ladder rungs
    let seeds =
        |e: f64| Ok(if e == eps { Field::from_vec(vec![40.0; g.grid().node_count()]) } else { seed(&g, &cfg, e) });
    let direct = newton_solve(g.operator(), eps, &seeds(eps).unwrap(), &opts).unwrap();
    assert!(!direct.converged());
    let out = solve_with_continuation(g.operator(), eps, &seeds, &opts).unwrap();
    assert!(out.converged());
    assert!(!out.continuation.is_empty());
    assert!(residual(g.operator(), eps, &out.solution).sup_norm() <= out.residual * (1.0 + 1e-12));
    // the discrete problem has several concentrating branches that differ in
    // how the core mass is shared with neighbouring nodes, so compare the
    // peak structure rather than the fields
    let reference = newton_solve(g.operator(), eps, &seed(&g, &cfg, eps), &NewtonOptions::default()).unwrap();
    let pa = concentration_report(g.grid(), &reference.solution, &cfg).unwrap();
    let pb = concentration_report(g.grid(), &out.solution, &cfg).unwrap();
    assert_eq!(pa.iter().map(|p| p.node).collect::<Vec<_>>(), pb.iter().map(|p| p.node).collect::<Vec<_>>());
    assert!(pb[0].value > 0.0 && pb[1].value < 0.0);
}

#[test]
fn trivial_solution_has_no_peaks() {
    let (g, cfg) = setup(32);
    let zero = Field::zeros(g.grid().node_count());
    assert!(matches!(concentration_report(g.grid(), &zero, &cfg), Err(Error::Concentration(_))));
}

#[test]
fn sup_grows_as_eps_halves() {
    let (g, cfg) = setup(32);
    let sups: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&e| {
            let out = newton_solve(g.operator(), e, &seed(&g, &cfg, e), &NewtonOptions::default()).unwrap();
            assert!(out.converged());
            out.solution.sup_norm()
        })
        .collect();
    assert!(sups[0] < sups[1] && sups[1] < sups[2], "{sups:?}");
}

#[test]
fn bad_seeds_are_rejected() {
    let (g, _) = setup(32);
    let n = g.grid().node_count();
    let mut s = Field::zeros(n);
    s[3] = f64::NAN;
    assert!(newton_solve(g.operator(), 1e-3, &s, &NewtonOptions::default()).is_err());
    assert!(newton_solve(g.operator(), 1e-3, &Field::zeros(n - 1), &NewtonOptions::default()).is_err());
}
