use std::sync::Arc;

use sinhrobin_core::green::{DiskSeries, GreenProvider, GreenSolver};
use sinhrobin_core::{Domain, Grid, Point};

fn disk_solver(nr: usize, na: usize, lambda: f64) -> GreenSolver {
    let grid = Arc::new(Grid::new(Domain::disk(1.0).unwrap(), nr, na).unwrap());
    GreenSolver::new(grid, lambda).unwrap()
}

#[test]
fn centre_source_is_constant() {
    let s = disk_solver(64, 128, 10.0);
    let gf = s.solve(Point::new(0.0, 0.0)).unwrap();
    let h = gf.regular_part();
    for &v in h.values() {
        assert!((v - 0.4).abs() < 1e-5, "{v}");
    }
    assert!((gf.robin().unwrap() - 0.4).abs() < 1e-5);
}

#[test]
fn matches_series_off_centre() {
    for &(nr, lam) in &[(64usize, 10.0), (128, 20.0)] {
        let s = disk_solver(nr, 2 * nr, lam);
        let series = DiskSeries::new(1.0, lam).unwrap();
        let mut worst: f64 = 0.0;
        for &(r, th) in
            &[(0.5, 0.3), (0.9, 1.0), (1.0 - 0.3 / lam, 2.0), (1.0 - 1.0 / lam, -0.4), (1.0 - 0.05 / lam, 0.0)]
        {
            let xi = Point::new(r * f64::cos(th), r * f64::sin(th));
            let gf = s.solve(xi).unwrap();
            let e = (gf.robin().unwrap() - series.regular(xi, xi).unwrap()).abs();
            worst = worst.max(e);
            for x in [Point::new(0.1, -0.2), Point::new(-0.7, 0.5), Point::new(0.95, 0.1)] {
                let e = (gf.regular(x).unwrap() - series.regular(x, xi).unwrap()).abs();
                worst = worst.max(e);
            }
        }
        println!("nr={nr} lam={lam} worst={worst:e}");
        assert!(worst < 1e-3, "{worst}");
    }
}

#[test]
fn provider_tables_agree() {
    let s = disk_solver(96, 192, 15.0);
    let series = DiskSeries::new(1.0, 15.0).unwrap();
    let pts = [Point::new(0.9, 0.0), Point::new(-0.92, 0.05), Point::new(0.2, 0.5)];
    let a = s.table(&pts).unwrap();
    let b = series.table(&pts).unwrap();
    for i in 0..3 {
        assert!((a.robin[i] - b.robin[i]).abs() < 1e-3);
        for j in 0..3 {
            assert!((a.green[i][j] - b.green[i][j]).abs() < 1e-3);
        }
    }
}
