use std::sync::Arc;

use proptest::prelude::*;
use sinhrobin_core::asymptotics::{find_theta0, h_profile};
use sinhrobin_core::elliptic::{Field, RobinOperator};
use sinhrobin_core::solver::{reduced_energy_prediction, residual};
use sinhrobin_core::{Domain, Grid, Point};

fn operator() -> RobinOperator {
    let grid = Arc::new(Grid::new(Domain::disk(1.0).unwrap(), 12, 24).unwrap());
    RobinOperator::assemble(grid, 5.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta0_is_the_global_minimum(theta in 1e-3f64..1e3) {
        let t = find_theta0().unwrap();
        prop_assert!(h_profile(theta).unwrap() >= t.h - 1e-12);
    }

    #[test]
    fn residual_is_odd(values in prop::collection::vec(-20.0f64..20.0, 12 * 24 + 1), eps in 1e-5f64..0.5) {
        let op = operator();
        let n = op.grid().node_count();
        let u = Field::from_vec(values[..n].to_vec());
        let a = residual(&op, eps, &u);
        let b = residual(&op, eps, &u.scaled(-1.0));
        for k in 0..n {
            prop_assert!((a[k] + b[k]).abs() <= 1e-12 * a[k].abs().max(1.0));
        }
    }

    #[test]
    fn prediction_is_affine_in_log_eps(m in 1usize..5, phi in -50.0f64..50.0, e1 in -12.0f64..-1.0, e2 in -12.0f64..-1.0) {
        let (p1, p2) = (reduced_energy_prediction(m, e1.exp(), phi), reduced_energy_prediction(m, e2.exp(), phi));
        let slope = -16.0 * std::f64::consts::PI * m as f64;
        prop_assert!((p1 - p2 - slope * (e1 - e2)).abs() <= 1e-9 * p1.abs().max(1.0));
    }

    #[test]
    fn mirror_is_an_involution(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let p = Point::new(x, y);
        prop_assert_eq!(p.mirror().mirror(), p);
        prop_assert_eq!(p.mirror().norm(), p.norm());
    }
}
