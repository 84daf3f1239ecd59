use proptest::prelude::*;
use sinhrobin::commands::parallel_map;
use sinhrobin::output::num;
use sinhrobin::RunConfig;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn table_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn config_survives_toml_round_trip(
        nr in 8usize..300,
        lambda in prop::collection::vec(2.0f64..200.0, 1..4),
        seed in 0..=i64::MAX as u64,
        workers in 1usize..9,
        sigma in 0.01f64..0.99,
    ) {
        let mut cfg = RunConfig::default();
        cfg.grid.n_radial = nr;
        cfg.lambda = lambda;
        cfg.eps = vec![1e-6];
        cfg.seed = seed;
        cfg.workers = workers;
        cfg.sigma = sigma;
        cfg.regime.allow_out_of_regime = true;
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn parallel_map_keeps_input_order(items in prop::collection::vec(any::<i32>(), 0..40), workers in 1usize..6) {
        let out = parallel_map(workers, &items, |&x| x as i64 * 3 - 1);
        let expected: Vec<i64> = items.iter().map(|&x| x as i64 * 3 - 1).collect();
        prop_assert_eq!(out, expected);
    }
}
