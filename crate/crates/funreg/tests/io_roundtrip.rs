//! Writing then reading datasets and predictions loses nothing.

use proptest::prelude::*;

use funreg::io::{load_dataset, read_curves, write_dataset, write_predictions};
use funreg_core::pipeline::PredictionSet;
use funreg_core::{make_grid, FunctionalDataset, Interval, ObservationSeries, Schema};

fn series(domain: (f64, f64)) -> impl Strategy<Value = ObservationSeries> {
    let (lo, hi) = domain;
    // Endpoints are always present so pooled coverage checks pass.
    prop::collection::btree_set(1u32..10_000, 8..12).prop_flat_map(move |mut ticks| {
        ticks.extend([0, 10_000]);
        let times: Vec<f64> = ticks.iter().map(|&k| lo + (hi - lo) * f64::from(k) / 10_000.0).collect();
        let n = times.len();
        prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, n)
            .prop_map(move |values| ObservationSeries::new(times.clone(), values).unwrap())
    })
}

fn ident() -> impl Strategy<Value = String> {
    // Includes separators and quotes so CSV quoting is exercised.
    "[a-z0-9,\" ]{1,6}"
}

fn dataset() -> impl Strategy<Value = FunctionalDataset> {
    (2usize..5, 1usize..3, 1usize..3).prop_flat_map(|(n, r, d)| {
        let ids = prop::collection::btree_set(ident(), n);
        let cov = prop::collection::vec(prop::collection::vec(series((0.0, 1.0)), r), n);
        let resp = prop::collection::vec(prop::collection::vec(series((-2.0, 3.5)), d), n);
        (ids, cov, resp).prop_map(move |(ids, cov, resp)| {
            let schema = Schema {
                covariates: (0..r).map(|c| format!("x,{c}")).collect(),
                responses: (0..d).map(|c| format!("y\"{c}")).collect(),
                covariate_domain: Interval::new(0.0, 1.0).unwrap(),
                response_domain: Interval::new(-2.0, 3.5).unwrap(),
            };
            FunctionalDataset::new(&schema, ids.into_iter().collect(), cov, Some(resp)).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_round_trips_exactly(data in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&path, &data).unwrap();
        let back = load_dataset(&path, &data.schema()).unwrap();
        prop_assert_eq!(&back, &data);
        // Writing again gives the same bytes.
        let again = dir.path().join("e.csv");
        write_dataset(&again, &back).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn predictions_round_trip_through_curves(
        n in 1usize..4,
        d in 1usize..3,
        g in 2usize..9,
        seed in prop::collection::vec(prop::num::f64::NORMAL, 1..64),
    ) {
        let grid = make_grid(Interval::new(0.0, 2.0).unwrap(), g).unwrap();
        let values: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..d).map(|c| (0..g).map(|j| seed[(i * 7 + c * 3 + j) % seed.len()]).collect()).collect())
            .collect();
        let pred = PredictionSet {
            grid: grid.clone(),
            channels: (0..d).map(|c| format!("y{c}")).collect(),
            subject_ids: (0..n).map(|i| format!("s{i}")).collect(),
            values,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_predictions(&path, &pred).unwrap();
        let curves = read_curves(&path).unwrap();
        prop_assert_eq!(curves, pred.to_curves().unwrap());
    }
}

#[test]
fn dataset_file_as_truth_keeps_only_responses() {
    let schema = Schema {
        covariates: vec!["x1".into()],
        responses: vec!["y1".into()],
        covariate_domain: Interval::new(0.0, 1.0).unwrap(),
        response_domain: Interval::new(0.0, 1.0).unwrap(),
    };
    let times: Vec<f64> = (0..=10).map(|k| f64::from(k) / 10.0).collect();
    let s = |v: f64| ObservationSeries::new(times.clone(), vec![v; 11]).unwrap();
    let data = FunctionalDataset::new(
        &schema,
        vec!["a".into(), "b".into()],
        vec![vec![s(1.0)], vec![s(1.5)]],
        Some(vec![vec![s(2.0)], vec![s(-3.0)]]),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_dataset(&path, &data).unwrap();
    let curves = read_curves(&path).unwrap();
    assert_eq!(curves, data.response_curves().unwrap());
}
