mod common;

use common::{forest_of, leaf, split};
use forestcast::effects::{default_grid, partial_curve, partial_surface};
use forestcast::evalgrid::{holdout_grid, insample_grid, GridReport, GridSpec, HoldoutSplit, SplitBy};
use forestcast::forest::{fit_forest, ForestConfig};
use forestcast::panel::{build_design, DesignMatrix};
use forestcast::synthetic::SyntheticPanel;

#[test]
fn constant_model_gives_flat_curves() {
    let model = forest_of(vec![*leaf(2.5), *leaf(2.5)], 3);
    let curve = partial_curve(&model, 1, &[-5.0, 0.0, 0.3, 5.0], &[]).unwrap();
    assert!(curve.responses.iter().all(|&v| v == 2.5));
    assert_eq!(curve.outside_hull, vec![true, false, false, true]);
}

#[test]
fn additive_forest_surface_is_outer_sum() {
    // One tree per feature, so the forest is additive in x0 and x1.
    let t0 = split(0, 0.0, leaf(1.0), split(0, 0.5, leaf(3.0), leaf(6.0)));
    let t1 = split(1, -0.3, leaf(-2.0), leaf(4.0));
    let model = forest_of(vec![*t0, *t1], 3);
    let g0 = default_grid(&model, 0, 7).unwrap();
    let g1 = default_grid(&model, 1, 5).unwrap();
    let c0 = partial_curve(&model, 0, &g0, &[]).unwrap();
    let c1 = partial_curve(&model, 1, &g1, &[]).unwrap();
    let surface = partial_surface(&model, 0, 1, &g0, &g1).unwrap();
    let at_means = model.predict(&model.feature_means).unwrap();
    assert_eq!(surface.shape(), vec![7, 5]);
    for i in 0..7 {
        for j in 0..5 {
            let want = c0.responses[i] + c1.responses[j] - at_means;
            assert!((surface.at(i, j) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn surface_rows_match_overridden_curves() {
    let design = common::random_design(&mut common::rng(8), 100, 4);
    let model = fit_forest(&design, &ForestConfig::new(5, 20, 1)).unwrap();
    let gi = default_grid(&model, 0, 6).unwrap();
    let gj = default_grid(&model, 2, 4).unwrap();
    let surface = partial_surface(&model, 0, 2, &gi, &gj).unwrap();
    for (i, &a) in gi.iter().enumerate() {
        let curve = partial_curve(&model, 2, &gj, &[(0, a)]).unwrap();
        for j in 0..gj.len() {
            assert_eq!(surface.at(i, j), curve.responses[j]);
        }
    }
}

fn synthetic() -> DesignMatrix {
    build_design(&SyntheticPanel::default().generate().unwrap(), false).unwrap()
}

fn small_spec() -> GridSpec {
    GridSpec {
        leaf_caps: vec![10],
        tree_counts: vec![20],
        ..Default::default()
    }
}

fn split_2014() -> HoldoutSplit {
    HoldoutSplit {
        train_end_year: 2014,
        test_first_year: 2015,
        test_last_year: 2019,
        split_by: SplitBy::PredictorYear,
    }
}

#[test]
fn holdout_never_sees_test_rows() {
    let design = synthetic();
    let split = split_2014();
    let (train, _) = split.apply(&design).unwrap();
    assert!(train.rows().iter().all(|r| r.year <= 2014));

    // Scramble everything after the training window; training fits must not move.
    let rows = design
        .rows()
        .iter()
        .cloned()
        .map(|mut r| {
            if r.year > 2014 {
                r.target = -r.target * 3.0;
                r.features.iter_mut().for_each(|v| *v += 100.0);
            }
            r
        })
        .collect();
    let scrambled = DesignMatrix::new(design.feature_names().to_vec(), rows, false).unwrap();
    let (train2, _) = split.apply(&scrambled).unwrap();
    assert_eq!(train, train2);
    let cfg = ForestConfig::new(10, 10, 5);
    assert_eq!(fit_forest(&train, &cfg).unwrap(), fit_forest(&train2, &cfg).unwrap());

    let a = holdout_grid(&design, &split, &small_spec()).unwrap();
    let b = holdout_grid(&scrambled, &split, &small_spec()).unwrap();
    assert_ne!(a.cells[0].rf, b.cells[0].rf);
}

#[test]
fn target_year_split_shifts_by_one() {
    let design = synthetic();
    let split = HoldoutSplit {
        split_by: SplitBy::TargetYear,
        ..split_2014()
    };
    let (train, test) = split.apply(&design).unwrap();
    assert!(train.rows().iter().all(|r| r.year < 2014));
    assert!(test.rows().iter().all(|r| (2015..=2019).contains(&(r.year + 1))));
}

#[test]
fn grid_shapes_follow_the_spec() {
    let design = synthetic();
    let single = insample_grid(&design, &small_spec()).unwrap();
    assert_eq!(single.cells.len(), 1);
    let mut csv = Vec::new();
    single.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(
        text.lines().next().unwrap().split(',').count(),
        GridReport::CSV_HEADER.len()
    );

    let spec = GridSpec {
        tree_counts: vec![5, 10],
        ..Default::default()
    };
    let report = insample_grid(&design, &spec).unwrap();
    assert_eq!(report.cells.len(), 12);
    assert!(report.cells.iter().all(|c| c.rf.mae <= c.rf.rmse));
}
