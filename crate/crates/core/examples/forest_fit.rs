//! Fits a forest, traces test error against ensemble size and round-trips the
//! model through JSON.

use forestcast::evalgrid::{metrics, HoldoutSplit, SplitBy};
use forestcast::forest::{fit_forest, ForestConfig, ForestModel};
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let split = HoldoutSplit {
        train_end_year: 2014,
        test_first_year: 2015,
        test_last_year: 2019,
        split_by: SplitBy::PredictorYear,
    };
    let (train, test) = split.apply(&design)?;

    let model = fit_forest(&train, &ForestConfig::new(10, 300, 42))?;
    let m = metrics(&model.predict_design(&test)?, &test.targets())?;
    println!(
        "{} trees, holdout rmse {:.3} mae {:.3} (n={})",
        model.n_trees(),
        m.rmse,
        m.mae,
        m.n
    );

    println!("\nmse by ensemble size");
    for (count, mse) in model.mse_curve(&test, &[1, 5, 25, 100, 300])? {
        println!("{count:>5} {mse:.4}");
    }

    let restored = ForestModel::from_json(&model.to_json()?)?;
    assert_eq!(restored.predict_design(&test)?, model.predict_design(&test)?);
    println!("\njson round trip reproduces every prediction");
    Ok(())
}
