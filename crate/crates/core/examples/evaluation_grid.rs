//! In-sample and holdout RMSE/MAE grids over leaf caps and tree counts,
//! reported against the AR(1) and OLS benchmarks.

use forestcast::evalgrid::{holdout_grid, insample_grid, GridSpec, HoldoutSplit, SplitBy};
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let spec = GridSpec {
        leaf_caps: vec![5, 10, 20, 30],
        tree_counts: vec![50, 200],
        ..Default::default()
    };
    let split = HoldoutSplit {
        train_end_year: 2014,
        test_first_year: 2015,
        test_last_year: 2019,
        split_by: SplitBy::PredictorYear,
    };
    for report in [insample_grid(&design, &spec)?, holdout_grid(&design, &split, &spec)?] {
        println!(
            "{}: ar1 rmse {:.3}, ols rmse {:.3}",
            report.label, report.ar1.rmse, report.ols.rmse
        );
        report.write_csv(std::io::stdout())?;
        println!();
    }
    Ok(())
}
