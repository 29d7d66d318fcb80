//! Exact interventional Shapley values for one forecast, then mean |phi|
//! importances for the full sample and a late sub-period.

use forestcast::explain::{background_subsample, ForestExplainer};
use forestcast::forest::{fit_forest, ForestConfig};
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let model = fit_forest(&design, &ForestConfig::new(10, 200, 42))?;
    let background = background_subsample(&design, 200, 1);
    let explainer = ForestExplainer::new(&model, &background)?;

    let row = &design.rows()[0];
    let phi = explainer.explain(&row.features)?;
    println!(
        "{} {}: base {:.3}, prediction {:.3}, efficiency gap {:.1e}",
        row.country,
        row.year,
        phi.base_value,
        phi.prediction,
        phi.efficiency_gap()
    );
    for (name, v) in design.feature_names().iter().zip(&phi.phi) {
        println!("  {name:<14} {v:+.3}");
    }

    for (first, last) in [(1988, 2019), (2011, 2019)] {
        let report = explainer.importance(&design.years(first, last), true)?;
        println!("\nimportance {first}-{last}");
        for (name, share) in report.ranking() {
            println!("  {name:<14} {share:.3}");
        }
    }
    Ok(())
}
