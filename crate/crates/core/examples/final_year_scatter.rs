//! Cross-country forecasts for the last target year from models trained on
//! earlier data, with squared correlations against the outcomes.

use forestcast::baselines::RobustSe;
use forestcast::evalgrid::final_year_scatter;
use forestcast::forest::ForestConfig;
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let report = final_year_scatter(&design, 2018, 2019, &ForestConfig::new(10, 500, 42), RobustSe::Hc0)?;
    report.write_csv(std::io::stdout())?;
    println!("rf r2 {:?}, ols r2 {:?}", report.rf_r2, report.ols_r2);
    Ok(())
}
