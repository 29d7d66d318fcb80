//! AR(1) and full linear benchmarks with robust standard errors.

use forestcast::baselines::{fit_ar1_with, fit_ols_with, render_table, RobustSe};
use forestcast::evalgrid::ols_subset;
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let panel = SyntheticPanel::default().generate()?;
    for dummies in [false, true] {
        let design = build_design(&panel, dummies)?;
        let ar1 = fit_ar1_with(&design, RobustSe::Hc1)?;
        let ols = fit_ols_with(&design, &ols_subset(&design), RobustSe::Hc1)?;
        println!("country dummies: {dummies}");
        println!("{}", render_table(&[("AR(1)", &ar1), ("OLS", &ols)]));
    }
    Ok(())
}
