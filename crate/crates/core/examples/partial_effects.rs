//! Conditional partial effects: a curve in inflation at the training means and
//! at the price-to-rent quartiles, and a price-to-rent × short-rate surface.

use forestcast::effects::{curve_family, default_grid, partial_curve, partial_surface, quartiles};
use forestcast::forest::{fit_forest, ForestConfig};
use forestcast::panel::build_design;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let model = fit_forest(&design, &ForestConfig::new(10, 200, 42))?;
    let cpi = design.feature_index("cpi").unwrap();
    let pr = design.feature_index("price_rent").unwrap();
    let rate = design.feature_index("i_short").unwrap();

    let grid = default_grid(&model, cpi, 9)?;
    let curve = partial_curve(&model, cpi, &grid, &[])?;
    let family = curve_family(&model, cpi, &grid, pr, &quartiles(&design, pr)?)?;
    println!(
        "{:>7} {:>8} {:>8} {:>8} {:>8}",
        "cpi", "mean", "pr q25", "pr q50", "pr q75"
    );
    for (k, x) in grid.iter().enumerate() {
        print!("{x:>7.2} {:>8.3}", curve.responses[k]);
        for c in &family {
            print!(" {:>8.3}", c.responses[k]);
        }
        println!();
    }

    let surface = partial_surface(
        &model,
        pr,
        rate,
        &default_grid(&model, pr, 5)?,
        &default_grid(&model, rate, 5)?,
    )?;
    println!("\nprice_rent (rows) x i_short (columns)");
    for i in 0..5 {
        let line: Vec<String> = (0..5).map(|j| format!("{:7.2}", surface.at(i, j))).collect();
        println!("{:7.1} {}", surface.axes[0].values[i], line.join(""));
    }
    Ok(())
}
