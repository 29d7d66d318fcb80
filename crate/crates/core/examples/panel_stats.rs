//! Loads a panel, builds the supervised design and prints summary statistics
//! plus a kernel density of next-year growth.

use forestcast::panel::{build_design, kernel_density, linspace, silverman_bandwidth, summary_stats};
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let panel = SyntheticPanel::default().generate()?;
    let design = build_design(&panel, false)?;
    println!(
        "{} rows, {} features: {:?}",
        design.len(),
        design.n_features(),
        design.feature_names()
    );

    let stats = summary_stats(&design, &panel)?;
    stats.write_csv(std::io::stdout())?;

    let y = design.targets();
    let h = silverman_bandwidth(&y)?;
    let grid = linspace(-15.0, 25.0, 9);
    let density = kernel_density(&y, h, &grid)?;
    println!("\nbandwidth {h:.3}");
    for (x, d) in grid.iter().zip(density) {
        println!("{x:>6.1} {}", "#".repeat((d * 400.0) as usize));
    }
    Ok(())
}
