//! Writes the seeded synthetic panel as a long-format CSV.
//!
//!     cargo run --example synthetic_panel -- panel.csv [seed]

use std::fs::File;

use forestcast::panel::write_panel_csv;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "panel.csv".into());
    let seed = args
        .next()
        .map_or(2024, |s| s.parse().expect("seed must be an integer"));
    let panel = SyntheticPanel {
        seed,
        ..Default::default()
    }
    .generate()?;
    let file = File::create(&path).map_err(|e| forestcast::Error::io(&path, e))?;
    write_panel_csv(&panel, file)?;
    println!("wrote {} countries to {path}", panel.countries().len());
    Ok(())
}
