//! Exhaustive split search on a toy node, then one fully grown CART tree.

use forestcast::cart::{best_split, grow_tree, GrowConfig, Samples};
use forestcast::panel::build_design;
use forestcast::rng;
use forestcast::synthetic::SyntheticPanel;

fn main() -> forestcast::Result<()> {
    // y jumps when x0 crosses 2.5; x1 is noise.
    let x = vec![1.0, 7.0, 2.0, 3.0, 3.0, 1.0, 4.0, 9.0, 5.0, 2.0];
    let y = vec![0.0, 0.1, 5.0, 5.2, 4.9];
    let toy = Samples::new(x, y, 2)?;
    let split = best_split(&toy, &[0, 1, 2, 3, 4], &[0, 1])?.expect("x0 varies");
    println!(
        "best split: x{} <= {} ({} | {}), weighted mse {:.4}",
        split.feature, split.threshold, split.left_count, split.right_count, split.weighted_mse
    );

    let design = build_design(&SyntheticPanel::default().generate()?, false)?;
    let samples = Samples::from_design(&design);
    let rows: Vec<usize> = (0..samples.len()).collect();
    let config = GrowConfig::with_leaf_cap(20);
    let tree = grow_tree(&samples, &rows, design.feature_names(), &config, &mut rng::stream(7, 0))?;
    println!("\ndepth {}, {} leaves", tree.depth(), tree.leaves().len());
    print!("{}", tree.render(3));
    Ok(())
}
