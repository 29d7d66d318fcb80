//! Random forests of CART trees.
//!
//! Tree `b` trains on `ceil(fraction · n)` rows drawn (without replacement by
//! default) from its own random stream keyed by `(master_seed, b)`, and the
//! same stream drives the per-split feature sampling. Trees are therefore
//! bitwise identical whatever the number of rayon workers.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{grow_tree, GrowConfig, RegressionTree, Samples};
use crate::panel::DesignMatrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub grow: GrowConfig,
    pub subsample_fraction: f64,
    pub with_replacement: bool,
    pub master_seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            grow: GrowConfig::default(),
            subsample_fraction: 2.0 / 3.0,
            with_replacement: false,
            master_seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn new(leaf_cap: usize, n_trees: usize, master_seed: u64) -> Self {
        ForestConfig {
            n_trees,
            grow: GrowConfig::with_leaf_cap(leaf_cap),
            master_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "subsample_fraction {} outside (0, 1]",
                self.subsample_fraction
            )));
        }
        self.grow.validate(p)
    }

    /// Rows drawn per tree from a design of `n` rows.
    pub fn subsample_size(&self, n: usize) -> usize {
        // The small offset keeps e.g. (2/3)·9 from rounding up to 7.
        ((self.subsample_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

/// Identifies the design a forest was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub feature_hash: u64,
}

impl Fingerprint {
    pub fn of(design: &DesignMatrix) -> Self {
        // FNV-1a over feature names, feature bits and target bits.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for name in design.feature_names() {
            eat(name.as_bytes());
            eat(&[0]);
        }
        for row in design.rows() {
            for v in &row.features {
                eat(&v.to_bits().to_le_bytes());
            }
            eat(&row.target.to_bits().to_le_bytes());
        }
        Fingerprint {
            rows: design.len(),
            feature_hash: h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub fingerprint: Fingerprint,
    /// Training means, the default conditioning point for partial effects.
    pub feature_means: Vec<f64>,
    pub feature_ranges: Vec<(f64, f64)>,
    pub target_range: (f64, f64),
}

/// Row subsample for tree `b`, sorted ascending.
fn draw_rows<R: Rng>(rng: &mut R, n: usize, k: usize, with_replacement: bool) -> Vec<usize> {
    let mut rows = if with_replacement {
        (0..k).map(|_| rng.gen_range(0..n)).collect()
    } else {
        index::sample(rng, n, k).into_vec()
    };
    rows.sort_unstable();
    rows
}

/// Grows tree `index` of a forest exactly as [`fit_forest`] would.
pub fn fit_tree(
    samples: &Samples,
    feature_names: &[String],
    config: &ForestConfig,
    index: usize,
) -> Result<RegressionTree> {
    let mut stream = rng::stream(config.master_seed, index as u64);
    let k = config.subsample_size(samples.len());
    if k == 0 {
        return Err(Error::InvalidParameter(
            "subsample contains no rows; raise subsample_fraction".into(),
        ));
    }
    let rows = draw_rows(&mut stream, samples.len(), k, config.with_replacement);
    grow_tree(samples, &rows, feature_names, &config.grow, &mut stream)
}

pub fn fit_forest(design: &DesignMatrix, config: &ForestConfig) -> Result<ForestModel> {
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    config.validate(design.n_features())?;
    let samples = Samples::from_design(design);
    let names = design.feature_names();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|b| fit_tree(&samples, names, config, b))
        .collect::<Result<Vec<_>>>()?;
    let targets = design.targets();
    let target_range = targets.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(ForestModel {
        trees,
        config: *config,
        feature_names: names.to_vec(),
        fingerprint: Fingerprint::of(design),
        feature_means: design.feature_means(),
        feature_ranges: design.feature_ranges(),
        target_range,
    })
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.route(x))
    }

    // Running mean: exact when all trees agree, unlike sum / n.
    pub(crate) fn route(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .enumerate()
            .fold(0.0, |m, (b, t)| m + (t.route(x) - m) / (b + 1) as f64)
    }

    pub fn predict_design(&self, design: &DesignMatrix) -> Result<Vec<f64>> {
        if design.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: design.n_features(),
            });
        }
        Ok(design.rows().par_iter().map(|r| self.route(&r.features)).collect())
    }

    /// In-sample MSE of the first `m` trees for each `m` in `tree_counts`.
    ///
    /// Uses the fitted trees as they are; nothing is refitted.
    pub fn mse_curve(&self, design: &DesignMatrix, tree_counts: &[usize]) -> Result<Vec<(usize, f64)>> {
        if tree_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("tree_counts must be strictly ascending".into()));
        }
        if let Some(&m) = tree_counts.iter().find(|&&m| m == 0 || m > self.n_trees()) {
            return Err(Error::InvalidParameter(format!(
                "tree count {m} outside 1..={}",
                self.n_trees()
            )));
        }
        if design.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: design.n_features(),
            });
        }
        let n = design.len() as f64;
        let means: Vec<Vec<f64>> = design
            .rows()
            .par_iter()
            .map(|row| {
                let mut acc = 0.0;
                let mut out = Vec::with_capacity(tree_counts.len());
                let mut next = tree_counts.iter().peekable();
                for (b, tree) in self.trees.iter().enumerate() {
                    acc += (tree.route(&row.features) - acc) / (b + 1) as f64;
                    if next.peek().is_some_and(|&&m| m == b + 1) {
                        out.push(acc);
                        next.next();
                    }
                }
                out
            })
            .collect();
        Ok(tree_counts
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let sse: f64 = design
                    .rows()
                    .iter()
                    .zip(&means)
                    .map(|(row, s)| (s[j] - row.target).powi(2))
                    .sum();
                (m, sse / n)
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text)?;
        if model.trees.len() != model.config.n_trees {
            return Err(Error::InvalidParameter(format!(
                "model lists {} trees but config says {}",
                model.trees.len(),
                model.config.n_trees
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Fits one forest and returns its prefix-ensemble in-sample MSE curve.
pub fn mse_curve(design: &DesignMatrix, config: &ForestConfig, tree_counts: &[usize]) -> Result<Vec<(usize, f64)>> {
    if let Some(&m) = tree_counts.iter().find(|&&m| m > config.n_trees) {
        return Err(Error::InvalidParameter(format!(
            "tree count {m} exceeds n_trees {}",
            config.n_trees
        )));
    }
    fit_forest(design, config)?.mse_curve(design, tree_counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::DesignRow;

    fn toy_design(n: usize) -> DesignMatrix {
        let rows = (0..n)
            .map(|i| {
                let a = (i * 7 % 13) as f64;
                let b = (i * 5 % 11) as f64 * 0.5;
                DesignRow {
                    country: "AAA".into(),
                    year: 1980 + i as i32,
                    features: vec![a, b],
                    target: a * a - 3.0 * b,
                }
            })
            .collect();
        DesignMatrix::new(vec!["a".into(), "b".into()], rows, false).unwrap()
    }

    #[test]
    fn subsample_size_is_ceiling() {
        let cfg = ForestConfig::default();
        assert_eq!(cfg.subsample_size(9), 6);
        assert_eq!(cfg.subsample_size(10), 7);
        assert_eq!(cfg.subsample_size(374), 250);
    }

    #[test]
    fn invalid_configs() {
        let d = toy_design(10);
        let mut cfg = ForestConfig::new(1, 0, 1);
        assert!(fit_forest(&d, &cfg).is_err());
        cfg.n_trees = 2;
        cfg.subsample_fraction = 0.0;
        assert!(fit_forest(&d, &cfg).is_err());
        cfg.subsample_fraction = 0.01;
        let tiny = fit_forest(&d, &cfg).unwrap();
        assert!(tiny.trees.iter().all(|t| t.training_rows.len() == 1));
    }

    #[test]
    fn two_tree_average() {
        let d = toy_design(30);
        let model = fit_forest(&d, &ForestConfig::new(3, 2, 9)).unwrap();
        let x = [4.0, 1.5];
        let a = model.trees[0].predict(&x).unwrap();
        let b = model.trees[1].predict(&x).unwrap();
        assert_eq!(model.predict(&x).unwrap(), (a + b) / 2.0);
    }

    #[test]
    fn prefix_curve_endpoints() {
        let d = toy_design(40);
        let model = fit_forest(&d, &ForestConfig::new(2, 20, 3)).unwrap();
        let curve = model.mse_curve(&d, &[1, 5, 20]).unwrap();
        let full = model.predict_design(&d).unwrap();
        let full_mse = full.iter().zip(d.targets()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / 40.0;
        assert_eq!(curve[2].1, full_mse);
        let single = d
            .rows()
            .iter()
            .map(|r| (model.trees[0].predict(&r.features).unwrap() - r.target).powi(2))
            .sum::<f64>()
            / 40.0;
        assert_eq!(curve[0].1, single);
    }

    #[test]
    fn curve_rejects_bad_counts() {
        let d = toy_design(20);
        let model = fit_forest(&d, &ForestConfig::new(2, 5, 3)).unwrap();
        assert!(model.mse_curve(&d, &[3, 2]).is_err());
        assert!(model.mse_curve(&d, &[6]).is_err());
        assert!(model.mse_curve(&d, &[0]).is_err());
        assert!(mse_curve(&d, &ForestConfig::new(2, 5, 3), &[10]).is_err());
    }

    #[test]
    fn json_round_trip_reproduces_predictions() {
        let d = toy_design(25);
        let model = fit_forest(&d, &ForestConfig::new(1, 7, 77)).unwrap();
        let back = ForestModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        for r in d.rows() {
            assert_eq!(
                back.predict(&r.features).unwrap().to_bits(),
                model.predict(&r.features).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn with_replacement_draws_requested_count() {
        let d = toy_design(30);
        let mut cfg = ForestConfig::new(1, 3, 5);
        cfg.with_replacement = true;
        cfg.subsample_fraction = 1.0;
        let model = fit_forest(&d, &cfg).unwrap();
        assert!(model.trees.iter().all(|t| t.training_rows.len() == 30));
        assert!(model
            .trees
            .iter()
            .any(|t| t.training_rows.windows(2).any(|w| w[0] == w[1])));
    }
}
