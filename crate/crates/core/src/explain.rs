//! Interventional Shapley values for forest predictions.
//!
//! The coalition value of a feature set `C` at a query point `x` is the
//! forest prediction averaged over a background sample `z`, with the features
//! in `C` taken from `x` and the rest from `z`.
//!
//! Because a tree is a sum of leaf indicators, the game decomposes by leaf.
//! For a leaf whose root path tests the distinct features `F`, the indicator
//! is satisfied by a hybrid point iff every feature of `C ∩ F` is satisfied by
//! `x` and every feature of `F \ C` by `z`. Splitting `F` into the features
//! `A` that `x` satisfies and the rest `B`, each background row contributes
//! a game that is 1 exactly when `C` contains the features the row fails and
//! avoids `B`. Such games have closed-form Shapley values, and rows are
//! grouped by their satisfaction mask (computed once per leaf), so a leaf
//! costs `O(masks · |F|)` per query. Features that never appear on a
//! path receive exactly zero.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::RegressionTree;
use crate::forest::ForestModel;
use crate::panel::DesignMatrix;
use crate::{rng, Error, Result};

/// Largest number of distinct split features on one root-leaf path.
pub const MAX_PATH_FEATURES: usize = 30;

/// Largest feature count accepted by [`shapley_brute`].
pub const MAX_BRUTE_FEATURES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    pub phi: Vec<f64>,
    /// Background-averaged prediction.
    pub base_value: f64,
    pub prediction: f64,
}

impl ShapleyVector {
    /// `base_value + Σφ - prediction`.
    pub fn efficiency_gap(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>() - self.prediction
    }
}

#[derive(Debug, Clone)]
struct LeafGame {
    value: f64,
    features: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Distinct background satisfaction masks over `features`, with counts.
    masks: Vec<(u64, f64)>,
}

impl LeafGame {
    fn new(tree_leaf: &crate::cart::LeafPath, background: &DesignMatrix) -> Result<Self> {
        let mut features: Vec<usize> = Vec::new();
        let mut lo: Vec<f64> = Vec::new();
        let mut hi: Vec<f64> = Vec::new();
        for &(k, t, went_left) in &tree_leaf.conditions {
            let j = match features.iter().position(|&f| f == k) {
                Some(j) => j,
                None => {
                    features.push(k);
                    lo.push(f64::NEG_INFINITY);
                    hi.push(f64::INFINITY);
                    features.len() - 1
                }
            };
            if went_left {
                hi[j] = hi[j].min(t);
            } else {
                lo[j] = lo[j].max(t);
            }
        }
        if features.len() > MAX_PATH_FEATURES {
            return Err(Error::InvalidParameter(format!(
                "leaf path tests {} distinct features, limit is {MAX_PATH_FEATURES}",
                features.len()
            )));
        }
        let mut counts: HashMap<u64, f64> = HashMap::new();
        for row in background.rows() {
            let mask = satisfied(&features, &lo, &hi, &row.features);
            *counts.entry(mask).or_insert(0.0) += 1.0;
        }
        let mut masks: Vec<(u64, f64)> = counts.into_iter().collect();
        masks.sort_unstable_by_key(|&(m, _)| m);
        Ok(LeafGame {
            value: tree_leaf.prediction,
            features,
            lo,
            hi,
            masks,
        })
    }

    fn full(&self) -> u64 {
        low_bits(self.features.len())
    }

    /// Background fraction landing in this leaf.
    fn reach(&self, n_background: f64) -> f64 {
        let full = self.full();
        self.masks
            .iter()
            .filter(|(m, _)| m & full == full)
            .map(|(_, c)| c)
            .sum::<f64>()
            / n_background
    }

    /// Adds this leaf's Shapley contribution at `x` into `phi`.
    ///
    /// Against a single background row failing the features `D`, the leaf
    /// game is 1 exactly when the coalition contains `D` and avoids the set
    /// `U` that `x` fails. That game pays `1/(d·C(d+u, d))` to each member of
    /// `D` and minus `1/(u·C(d+u, u))` to each member of `U`.
    fn accumulate(&self, x: &[f64], n_background: f64, coef: &[Vec<f64>], phi: &mut [f64]) {
        let m = self.features.len();
        if m == 0 {
            return;
        }
        let full = self.full();
        let u_mask = full & !satisfied(&self.features, &self.lo, &self.hi, x);
        let u = u_mask.count_ones() as usize;
        for &(mask, count) in &self.masks {
            let d_mask = full & !mask;
            if d_mask & u_mask != 0 {
                continue;
            }
            let d = d_mask.count_ones() as usize;
            let share = self.value * count / n_background;
            if d > 0 {
                let c = share * coef[d][u];
                for_bits(d_mask, |j| phi[self.features[j]] += c);
            }
            if u > 0 {
                let c = share * coef[u][d];
                for_bits(u_mask, |j| phi[self.features[j]] -= c);
            }
        }
    }
}

fn for_bits(mut mask: u64, mut f: impl FnMut(usize)) {
    while mask != 0 {
        f(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
}

fn low_bits(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

fn satisfied(features: &[usize], lo: &[f64], hi: &[f64], x: &[f64]) -> u64 {
    features
        .iter()
        .enumerate()
        .filter(|&(j, &k)| lo[j] < x[k] && x[k] <= hi[j])
        .fold(0u64, |acc, (j, _)| acc | 1 << j)
}

/// `coef[a][b] = 1 / (a · C(a + b, a))` for `a ≥ 1`; row 0 is unused.
fn unanimity_coefficients(max_m: usize) -> Vec<Vec<f64>> {
    (0..=max_m)
        .map(|a| {
            (0..=max_m)
                .map(|b| {
                    if a == 0 {
                        return 0.0;
                    }
                    let mut binom = 1.0;
                    for i in 0..a {
                        binom = binom * (a + b - i) as f64 / (i + 1) as f64;
                    }
                    1.0 / (a as f64 * binom)
                })
                .collect()
        })
        .collect()
}

/// Reusable Shapley engine for one forest and one background sample.
#[derive(Debug, Clone)]
pub struct ForestExplainer<'a> {
    model: &'a ForestModel,
    leaves: Vec<Vec<LeafGame>>,
    coef: Vec<Vec<f64>>,
    n_background: f64,
    base_value: f64,
}

impl<'a> ForestExplainer<'a> {
    pub fn new(model: &'a ForestModel, background: &DesignMatrix) -> Result<Self> {
        if background.is_empty() {
            return Err(Error::Degenerate("empty background sample".into()));
        }
        if background.n_features() != model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: model.n_features(),
                got: background.n_features(),
            });
        }
        if model.n_features() > 64 {
            return Err(Error::InvalidParameter("at most 64 features are supported".into()));
        }
        let leaves = model
            .trees
            .par_iter()
            .map(|tree: &RegressionTree| {
                tree.leaves()
                    .iter()
                    .map(|leaf| LeafGame::new(leaf, background))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let n_background = background.len() as f64;
        let n_trees = leaves.len() as f64;
        let base_value = leaves
            .iter()
            .map(|tree| tree.iter().map(|l| l.value * l.reach(n_background)).sum::<f64>())
            .sum::<f64>()
            / n_trees;
        let max_m = leaves
            .iter()
            .flat_map(|t| t.iter().map(|l| l.features.len()))
            .max()
            .unwrap_or(0);
        Ok(ForestExplainer {
            model,
            leaves,
            coef: unanimity_coefficients(max_m),
            n_background,
            base_value,
        })
    }

    pub fn model(&self) -> &ForestModel {
        self.model
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    /// Shapley values of tree `b` alone.
    pub fn explain_tree(&self, b: usize, x: &[f64]) -> Result<ShapleyVector> {
        self.check(x)?;
        let leaves = self
            .leaves
            .get(b)
            .ok_or_else(|| Error::InvalidParameter(format!("no tree {b}")))?;
        let mut phi = vec![0.0; self.model.n_features()];
        for leaf in leaves {
            leaf.accumulate(x, self.n_background, &self.coef, &mut phi);
        }
        Ok(ShapleyVector {
            phi,
            base_value: leaves.iter().map(|l| l.value * l.reach(self.n_background)).sum(),
            prediction: self.model.trees[b].route(x),
        })
    }

    pub fn explain(&self, x: &[f64]) -> Result<ShapleyVector> {
        self.check(x)?;
        let mut phi = vec![0.0; self.model.n_features()];
        for tree in &self.leaves {
            for leaf in tree {
                leaf.accumulate(x, self.n_background, &self.coef, &mut phi);
            }
        }
        let t = self.leaves.len() as f64;
        phi.iter_mut().for_each(|v| *v /= t);
        Ok(ShapleyVector {
            phi,
            base_value: self.base_value,
            prediction: self.model.route(x),
        })
    }

    /// One vector per design row, in row order.
    pub fn explain_rows(&self, rows: &DesignMatrix) -> Result<Vec<ShapleyVector>> {
        rows.rows().par_iter().map(|r| self.explain(&r.features)).collect()
    }

    /// Mean absolute Shapley value per feature over `rows`.
    pub fn importance(&self, rows: &DesignMatrix, normalize: bool) -> Result<ImportanceReport> {
        if rows.is_empty() {
            return Err(Error::EmptyPartition("no rows to attribute".into()));
        }
        let vectors = self.explain_rows(rows)?;
        ImportanceReport::from_vectors(&self.model.feature_names, rows, &vectors, normalize)
    }

    /// Normalized importances for each `(first, last)` predictor-year range.
    pub fn importance_by_period(&self, rows: &DesignMatrix, periods: &[(i32, i32)]) -> Result<Vec<ImportanceReport>> {
        periods
            .iter()
            .map(|&(first, last)| {
                let subset = rows.years(first, last);
                if subset.is_empty() {
                    return Err(Error::EmptyPartition(format!("no rows in {first}-{last}")));
                }
                let mut report = self.importance(&subset, true)?;
                report.period = Some((first, last));
                Ok(report)
            })
            .collect()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n_features(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Exact interventional Shapley values of `model` at `x`.
pub fn shapley_exact(model: &ForestModel, x: &[f64], background: &DesignMatrix) -> Result<ShapleyVector> {
    ForestExplainer::new(model, background)?.explain(x)
}

/// Reference implementation by enumeration of all `2^p` coalitions.
pub fn shapley_brute(model: &ForestModel, x: &[f64], background: &DesignMatrix) -> Result<ShapleyVector> {
    let p = model.n_features();
    if p > MAX_BRUTE_FEATURES {
        return Err(Error::InvalidParameter(format!(
            "brute-force Shapley limited to {MAX_BRUTE_FEATURES} features, got {p}"
        )));
    }
    if background.is_empty() {
        return Err(Error::Degenerate("empty background sample".into()));
    }
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x.len(),
        });
    }
    let n = background.len() as f64;
    let mut hybrid = vec![0.0; p];
    let value: Vec<f64> = (0..1usize << p)
        .map(|coalition| {
            background
                .rows()
                .iter()
                .map(|z| {
                    for k in 0..p {
                        hybrid[k] = if coalition >> k & 1 == 1 { x[k] } else { z.features[k] };
                    }
                    model.route(&hybrid)
                })
                .sum::<f64>()
                / n
        })
        .collect();
    let fact: Vec<f64> = (0..=p)
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    let phi = (0..p)
        .map(|i| {
            (0..1usize << p)
                .filter(|c| c >> i & 1 == 0)
                .map(|c| {
                    let s = c.count_ones() as usize;
                    fact[s] * fact[p - s - 1] / fact[p] * (value[c | 1 << i] - value[c])
                })
                .sum()
        })
        .collect();
    Ok(ShapleyVector {
        phi,
        base_value: value[0],
        prediction: model.route(x),
    })
}

/// Mean-|φ| importances over all rows; see [`ForestExplainer::importance`].
pub fn importance(
    model: &ForestModel,
    background: &DesignMatrix,
    rows: &DesignMatrix,
    normalize: bool,
) -> Result<ImportanceReport> {
    ForestExplainer::new(model, background)?.importance(rows, normalize)
}

pub fn importance_by_period(
    model: &ForestModel,
    background: &DesignMatrix,
    rows: &DesignMatrix,
    periods: &[(i32, i32)],
) -> Result<Vec<ImportanceReport>> {
    ForestExplainer::new(model, background)?.importance_by_period(rows, periods)
}

/// Seeded row subsample of a background design, for faster attribution.
pub fn background_subsample(design: &DesignMatrix, size: usize, seed: u64) -> DesignMatrix {
    if size >= design.len() {
        return design.clone();
    }
    let mut stream = rng::stream(seed, 0);
    let mut keep = rand::seq::index::sample(&mut stream, design.len(), size).into_vec();
    keep.sort_unstable();
    let mut idx = 0;
    let mut pos = 0;
    design.filter(|_| {
        let hit = keep.get(pos) == Some(&idx);
        if hit {
            pos += 1;
        }
        idx += 1;
        hit
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
    pub normalized: bool,
    /// Predictor-year range covered.
    pub period: Option<(i32, i32)>,
    pub n_rows: usize,
}

impl ImportanceReport {
    /// Features sorted by decreasing importance; ties keep feature order.
    /// Aggregates precomputed attributions, one per row of `rows`.
    pub fn from_vectors(
        feature_names: &[String],
        rows: &DesignMatrix,
        vectors: &[ShapleyVector],
        normalize: bool,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyPartition("no rows to attribute".into()));
        }
        if vectors.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: vectors.len(),
            });
        }
        let p = feature_names.len();
        let n = vectors.len() as f64;
        let mut values: Vec<f64> = (0..p)
            .map(|k| vectors.iter().map(|v| v.phi[k].abs()).sum::<f64>() / n)
            .collect();
        if normalize {
            let total: f64 = values.iter().sum();
            if total <= 0.0 {
                return Err(Error::Degenerate("all importances are zero, cannot normalize".into()));
            }
            values.iter_mut().for_each(|v| *v /= total);
        }
        let (first, last) = rows
            .rows()
            .iter()
            .fold((i32::MAX, i32::MIN), |(a, b), r| (a.min(r.year), b.max(r.year)));
        Ok(ImportanceReport {
            feature_names: feature_names.to_vec(),
            values,
            normalized: normalize,
            period: Some((first, last)),
            n_rows: rows.len(),
        })
    }

    pub fn ranking(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }

    pub fn period_label(&self) -> String {
        self.period.map_or_else(|| "all".into(), |(a, b)| format!("{a}-{b}"))
    }

    /// `feature,importance`, sorted by importance.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "importance"])?;
        for (name, v) in self.ranking() {
            w.write_record([name.to_string(), format!("{v:.6}")])?;
        }
        w.flush().map_err(|e| Error::io("<importance>", e))?;
        Ok(())
    }
}

/// One column per period, rows ordered by the first report's ranking.
pub fn write_period_table<W: std::io::Write>(reports: &[ImportanceReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = reports.first() else {
        return Ok(());
    };
    let mut header = vec!["feature".to_string()];
    header.extend(reports.iter().map(ImportanceReport::period_label));
    w.write_record(&header)?;
    for (name, _) in first.ranking() {
        let k = first.feature_names.iter().position(|f| f == name).expect("own name");
        let mut record = vec![name.to_string()];
        record.extend(reports.iter().map(|r| format!("{:.6}", r.values[k])));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<importance table>", e))?;
    Ok(())
}

/// Per-row attribution table: `country,year,base_value,prediction,<features…>`.
pub fn write_shapley_csv<W: std::io::Write>(rows: &DesignMatrix, vectors: &[ShapleyVector], out: W) -> Result<()> {
    if rows.len() != vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: vectors.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "country".to_string(),
        "year".into(),
        "base_value".into(),
        "prediction".into(),
    ];
    header.extend(rows.feature_names().iter().cloned());
    w.write_record(&header)?;
    for (row, v) in rows.rows().iter().zip(vectors) {
        let mut record = vec![
            row.country.clone(),
            row.year.to_string(),
            format!("{:.9}", v.base_value),
            format!("{:.9}", v.prediction),
        ];
        record.extend(v.phi.iter().map(|p| format!("{p:.9}")));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<shapley>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::{GrowConfig, TreeNode};
    use crate::forest::{fit_forest, Fingerprint, ForestConfig};
    use crate::panel::DesignRow;

    fn forest_of(trees: Vec<TreeNode>, p: usize) -> ForestModel {
        let names: Vec<String> = (0..p).map(|k| format!("x{k}")).collect();
        let trees: Vec<RegressionTree> = trees
            .into_iter()
            .map(|root| RegressionTree {
                root,
                feature_names: names.clone(),
                config: GrowConfig::default(),
                training_rows: vec![],
            })
            .collect();
        ForestModel {
            config: ForestConfig {
                n_trees: trees.len(),
                ..Default::default()
            },
            trees,
            feature_names: names,
            fingerprint: Fingerprint {
                rows: 0,
                feature_hash: 0,
            },
            feature_means: vec![0.0; p],
            feature_ranges: vec![(0.0, 1.0); p],
            target_range: (0.0, 1.0),
        }
    }

    fn leaf(v: f64) -> Box<TreeNode> {
        Box::new(TreeNode::Leaf { prediction: v, n: 1 })
    }

    fn split(feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode>) -> Box<TreeNode> {
        Box::new(TreeNode::Split {
            feature,
            threshold,
            n: 2,
            left,
            right,
        })
    }

    fn background(points: &[&[f64]]) -> DesignMatrix {
        let p = points[0].len();
        let rows = points
            .iter()
            .enumerate()
            .map(|(i, x)| DesignRow {
                country: "AAA".into(),
                year: 2000 + i as i32,
                features: x.to_vec(),
                target: 0.0,
            })
            .collect();
        DesignMatrix::new((0..p).map(|k| format!("x{k}")).collect(), rows, false).unwrap()
    }

    #[test]
    fn constant_model_has_zero_attribution() {
        let model = forest_of(vec![*leaf(3.0), *leaf(3.0)], 3);
        let bg = background(&[&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]]);
        let s = shapley_exact(&model, &[5.0, 5.0, 5.0], &bg).unwrap();
        assert_eq!(s.phi, vec![0.0; 3]);
        assert_eq!(s.base_value, 3.0);
        let report = importance(&model, &bg, &bg, false).unwrap();
        assert!(report.values.iter().all(|&v| v == 0.0));
        assert!(importance(&model, &bg, &bg, true).is_err());
    }

    #[test]
    fn single_feature_closed_form() {
        let model = forest_of(vec![*split(0, 0.5, leaf(1.0), leaf(4.0))], 1);
        let bg = background(&[&[0.0], &[1.0], &[2.0]]);
        let brute = shapley_brute(&model, &[0.0], &bg).unwrap();
        assert_eq!(brute.base_value, 3.0);
        assert_eq!(brute.phi[0], 1.0 - 3.0);
        let exact = shapley_exact(&model, &[0.0], &bg).unwrap();
        assert!((exact.phi[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_features_share_credit() {
        // f = 10 if x0 > 0.5 and x1 > 0.5, symmetric in (x0, x1).
        let tree = split(0, 0.5, leaf(0.0), split(1, 0.5, leaf(0.0), leaf(10.0)));
        let model = forest_of(vec![*tree], 2);
        let bg = background(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let x = [1.0, 1.0];
        let exact = shapley_exact(&model, &x, &bg).unwrap();
        let brute = shapley_brute(&model, &x, &bg).unwrap();
        assert!((exact.phi[0] - exact.phi[1]).abs() < 1e-12);
        assert!((brute.phi[0] - brute.phi[1]).abs() < 1e-12);
        assert!((exact.phi[0] - brute.phi[0]).abs() < 1e-12);
    }

    #[test]
    fn unused_feature_gets_exact_zero() {
        let tree = split(2, 0.0, split(0, 1.0, leaf(-1.0), leaf(2.0)), leaf(5.0));
        let model = forest_of(vec![*tree], 4);
        let bg = background(&[&[0.0, 9.0, -1.0, 3.0], &[2.0, -9.0, 1.0, 0.0], &[1.5, 0.0, -0.5, 1.0]]);
        let s = shapley_exact(&model, &[2.0, 1.0, -3.0, 7.0], &bg).unwrap();
        assert_eq!(s.phi[1], 0.0);
        assert_eq!(s.phi[3], 0.0);
        assert!(s.efficiency_gap().abs() < 1e-12);
    }

    #[test]
    fn repeated_feature_on_path() {
        let tree = split(
            0,
            5.0,
            split(0, 2.0, leaf(1.0), leaf(2.0)),
            split(1, 0.0, leaf(3.0), leaf(4.0)),
        );
        let model = forest_of(vec![*tree], 2);
        let bg = background(&[&[1.0, 1.0], &[3.0, -1.0], &[6.0, 1.0], &[7.0, -2.0], &[2.0, 0.0]]);
        for x in [[1.5, 0.5], [3.0, -3.0], [8.0, 2.0], [2.0, 0.0]] {
            let e = shapley_exact(&model, &x, &bg).unwrap();
            let b = shapley_brute(&model, &x, &bg).unwrap();
            for k in 0..2 {
                assert!((e.phi[k] - b.phi[k]).abs() < 1e-12, "{x:?}");
            }
            assert!((e.base_value - b.base_value).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_rejects_wide_models() {
        let model = forest_of(vec![*leaf(1.0)], 13);
        let bg = background(&[&[0.0; 13]]);
        assert!(shapley_brute(&model, &[0.0; 13], &bg).is_err());
    }

    #[test]
    fn empty_background_rejected() {
        let model = forest_of(vec![*leaf(1.0)], 1);
        let bg = background(&[&[0.0]]).filter(|_| false);
        assert!(shapley_exact(&model, &[0.0], &bg).is_err());
        assert!(shapley_brute(&model, &[0.0], &bg).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn unanimity_coefficients_balance() {
        let c = unanimity_coefficients(8);
        for d in 1..=8usize {
            assert!((d as f64 * c[d][0] - 1.0).abs() < 1e-14);
            for u in 1..=8usize {
                // members of D gain what members of U lose
                assert!((d as f64 * c[d][u] - u as f64 * c[u][d]).abs() < 1e-14);
            }
        }
        // d = 1, u = 2: 1 / (1 · 3)
        assert!((c[1][2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn period_reports_partition() {
        let rows: Vec<DesignRow> = (0..40)
            .map(|i| DesignRow {
                country: "AAA".into(),
                year: 1990 + i,
                features: vec![(i % 7) as f64, (i % 3) as f64],
                target: ((i % 7) * (i % 3)) as f64,
            })
            .collect();
        let d = DesignMatrix::new(vec!["a".into(), "b".into()], rows, false).unwrap();
        let model = fit_forest(&d, &ForestConfig::new(2, 10, 1)).unwrap();
        let ex = ForestExplainer::new(&model, &d).unwrap();
        let reports = ex.importance_by_period(&d, &[(1990, 2009), (2010, 2029)]).unwrap();
        for r in &reports {
            assert!((r.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let whole = ex.importance_by_period(&d, &[(1990, 2029)]).unwrap();
        let direct = ex.importance(&d, true).unwrap();
        assert_eq!(whole[0].values, direct.values);
        assert!(ex.importance_by_period(&d, &[(1800, 1801)]).is_err());
    }

    #[test]
    fn background_subsample_is_seeded() {
        let rows: Vec<DesignRow> = (0..30)
            .map(|i| DesignRow {
                country: "AAA".into(),
                year: i,
                features: vec![i as f64],
                target: 0.0,
            })
            .collect();
        let d = DesignMatrix::new(vec!["a".into()], rows, false).unwrap();
        let a = background_subsample(&d, 10, 3);
        assert_eq!(a.len(), 10);
        assert_eq!(a, background_subsample(&d, 10, 3));
        assert_eq!(background_subsample(&d, 50, 3), d);
    }
}
