//! Partial-effect slices of a fitted forest.
//!
//! The forest is evaluated along one or two covariates while every other
//! feature is pinned at its training mean (optionally overridden). This is a
//! conditional slice through the mean point, not a marginal partial
//! dependence average over the data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forest::ForestModel;
use crate::panel::{linspace, quantile, DesignMatrix};
use crate::{Error, Result};

/// Number of points in a default grid.
pub const DEFAULT_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectAxis {
    pub feature: usize,
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectGrid {
    pub axes: Vec<EffectAxis>,
    /// Full feature vector used for the non-axis features. Entries at axis
    /// positions are overwritten by the grid values.
    pub conditioning: Vec<f64>,
    /// Row-major over the axes: the first axis varies slowest.
    pub responses: Vec<f64>,
    /// True where some axis value lies outside the training range.
    pub outside_hull: Vec<bool>,
}

impl EffectGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Response of a surface at `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.responses[i * self.axes[1].values.len() + j]
    }

    /// Long format: one column per axis, then `response,outside_hull`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        header.push("response".into());
        header.push("outside_hull".into());
        w.write_record(&header)?;
        for (idx, (&r, &flag)) in self.responses.iter().zip(&self.outside_hull).enumerate() {
            let mut record: Vec<String> = self.point(idx).into_iter().map(|v| format!("{v:.6}")).collect();
            record.push(format!("{r:.9}"));
            record.push(flag.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<effects>", e))?;
        Ok(())
    }

    fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            let len = axis.values.len();
            out[a] = axis.values[idx % len];
            idx /= len;
        }
        out
    }
}

fn check_feature(model: &ForestModel, k: usize) -> Result<()> {
    if k >= model.n_features() {
        return Err(Error::InvalidParameter(format!(
            "feature {k} out of range for {} features",
            model.n_features()
        )));
    }
    Ok(())
}

fn conditioning(model: &ForestModel, overrides: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut base = model.feature_means.clone();
    for &(k, v) in overrides {
        check_feature(model, k)?;
        base[k] = v;
    }
    Ok(base)
}

fn in_range(model: &ForestModel, k: usize, v: f64) -> bool {
    let (lo, hi) = model.feature_ranges[k];
    (lo..=hi).contains(&v)
}

/// Forest response along `grid` for `feature`, other features at training
/// means unless listed in `overrides`.
pub fn partial_curve(
    model: &ForestModel,
    feature: usize,
    grid: &[f64],
    overrides: &[(usize, f64)],
) -> Result<EffectGrid> {
    check_feature(model, feature)?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if overrides.iter().any(|&(k, _)| k == feature) {
        return Err(Error::InvalidParameter(format!(
            "axis feature {} also appears in overrides",
            model.feature_names[feature]
        )));
    }
    let base = conditioning(model, overrides)?;
    let responses = grid
        .par_iter()
        .map(|&v| {
            let mut x = base.clone();
            x[feature] = v;
            model.route(&x)
        })
        .collect();
    Ok(EffectGrid {
        axes: vec![EffectAxis {
            feature,
            name: model.feature_names[feature].clone(),
            values: grid.to_vec(),
        }],
        conditioning: base,
        responses,
        outside_hull: grid.iter().map(|&v| !in_range(model, feature, v)).collect(),
    })
}

/// `|grid_i| × |grid_j|` response matrix, remaining features at means.
pub fn partial_surface(
    model: &ForestModel,
    feature_i: usize,
    feature_j: usize,
    grid_i: &[f64],
    grid_j: &[f64],
) -> Result<EffectGrid> {
    check_feature(model, feature_i)?;
    check_feature(model, feature_j)?;
    if feature_i == feature_j {
        return Err(Error::InvalidParameter("surface axes must be distinct features".into()));
    }
    if grid_i.is_empty() || grid_j.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let base = model.feature_means.clone();
    let points: Vec<(f64, f64)> = grid_i
        .iter()
        .flat_map(|&a| grid_j.iter().map(move |&b| (a, b)))
        .collect();
    let responses = points
        .par_iter()
        .map(|&(a, b)| {
            let mut x = base.clone();
            x[feature_i] = a;
            x[feature_j] = b;
            model.route(&x)
        })
        .collect();
    let outside_hull = points
        .iter()
        .map(|&(a, b)| !in_range(model, feature_i, a) || !in_range(model, feature_j, b))
        .collect();
    Ok(EffectGrid {
        axes: vec![
            EffectAxis {
                feature: feature_i,
                name: model.feature_names[feature_i].clone(),
                values: grid_i.to_vec(),
            },
            EffectAxis {
                feature: feature_j,
                name: model.feature_names[feature_j].clone(),
                values: grid_j.to_vec(),
            },
        ],
        conditioning: base,
        responses,
        outside_hull,
    })
}

/// Evenly spaced grid over the training range of `feature`.
pub fn default_grid(model: &ForestModel, feature: usize, points: usize) -> Result<Vec<f64>> {
    check_feature(model, feature)?;
    let (lo, hi) = model.feature_ranges[feature];
    Ok(linspace(lo, hi, points))
}

/// 25th, 50th and 75th percentiles of a design column.
pub fn quartiles(design: &DesignMatrix, feature: usize) -> Result<[f64; 3]> {
    if design.is_empty() || feature >= design.n_features() {
        return Err(Error::InvalidParameter(
            "quartiles need a nonempty design column".into(),
        ));
    }
    let mut col = design.column(feature);
    col.sort_by(f64::total_cmp);
    Ok([quantile(&col, 0.25), quantile(&col, 0.5), quantile(&col, 0.75)])
}

/// One curve along `feature` per value of `family_feature`.
pub fn curve_family(
    model: &ForestModel,
    feature: usize,
    grid: &[f64],
    family_feature: usize,
    family_values: &[f64],
) -> Result<Vec<EffectGrid>> {
    family_values
        .iter()
        .map(|&v| partial_curve(model, feature, grid, &[(family_feature, v)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart::{GrowConfig, RegressionTree, TreeNode};
    use crate::forest::{Fingerprint, ForestConfig};

    fn model_of(roots: Vec<TreeNode>, means: Vec<f64>) -> ForestModel {
        let p = means.len();
        let names: Vec<String> = (0..p).map(|k| format!("x{k}")).collect();
        ForestModel {
            config: ForestConfig {
                n_trees: roots.len(),
                ..Default::default()
            },
            trees: roots
                .into_iter()
                .map(|root| RegressionTree {
                    root,
                    feature_names: names.clone(),
                    config: GrowConfig::default(),
                    training_rows: vec![],
                })
                .collect(),
            feature_names: names,
            fingerprint: Fingerprint {
                rows: 0,
                feature_hash: 0,
            },
            feature_ranges: vec![(-10.0, 10.0); p],
            feature_means: means,
            target_range: (0.0, 1.0),
        }
    }

    fn step(feature: usize, t: f64, a: f64, b: f64) -> TreeNode {
        TreeNode::Split {
            feature,
            threshold: t,
            n: 2,
            left: Box::new(TreeNode::Leaf { prediction: a, n: 1 }),
            right: Box::new(TreeNode::Leaf { prediction: b, n: 1 }),
        }
    }

    #[test]
    fn constant_model_is_flat() {
        let m = model_of(vec![TreeNode::Leaf { prediction: 2.0, n: 3 }], vec![0.0, 0.0]);
        let c = partial_curve(&m, 0, &[-1.0, 0.0, 1.0], &[]).unwrap();
        assert_eq!(c.responses, vec![2.0; 3]);
        let s = partial_surface(&m, 0, 1, &[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.responses, vec![2.0; 6]);
        assert_eq!(s.shape(), vec![2, 3]);
    }

    #[test]
    fn single_split_gives_step() {
        let m = model_of(vec![step(0, 1.0, -3.0, 7.0)], vec![0.0, 0.0]);
        let grid = linspace(-2.0, 4.0, 13);
        let c = partial_curve(&m, 0, &grid, &[]).unwrap();
        for (v, r) in grid.iter().zip(&c.responses) {
            assert_eq!(*r, if *v <= 1.0 { -3.0 } else { 7.0 });
        }
    }

    #[test]
    fn axis_in_overrides_rejected() {
        let m = model_of(vec![step(0, 1.0, 0.0, 1.0)], vec![0.0, 0.0]);
        assert!(partial_curve(&m, 0, &[1.0], &[(0, 2.0)]).is_err());
        assert!(partial_curve(&m, 0, &[], &[]).is_err());
        assert!(partial_surface(&m, 1, 1, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn overrides_move_conditioning_point() {
        let m = model_of(vec![step(1, 0.5, 10.0, 20.0)], vec![0.0, 0.0]);
        let low = partial_curve(&m, 0, &[0.0], &[]).unwrap();
        let high = partial_curve(&m, 0, &[0.0], &[(1, 1.0)]).unwrap();
        assert_eq!((low.responses[0], high.responses[0]), (10.0, 20.0));
        assert_eq!(high.conditioning, vec![0.0, 1.0]);
    }

    #[test]
    fn hull_flags() {
        let m = model_of(vec![step(0, 1.0, 0.0, 1.0)], vec![0.0]);
        let c = partial_curve(&m, 0, &[-11.0, 0.0, 10.0, 10.5], &[]).unwrap();
        assert_eq!(c.outside_hull, vec![true, false, false, true]);
    }

    #[test]
    fn csv_layout() {
        let m = model_of(vec![step(0, 0.0, 1.0, 2.0)], vec![0.0, 0.0]);
        let s = partial_surface(&m, 0, 1, &[-1.0, 1.0], &[5.0, 6.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,x1,response,outside_hull");
        assert_eq!(lines[2], "-1.000000,6.000000,1.000000000,false");
        assert_eq!(lines.len(), 5);
    }
}
