//! Forecast evaluation: RMSE/MAE metrics, hyperparameter grids comparing the
//! forest with the AR(1) and OLS benchmarks, and the final-year cross-country
//! scatter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_ar1_with, fit_ols_with, RobustSe};
use crate::cart::GrowConfig;
use crate::forest::{fit_forest, ForestConfig};
use crate::panel::DesignMatrix;
use crate::{rng, Error, Result};

/// Benchmark metrics at or below this are treated as zero when forming
/// ratios.
pub const ZERO_METRIC: f64 = 1e-9;

pub const DEFAULT_LEAF_CAPS: [usize; 6] = [5, 10, 15, 20, 25, 30];
pub const DEFAULT_TREE_COUNTS: [usize; 4] = [50, 100, 200, 500];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

pub fn metrics(predictions: &[f64], actuals: &[f64]) -> Result<Metrics> {
    if predictions.len() != actuals.len() {
        return Err(Error::DimensionMismatch {
            expected: actuals.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Degenerate("metrics of an empty forecast".into()));
    }
    let n = predictions.len() as f64;
    let (sq, abs) = predictions.iter().zip(actuals).fold((0.0, 0.0), |(sq, abs), (p, a)| {
        (sq + (p - a).powi(2), abs + (p - a).abs())
    });
    let m = Metrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        n: predictions.len(),
    };
    debug_assert!(m.mae <= m.rmse * (1.0 + 1e-12) + 1e-300);
    Ok(m)
}

/// `model / benchmark`, undefined when the benchmark is (numerically) zero.
pub fn ratio(model: f64, benchmark: f64) -> Option<f64> {
    (benchmark > ZERO_METRIC).then(|| model / benchmark)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    InSample,
    Holdout,
}

/// Which year decides a row's side of a holdout split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitBy {
    #[default]
    PredictorYear,
    TargetYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub train_end_year: i32,
    pub test_first_year: i32,
    pub test_last_year: i32,
    pub split_by: SplitBy,
}

impl HoldoutSplit {
    fn year(&self, predictor_year: i32) -> i32 {
        match self.split_by {
            SplitBy::PredictorYear => predictor_year,
            SplitBy::TargetYear => predictor_year + 1,
        }
    }

    /// Train and test partitions of `design`.
    pub fn apply(&self, design: &DesignMatrix) -> Result<(DesignMatrix, DesignMatrix)> {
        let train = design.filter(|r| self.year(r.year) <= self.train_end_year);
        let test = design.filter(|r| (self.test_first_year..=self.test_last_year).contains(&self.year(r.year)));
        if train.is_empty() {
            return Err(Error::EmptyPartition("training partition".into()));
        }
        if test.is_empty() {
            return Err(Error::EmptyPartition("test partition".into()));
        }
        Ok((train, test))
    }
}

/// Hyperparameter grid and shared forest settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub leaf_caps: Vec<usize>,
    pub tree_counts: Vec<usize>,
    pub master_seed: u64,
    pub mtry: Option<usize>,
    pub subsample_fraction: f64,
    pub with_replacement: bool,
    pub se_kind: RobustSe,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            leaf_caps: DEFAULT_LEAF_CAPS.to_vec(),
            tree_counts: DEFAULT_TREE_COUNTS.to_vec(),
            master_seed: 42,
            mtry: None,
            subsample_fraction: 2.0 / 3.0,
            with_replacement: false,
            se_kind: RobustSe::Hc0,
        }
    }
}

impl GridSpec {
    /// Forest settings for one cell. The seed depends only on
    /// `(master_seed, leaf_cap, n_trees)`.
    pub fn cell_config(&self, leaf_cap: usize, n_trees: usize) -> ForestConfig {
        ForestConfig {
            n_trees,
            grow: GrowConfig {
                leaf_cap,
                mtry: self.mtry,
                max_depth: None,
            },
            subsample_fraction: self.subsample_fraction,
            with_replacement: self.with_replacement,
            master_seed: rng::derive_seed(self.master_seed, &[leaf_cap as u64, n_trees as u64]),
        }
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        self.leaf_caps
            .iter()
            .flat_map(|&l| self.tree_counts.iter().map(move |&t| (l, t)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub leaf_cap: usize,
    pub n_trees: usize,
    pub rf: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub mode: GridMode,
    /// `in-sample` or the test-year range.
    pub label: String,
    pub ar1: Metrics,
    pub ols: Metrics,
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn cell(&self, leaf_cap: usize, n_trees: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.leaf_cap == leaf_cap && c.n_trees == n_trees)
    }

    /// `[rmse/ar1, rmse/ols, mae/ar1, mae/ols]`.
    pub fn ratios(&self, cell: &GridCell) -> [Option<f64>; 4] {
        [
            ratio(cell.rf.rmse, self.ar1.rmse),
            ratio(cell.rf.rmse, self.ols.rmse),
            ratio(cell.rf.mae, self.ar1.mae),
            ratio(cell.rf.mae, self.ols.mae),
        ]
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "leaf_cap",
        "n_trees",
        "rmse_ar1",
        "rmse_ols",
        "rmse_rf",
        "mae_ar1",
        "mae_ols",
        "mae_rf",
        "rmse_ratio_ar1",
        "rmse_ratio_ols",
        "mae_ratio_ar1",
        "mae_ratio_ols",
    ];

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        let f = |v: f64| format!("{v:.6}");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        for cell in &self.cells {
            let [r_ar1, r_ols, m_ar1, m_ols] = self.ratios(cell);
            w.write_record([
                cell.leaf_cap.to_string(),
                cell.n_trees.to_string(),
                f(self.ar1.rmse),
                f(self.ols.rmse),
                f(cell.rf.rmse),
                f(self.ar1.mae),
                f(self.ols.mae),
                f(cell.rf.mae),
                opt(r_ar1),
                opt(r_ols),
                opt(m_ar1),
                opt(m_ols),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<grid>", e))?;
        Ok(())
    }

    /// JSON with the ratio columns materialized.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            #[serde(flatten)]
            cell: &'a GridCell,
            rmse_ratio_ar1: Option<f64>,
            rmse_ratio_ols: Option<f64>,
            mae_ratio_ar1: Option<f64>,
            mae_ratio_ols: Option<f64>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            mode: GridMode,
            label: &'a str,
            ar1: Metrics,
            ols: Metrics,
            rows: Vec<Row<'a>>,
        }
        let rows = self
            .cells
            .iter()
            .map(|cell| {
                let [a, b, c, d] = self.ratios(cell);
                Row {
                    cell,
                    rmse_ratio_ar1: a,
                    rmse_ratio_ols: b,
                    mae_ratio_ar1: c,
                    mae_ratio_ols: d,
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&Doc {
            mode: self.mode,
            label: &self.label,
            ar1: self.ar1,
            ols: self.ols,
            rows,
        })?)
    }
}

/// Regressors of the OLS benchmark: every feature, minus the first country
/// dummy when dummies are present (the intercept absorbs it).
pub fn ols_subset(design: &DesignMatrix) -> Vec<usize> {
    let first_dummy = design
        .dummy_mode()
        .then(|| design.feature_names().iter().position(|n| n.starts_with("d_")))
        .flatten();
    (0..design.n_features()).filter(|&k| Some(k) != first_dummy).collect()
}

fn evaluate(
    mode: GridMode,
    label: String,
    train: &DesignMatrix,
    test: &DesignMatrix,
    spec: &GridSpec,
) -> Result<GridReport> {
    if spec.leaf_caps.is_empty() || spec.tree_counts.is_empty() {
        return Err(Error::InvalidParameter(
            "grid needs at least one leaf cap and one tree count".into(),
        ));
    }
    let actual = test.targets();
    let ar1 = fit_ar1_with(train, spec.se_kind)?;
    let ols = fit_ols_with(train, &ols_subset(train), spec.se_kind)?;
    let ar1_metrics = metrics(&ar1.predict_design(test)?, &actual)?;
    let ols_metrics = metrics(&ols.predict_design(test)?, &actual)?;
    let cells = spec
        .cells()
        .into_par_iter()
        .map(|(leaf_cap, n_trees)| {
            let model = fit_forest(train, &spec.cell_config(leaf_cap, n_trees))?;
            Ok(GridCell {
                leaf_cap,
                n_trees,
                rf: metrics(&model.predict_design(test)?, &actual)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport {
        mode,
        label,
        ar1: ar1_metrics,
        ols: ols_metrics,
        cells,
    })
}

/// All models fitted and evaluated on every row.
pub fn insample_grid(design: &DesignMatrix, spec: &GridSpec) -> Result<GridReport> {
    if design.is_empty() {
        return Err(Error::EmptyDesign);
    }
    evaluate(GridMode::InSample, "in-sample".into(), design, design, spec)
}

/// Models fitted on the training partition only, evaluated on the test years.
pub fn holdout_grid(design: &DesignMatrix, split: &HoldoutSplit, spec: &GridSpec) -> Result<GridReport> {
    let (train, test) = split.apply(design)?;
    let label = format!("{}-{}", split.test_first_year, split.test_last_year);
    evaluate(GridMode::Holdout, label, &train, &test, spec)
}

/// Squared Pearson correlation; `None` when either side has no variance.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab * sab / (saa * sbb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub country: String,
    pub rf: f64,
    pub ols: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterReport {
    pub target_year: i32,
    pub points: Vec<ScatterPoint>,
    pub rf_r2: Option<f64>,
    pub ols_r2: Option<f64>,
}

impl ScatterReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["country", "model", "predicted", "actual"])?;
        for p in &self.points {
            for (model, v) in [("rf", p.rf), ("ols", p.ols)] {
                w.write_record([
                    p.country.clone(),
                    model.into(),
                    format!("{v:.6}"),
                    format!("{:.6}", p.actual),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<scatter>", e))?;
        Ok(())
    }
}

/// Fits on rows whose target year is at most `train_end_year`, then predicts
/// `target_year` for every country from its `target_year - 1` predictors.
pub fn final_year_scatter(
    design: &DesignMatrix,
    train_end_year: i32,
    target_year: i32,
    forest: &ForestConfig,
    se_kind: RobustSe,
) -> Result<ScatterReport> {
    let train = design.filter(|r| r.year < train_end_year);
    let test = design.filter(|r| r.year + 1 == target_year);
    if train.is_empty() {
        return Err(Error::EmptyPartition("training partition".into()));
    }
    if test.countries().len() < 2 {
        return Err(Error::EmptyPartition(format!(
            "target year {target_year} observed for fewer than 2 countries"
        )));
    }
    let model = fit_forest(&train, forest)?;
    let ols = fit_ols_with(&train, &ols_subset(&train), se_kind)?;
    let rf_pred = model.predict_design(&test)?;
    let ols_pred = ols.predict_design(&test)?;
    let points: Vec<ScatterPoint> = test
        .rows()
        .iter()
        .zip(rf_pred.iter().zip(&ols_pred))
        .map(|(r, (&rf, &ols))| ScatterPoint {
            country: r.country.clone(),
            rf,
            ols,
            actual: r.target,
        })
        .collect();
    let actual: Vec<f64> = points.iter().map(|p| p.actual).collect();
    Ok(ScatterReport {
        target_year,
        rf_r2: squared_correlation(&rf_pred, &actual),
        ols_r2: squared_correlation(&ols_pred, &actual),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecast() {
        let m = metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.rmse, m.mae, m.n), (0.0, 0.0, 2));
    }

    #[test]
    fn symmetric_unit_errors() {
        let m = metrics(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!((m.rmse, m.mae), (1.0, 1.0));
    }

    #[test]
    fn uneven_errors() {
        let m = metrics(&[5.0, 7.0], &[5.0, 5.0]).unwrap();
        assert!((m.rmse - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mae, 1.0);
    }

    #[test]
    fn metrics_errors() {
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn ratio_guard() {
        assert_eq!(ratio(1.0, 2.0), Some(0.5));
        assert_eq!(ratio(1.0, 0.0), None);
        assert_eq!(ratio(1.0, 1e-14), None);
    }

    #[test]
    fn r2_cases() {
        assert_eq!(squared_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(squared_correlation(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), None);
        let r = squared_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cell_seeds_depend_on_cell_only() {
        let spec = GridSpec::default();
        let a = spec.cell_config(10, 500);
        let mut other = spec.clone();
        other.leaf_caps = vec![10];
        other.tree_counts = vec![500];
        assert_eq!(a, other.cell_config(10, 500));
        assert_ne!(a.master_seed, spec.cell_config(10, 200).master_seed);
    }
}
