//! Linear benchmarks: AR(1) on momentum and OLS on a feature subset, with
//! heteroskedasticity-robust (sandwich) standard errors.
//!
//! Coefficients come from a Householder QR of the regressor matrix, so the
//! normal equations are never formed explicitly.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::panel::{DesignMatrix, MOMENTUM};
use crate::{Error, Result};

/// Sandwich flavor. HC1 rescales HC0 by `n / (n - k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustSe {
    #[default]
    Hc0,
    Hc1,
}

impl std::str::FromStr for RobustSe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hc0" => Ok(RobustSe::Hc0),
            "hc1" => Ok(RobustSe::Hc1),
            other => Err(Error::InvalidParameter(format!("unknown robust SE kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// `"const"` followed by the regressor names.
    pub terms: Vec<String>,
    /// Design column of each non-constant regressor.
    pub feature_subset: Vec<usize>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Signed `coefficient / std_error`.
    pub t_stats: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// `None` for the intercept-only model.
    pub f_stat: Option<f64>,
    pub n: usize,
    pub k: usize,
    pub residual_ss: f64,
    pub se_kind: RobustSe,
    /// Diagonal of `(X'X)^{-1}`.
    pub xtx_inv_diag: Vec<f64>,
}

pub fn fit_ols(design: &DesignMatrix, feature_subset: &[usize]) -> Result<OlsFit> {
    fit_ols_with(design, feature_subset, RobustSe::Hc0)
}

pub fn fit_ols_with(design: &DesignMatrix, feature_subset: &[usize], se_kind: RobustSe) -> Result<OlsFit> {
    let p = design.n_features();
    if let Some(&k) = feature_subset.iter().find(|&&k| k >= p) {
        return Err(Error::InvalidParameter(format!(
            "feature {k} out of range for {p} features"
        )));
    }
    let n = design.len();
    let k = feature_subset.len() + 1;
    if n <= k {
        return Err(Error::Degenerate(format!("{n} observations for {k} coefficients")));
    }
    let mut terms = vec!["const".to_string()];
    terms.extend(feature_subset.iter().map(|&j| design.feature_names()[j].clone()));

    let x = DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0
        } else {
            design.rows()[i].features[feature_subset[j - 1]]
        }
    });
    let y = DVector::from_iterator(n, design.rows().iter().map(|r| r.target));

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let collinear: Vec<String> = (0..k)
        .filter(|&j| r[(j, j)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE))
        .map(|j| terms[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::SingularDesign(collinear));
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign(terms.clone()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::SingularDesign(terms.clone()))?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let resid = &y - &x * &beta;
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let row = x.row(i);
        meat += row.transpose() * row * resid[i].powi(2);
    }
    let mut cov = &xtx_inv * meat * &xtx_inv;
    if se_kind == RobustSe::Hc1 {
        cov *= n as f64 / (n - k) as f64;
    }

    let ssr = resid.norm_squared();
    let y_mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::Degenerate("target has zero variance".into()));
    }
    let r_squared = 1.0 - ssr / sst;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - k) as f64;
    let f_stat = (k > 1).then(|| (r_squared / (k - 1) as f64) / ((1.0 - r_squared) / (n - k) as f64));

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let t_stats = coefficients.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    Ok(OlsFit {
        terms,
        feature_subset: feature_subset.to_vec(),
        coefficients,
        std_errors,
        t_stats,
        r_squared,
        adj_r_squared,
        f_stat,
        n,
        k,
        residual_ss: ssr,
        se_kind,
        xtx_inv_diag: (0..k).map(|j| xtx_inv[(j, j)]).collect(),
    })
}

/// OLS on intercept plus every design feature.
pub fn fit_full_ols(design: &DesignMatrix, se_kind: RobustSe) -> Result<OlsFit> {
    let all: Vec<usize> = (0..design.n_features()).collect();
    fit_ols_with(design, &all, se_kind)
}

/// Regression of next-year growth on intercept and current-year growth.
pub fn fit_ar1(design: &DesignMatrix) -> Result<OlsFit> {
    fit_ar1_with(design, RobustSe::Hc0)
}

pub fn fit_ar1_with(design: &DesignMatrix, se_kind: RobustSe) -> Result<OlsFit> {
    let k = design
        .feature_index(MOMENTUM)
        .ok_or_else(|| Error::MissingColumn(MOMENTUM.into()))?;
    fit_ols_with(design, &[k], se_kind)
}

/// `intercept + coefficients · x`, where `x` holds the subset regressors only.
pub fn predict_linear(fit: &OlsFit, x: &[f64]) -> Result<f64> {
    if x.len() != fit.feature_subset.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.feature_subset.len(),
            got: x.len(),
        });
    }
    Ok(fit.coefficients[0] + fit.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
}

impl OlsFit {
    /// Prediction from a full design feature vector.
    pub fn predict_row(&self, features: &[f64]) -> Result<f64> {
        if let Some(&max) = self.feature_subset.iter().max() {
            if max >= features.len() {
                return Err(Error::DimensionMismatch {
                    expected: max + 1,
                    got: features.len(),
                });
            }
        }
        let sub: Vec<f64> = self.feature_subset.iter().map(|&j| features[j]).collect();
        predict_linear(self, &sub)
    }

    pub fn predict_design(&self, design: &DesignMatrix) -> Result<Vec<f64>> {
        design.rows().iter().map(|r| self.predict_row(&r.features)).collect()
    }

    /// Homoskedastic SEs with `sigma^2 = SSR / (n - k)`.
    pub fn classical_std_errors(&self) -> Vec<f64> {
        let s2 = self.residual_ss / (self.n - self.k) as f64;
        self.xtx_inv_diag.iter().map(|d| (s2 * d).sqrt()).collect()
    }
}

/// Two-sided normal critical values at 1/5/10%.
pub fn significance_stars(t: f64) -> &'static str {
    let t = t.abs();
    if t > 2.575_829_303_549 {
        "***"
    } else if t > 1.959_963_984_540 {
        "**"
    } else if t > 1.644_853_626_951 {
        "*"
    } else {
        ""
    }
}

/// Side-by-side text table: coefficient with stars, |t| underneath.
pub fn render_table(models: &[(&str, &OlsFit)]) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for (_, fit) in models {
        for t in &fit.terms {
            if !terms.contains(&t.as_str()) {
                terms.push(t);
            }
        }
    }
    let width = terms.iter().map(|t| t.len()).max().unwrap_or(0).max(14);
    let mut out = String::new();
    let _ = write!(out, "{:width$}", "");
    for (name, _) in models {
        let _ = write!(out, "  {name:>12}");
    }
    out.push('\n');
    for term in &terms {
        let lookup = |fit: &OlsFit| fit.terms.iter().position(|t| t == term);
        let _ = write!(out, "{term:width$}");
        for (_, fit) in models {
            match lookup(fit) {
                Some(j) => {
                    let cell = format!("{:.3}{}", fit.coefficients[j], significance_stars(fit.t_stats[j]));
                    let _ = write!(out, "  {cell:>12}");
                }
                None => {
                    let _ = write!(out, "  {:>12}", "");
                }
            }
        }
        out.push('\n');
        let _ = write!(out, "{:width$}", "");
        for (_, fit) in models {
            match lookup(fit) {
                Some(j) => {
                    let _ = write!(out, "  {:>12.2}", fit.t_stats[j].abs());
                }
                None => {
                    let _ = write!(out, "  {:>12}", "");
                }
            }
        }
        out.push('\n');
    }
    let mut summary = |label: &str, f: &dyn Fn(&OlsFit) -> String| {
        let _ = write!(out, "{label:width$}");
        for (_, fit) in models {
            let _ = write!(out, "  {:>12}", f(fit));
        }
        out.push('\n');
    };
    summary("observations", &|f| f.n.to_string());
    summary("R2", &|f| format!("{:.3}", f.r_squared));
    summary("Adjusted R2", &|f| format!("{:.3}", f.adj_r_squared));
    summary("F-statistic", &|f| f.f_stat.map_or("NA".into(), |v| format!("{v:.1}")));
    out
}

/// Long-format CSV: one line per (model, term) plus summary lines.
pub fn write_table_csv<W: std::io::Write>(models: &[(&str, &OlsFit)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "term", "coefficient", "std_error", "t_stat", "abs_t", "stars"])?;
    for (name, fit) in models {
        for j in 0..fit.k {
            w.write_record([
                name.to_string(),
                fit.terms[j].clone(),
                format!("{:.6}", fit.coefficients[j]),
                format!("{:.6}", fit.std_errors[j]),
                format!("{:.6}", fit.t_stats[j]),
                format!("{:.6}", fit.t_stats[j].abs()),
                significance_stars(fit.t_stats[j]).to_string(),
            ])?;
        }
        let f = fit.f_stat.map_or("NA".into(), |v| format!("{v:.6}"));
        for (term, value) in [
            ("observations", fit.n.to_string()),
            ("r_squared", format!("{:.6}", fit.r_squared)),
            ("adj_r_squared", format!("{:.6}", fit.adj_r_squared)),
            ("f_statistic", f),
        ] {
            w.write_record([
                name.to_string(),
                term.to_string(),
                value,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<ols table>", e))?;
    Ok(())
}
