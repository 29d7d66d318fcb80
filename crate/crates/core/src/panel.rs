//! Panel ingestion, supervised design construction and descriptive statistics.
//!
//! Input is a single long-format CSV with one row per `(country, year)`:
//!
//! ```text
//! country,year,hp_growth,cpi,gdp_growth,i_short,i_long,stock_return,credit_growth,pop_growth,price_rent,vxo
//! BEL,1988,5.1,1.2,4.7,6.7,7.9,12.0,8.1,0.2,71.3,
//! ```
//!
//! Empty cells are missing values. [`build_design`] turns the panel into
//! supervised rows pairing year-`t` predictors with year-`t+1` house-price
//! growth, dropping any row with a missing input (listwise deletion).

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Name of the target series in the default schema.
pub const TARGET: &str = "hp_growth";

/// Feature name given to the current-year value of the target series.
pub const MOMENTUM: &str = "momentum";

/// Predictor columns of the default schema, in design order after momentum.
pub const DEFAULT_PREDICTORS: [&str; 9] = [
    "cpi",
    "gdp_growth",
    "i_short",
    "i_long",
    "stock_return",
    "credit_growth",
    "pop_growth",
    "price_rent",
    "vxo",
];

/// The 13-country default roster.
pub const DEFAULT_COUNTRIES: [&str; 13] = [
    "BEL", "CAN", "CHE", "DEU", "DNK", "GBR", "JPN", "KOR", "NLD", "NOR", "NZL", "SWE", "USA",
];

/// Variable layout of a panel: one target series plus predictor series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    pub predictors: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            target: TARGET.to_string(),
            predictors: DEFAULT_PREDICTORS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Schema {
    /// Target first, then predictors.
    pub fn variables(&self) -> Vec<&str> {
        std::iter::once(self.target.as_str())
            .chain(self.predictors.iter().map(String::as_str))
            .collect()
    }

    /// Design feature names: momentum followed by the predictors.
    pub fn feature_names(&self) -> Vec<String> {
        std::iter::once(MOMENTUM.to_string())
            .chain(self.predictors.iter().cloned())
            .collect()
    }
}

/// Annual observations for one country.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    country: String,
    years: Vec<i32>,
    values: BTreeMap<String, Vec<Option<f64>>>,
}

impl CountrySeries {
    /// Builds a series from `(year, values)` pairs where `values` follows
    /// `variables`. Years are sorted; duplicates are rejected.
    pub fn new(
        country: impl Into<String>,
        variables: &[&str],
        mut observations: Vec<(i32, Vec<Option<f64>>)>,
    ) -> Result<Self> {
        let country = country.into();
        observations.sort_by_key(|(year, _)| *year);
        if let Some(w) = observations.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateObservation {
                line: 0,
                country,
                year: w[0].0,
            });
        }
        let mut values: BTreeMap<String, Vec<Option<f64>>> = variables
            .iter()
            .map(|v| (v.to_string(), Vec::with_capacity(observations.len())))
            .collect();
        let mut years = Vec::with_capacity(observations.len());
        for (year, row) in observations {
            if row.len() != variables.len() {
                return Err(Error::DimensionMismatch {
                    expected: variables.len(),
                    got: row.len(),
                });
            }
            years.push(year);
            for (var, v) in variables.iter().zip(row) {
                values.get_mut(*var).expect("variable inserted above").push(v);
            }
        }
        Ok(CountrySeries { country, years, values })
    }

    pub fn country(&self) -> &str {
        &self.country
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    /// Full column for a variable, aligned with [`years`](Self::years).
    pub fn series(&self, variable: &str) -> Option<&[Option<f64>]> {
        self.values.get(variable).map(Vec::as_slice)
    }

    pub fn value(&self, variable: &str, year: i32) -> Option<f64> {
        let pos = self.years.binary_search(&year).ok()?;
        self.values.get(variable)?[pos]
    }
}

/// A set of country series sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    schema: Schema,
    countries: Vec<CountrySeries>,
}

impl PanelDataset {
    /// Assembles a panel, checking that every series carries every variable.
    pub fn new(schema: Schema, mut countries: Vec<CountrySeries>) -> Result<Self> {
        countries.sort_by(|a, b| a.country.cmp(&b.country));
        if let Some(w) = countries.windows(2).find(|w| w[0].country == w[1].country) {
            return Err(Error::InvalidParameter(format!("country {} given twice", w[0].country)));
        }
        for c in &countries {
            for var in schema.variables() {
                if c.series(var).is_none() {
                    return Err(Error::MissingColumn(format!("{var} (country {})", c.country)));
                }
            }
        }
        Ok(PanelDataset { schema, countries })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn countries(&self) -> &[CountrySeries] {
        &self.countries
    }

    pub fn country(&self, code: &str) -> Option<&CountrySeries> {
        self.countries.iter().find(|c| c.country == code)
    }

    pub fn country_codes(&self) -> Vec<String> {
        self.countries.iter().map(|c| c.country.clone()).collect()
    }
}

type Observation = (i32, Vec<Option<f64>>);

/// Reads a long-format panel. Extra columns are ignored.
pub fn load_panel<R: Read>(source: R, schema: &Schema) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let country_col = column("country")?;
    let year_col = column("year")?;
    let variables = schema.variables();
    let var_cols = variables.iter().map(|v| column(v)).collect::<Result<Vec<_>>>()?;

    let mut by_country: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    let mut seen: HashMap<(String, i32), u64> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| record.get(col).unwrap_or("");
        let country = field(country_col).to_string();
        if country.is_empty() {
            return Err(Error::BadCell {
                line,
                column: "country".into(),
                value: String::new(),
            });
        }
        let year: i32 = field(year_col).parse().map_err(|_| Error::BadCell {
            line,
            column: "year".into(),
            value: field(year_col).to_string(),
        })?;
        if seen.insert((country.clone(), year), line).is_some() {
            return Err(Error::DuplicateObservation { line, country, year });
        }
        let values = var_cols
            .iter()
            .zip(&variables)
            .map(|(&col, name)| {
                let raw = field(col);
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::BadCell {
                        line,
                        column: name.to_string(),
                        value: raw.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        by_country.entry(country).or_default().push((year, values));
    }

    let series = by_country
        .into_iter()
        .map(|(country, obs)| CountrySeries::new(country, &variables, obs))
        .collect::<Result<Vec<_>>>()?;
    PanelDataset::new(schema.clone(), series)
}

pub fn load_panel_path(path: impl AsRef<Path>, schema: &Schema) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_panel(std::io::BufReader::new(file), schema)
}

/// Writes a panel in the long format read by [`load_panel`].
pub fn write_panel_csv<W: std::io::Write>(panel: &PanelDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let vars = panel.schema().variables();
    let mut header = vec!["country", "year"];
    header.extend(vars.iter().copied());
    w.write_record(&header)?;
    for c in panel.countries() {
        for (i, year) in c.years().iter().enumerate() {
            let mut record = vec![c.country().to_string(), year.to_string()];
            record.extend(
                vars.iter()
                    .map(|v| c.series(v).expect("validated schema")[i].map_or_else(String::new, |x| x.to_string())),
            );
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io("<panel>", e))?;
    Ok(())
}

/// One supervised observation: predictors of `year`, target of `year + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub country: String,
    pub year: i32,
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: Vec<DesignRow>,
    feature_names: Vec<String>,
    dummy_mode: bool,
}

impl DesignMatrix {
    /// Builds a design from explicit rows. All rows must have
    /// `feature_names.len()` finite features and a finite target.
    pub fn new(feature_names: Vec<String>, rows: Vec<DesignRow>, dummy_mode: bool) -> Result<Self> {
        let p = feature_names.len();
        for row in &rows {
            if row.features.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.features.len(),
                });
            }
            if !row.target.is_finite() || row.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value in row {}/{}",
                    row.country, row.year
                )));
            }
        }
        Ok(DesignMatrix {
            rows,
            feature_names,
            dummy_mode,
        })
    }

    pub fn rows(&self) -> &[DesignRow] {
        &self.rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn dummy_mode(&self) -> bool {
        self.dummy_mode
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features[k]).collect()
    }

    /// Rows satisfying `keep`, in original order.
    pub fn filter(&self, mut keep: impl FnMut(&DesignRow) -> bool) -> DesignMatrix {
        DesignMatrix {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            feature_names: self.feature_names.clone(),
            dummy_mode: self.dummy_mode,
        }
    }

    /// Rows whose predictor year lies in `first..=last`.
    pub fn years(&self, first: i32, last: i32) -> DesignMatrix {
        self.filter(|r| (first..=last).contains(&r.year))
    }

    /// Distinct countries in row order of first appearance.
    pub fn countries(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.country) {
                out.push(r.country.clone());
            }
        }
        out
    }

    /// Per-feature training means.
    pub fn feature_means(&self) -> Vec<f64> {
        let n = self.rows.len().max(1) as f64;
        (0..self.n_features())
            .map(|k| self.rows.iter().map(|r| r.features[k]).sum::<f64>() / n)
            .collect()
    }

    /// Per-feature `(min, max)` over the rows.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_features())
            .map(|k| {
                self.rows
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                        (lo.min(r.features[k]), hi.max(r.features[k]))
                    })
            })
            .collect()
    }
}

/// Pairs year-`t` predictors with year-`t+1` target growth.
///
/// The current-year target value enters as the `momentum` feature. Any row
/// with a missing predictor or a missing target is dropped. With
/// `dummy_mode`, one 0/1 indicator per panel country is appended, named
/// `d_<code>`.
pub fn build_design(panel: &PanelDataset, dummy_mode: bool) -> Result<DesignMatrix> {
    let schema = panel.schema();
    let mut feature_names = schema.feature_names();
    let codes = panel.country_codes();
    if dummy_mode {
        feature_names.extend(codes.iter().map(|c| format!("d_{c}")));
    }

    let mut rows = Vec::new();
    for (ci, series) in panel.countries().iter().enumerate() {
        let target = series.series(&schema.target).expect("validated schema");
        let predictors: Vec<&[Option<f64>]> = schema
            .predictors
            .iter()
            .map(|v| series.series(v).expect("validated schema"))
            .collect();
        for (i, w) in series.years().windows(2).enumerate() {
            if w[1] != w[0] + 1 {
                continue;
            }
            let Some(next) = target[i + 1] else { continue };
            let Some(momentum) = target[i] else { continue };
            let Some(rest) = predictors.iter().map(|s| s[i]).collect::<Option<Vec<f64>>>() else {
                continue;
            };
            let mut features = Vec::with_capacity(feature_names.len());
            features.push(momentum);
            features.extend(rest);
            if dummy_mode {
                features.extend((0..codes.len()).map(|j| if j == ci { 1.0 } else { 0.0 }));
            }
            rows.push(DesignRow {
                country: series.country().to_string(),
                year: w[0],
                features,
                target: next,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDesign);
    }
    Ok(DesignMatrix {
        rows,
        feature_names,
        dummy_mode,
    })
}

/// Mean, standard deviation (n − 1 denominator), min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl VarStats {
    pub fn from_values(values: &[f64]) -> Option<VarStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        Some(VarStats { n, mean, sd, min, max })
    }
}

/// Pooled moments of the supervised target.
///
/// `skewness` and `kurtosis` are standardized third and fourth central
/// moments (a Gaussian has kurtosis 3). Both are `None` for a sample with
/// zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMoments {
    pub stats: VarStats,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub target: TargetMoments,
    /// Raw panel variables, schema order.
    pub variables: Vec<(String, VarStats)>,
    /// Target-series growth by country.
    pub by_country: Vec<(String, VarStats)>,
}

pub fn moments(values: &[f64]) -> Result<TargetMoments> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 observations, got {}",
            values.len()
        )));
    }
    let stats = VarStats::from_values(values).expect("nonempty");
    let n = values.len() as f64;
    let m2 = values.iter().map(|v| (v - stats.mean).powi(2)).sum::<f64>() / n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        let m3 = values.iter().map(|v| (v - stats.mean).powi(3)).sum::<f64>() / n;
        let m4 = values.iter().map(|v| (v - stats.mean).powi(4)).sum::<f64>() / n;
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(TargetMoments {
        stats,
        skewness,
        kurtosis,
    })
}

/// Pooled target moments from the design, per-variable and per-country
/// statistics from the raw panel.
pub fn summary_stats(design: &DesignMatrix, panel: &PanelDataset) -> Result<SummaryStats> {
    let target = moments(&design.targets())?;
    let collect = |var: &str, series: &mut dyn Iterator<Item = &CountrySeries>| -> Vec<f64> {
        series
            .flat_map(|c| c.series(var).unwrap_or(&[]).iter().flatten().copied())
            .collect()
    };
    let variables = panel
        .schema()
        .variables()
        .into_iter()
        .filter_map(|var| {
            let vals = collect(var, &mut panel.countries().iter());
            VarStats::from_values(&vals).map(|s| (var.to_string(), s))
        })
        .collect();
    let target_name = panel.schema().target.as_str();
    let by_country = panel
        .countries()
        .iter()
        .filter_map(|c| {
            let vals = collect(target_name, &mut std::iter::once(c));
            VarStats::from_values(&vals).map(|s| (c.country().to_string(), s))
        })
        .collect();
    Ok(SummaryStats {
        target,
        variables,
        by_country,
    })
}

impl SummaryStats {
    /// `section,name,n,mean,sd,min,max` rows plus pooled skewness/kurtosis.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["section", "name", "n", "mean", "sd", "min", "max"])?;
        let mut put = |section: &str, name: &str, s: &VarStats| {
            w.write_record([
                section.to_string(),
                name.to_string(),
                s.n.to_string(),
                fmt(s.mean),
                fmt(s.sd),
                fmt(s.min),
                fmt(s.max),
            ])
        };
        put("pooled_target", "target", &self.target.stats)?;
        for (name, s) in &self.variables {
            put("variable", name, s)?;
        }
        for (name, s) in &self.by_country {
            put("country", name, s)?;
        }
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt);
        w.write_record(["moment", "skewness", "", &opt(self.target.skewness), "", "", ""])?;
        w.write_record(["moment", "kurtosis", "", &opt(self.target.kurtosis), "", "", ""])?;
        w.flush().map_err(|e| Error::io("<stats>", e))?;
        Ok(())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Silverman's rule of thumb, `0.9 · min(sd, IQR/1.34) · n^(-1/5)`.
///
/// Falls back to whichever spread measure is positive; errors when the
/// sample has no spread at all.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let stats = VarStats::from_values(values).ok_or_else(|| Error::Degenerate("empty sample".into()))?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match (stats.sd > 0.0, iqr > 0.0) {
        (true, true) => stats.sd.min(iqr / 1.34),
        (true, false) => stats.sd,
        (false, true) => iqr / 1.34,
        (false, false) => {
            return Err(Error::Degenerate("zero spread, bandwidth undefined".into()));
        }
    };
    Ok(0.9 * spread * (values.len() as f64).powf(-0.2))
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Gaussian kernel density estimate evaluated at each grid point.
pub fn kernel_density(values: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if values.is_empty() {
        return Err(Error::Degenerate("kernel density of an empty sample".into()));
    }
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|&v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp())
                .sum::<f64>()
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
