//! Command-line front end.
//!
//! Every command reads a long-format panel CSV, writes its outputs into the
//! output directory, and writes `resolved_config.toml` next to them with
//! every default filled in. Settings come from built-in defaults, then an
//! optional TOML config file, then command-line flags (flags win).
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_ar1_with, fit_ols_with, render_table, write_table_csv, RobustSe};
use crate::cart::GrowConfig;
use crate::effects::{curve_family, default_grid, partial_curve, partial_surface, quartiles, EffectGrid};
use crate::evalgrid::{
    final_year_scatter, holdout_grid, insample_grid, ols_subset, GridMode, GridSpec, HoldoutSplit, SplitBy,
    DEFAULT_LEAF_CAPS, DEFAULT_TREE_COUNTS,
};
use crate::explain::{
    background_subsample, write_period_table, write_shapley_csv, ForestExplainer, ImportanceReport, ShapleyVector,
};
use crate::forest::{fit_forest, ForestConfig};
use crate::panel::{
    build_design, kernel_density, linspace, load_panel_path, silverman_bandwidth, summary_stats, DesignMatrix, Schema,
};
use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FORESTCAST_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub seed: u64,
    pub dummy_mode: bool,
    // forest
    pub leaf_cap: usize,
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub subsample_fraction: f64,
    pub with_replacement: bool,
    // grid
    pub mode: GridMode,
    pub leaf_caps: Vec<usize>,
    pub tree_counts: Vec<usize>,
    pub robust_se: RobustSe,
    pub train_end_year: i32,
    pub test_first_year: i32,
    pub test_last_year: i32,
    pub split_by: SplitBy,
    pub mse_curve: bool,
    // explain
    pub periods: Vec<String>,
    pub normalize: bool,
    pub background_size: Option<usize>,
    pub row_attributions: bool,
    // effects
    pub curve_features: Vec<String>,
    pub surface_features: Vec<String>,
    pub family_feature: Option<String>,
    pub grid_points: usize,
    // scatter
    pub scatter_train_end: i32,
    pub scatter_target_year: i32,
    // tree-dump
    pub tree_index: usize,
    pub render_depth: usize,
    // stats
    pub kde_points: usize,
    pub bandwidth: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            data: PathBuf::new(),
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            seed: 42,
            dummy_mode: false,
            leaf_cap: 10,
            n_trees: 500,
            mtry: None,
            subsample_fraction: 2.0 / 3.0,
            with_replacement: false,
            mode: GridMode::InSample,
            leaf_caps: DEFAULT_LEAF_CAPS.to_vec(),
            tree_counts: DEFAULT_TREE_COUNTS.to_vec(),
            robust_se: RobustSe::Hc0,
            train_end_year: 2014,
            test_first_year: 2015,
            test_last_year: 2019,
            split_by: SplitBy::PredictorYear,
            mse_curve: false,
            periods: vec!["1988-2019".into(), "2011-2019".into()],
            normalize: true,
            background_size: None,
            row_attributions: false,
            curve_features: vec!["cpi".into()],
            surface_features: vec!["price_rent".into(), "i_short".into()],
            family_feature: Some("price_rent".into()),
            grid_points: 50,
            scatter_train_end: 2018,
            scatter_target_year: 2019,
            tree_index: 0,
            render_depth: 4,
            kde_points: 200,
            bandwidth: None,
        }
    }
}

impl RunConfig {
    fn grid_spec(&self) -> GridSpec {
        GridSpec {
            leaf_caps: self.leaf_caps.clone(),
            tree_counts: self.tree_counts.clone(),
            master_seed: self.seed,
            mtry: self.mtry,
            subsample_fraction: self.subsample_fraction,
            with_replacement: self.with_replacement,
            se_kind: self.robust_se,
        }
    }

    fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            grow: GrowConfig {
                leaf_cap: self.leaf_cap,
                mtry: self.mtry,
                max_depth: None,
            },
            subsample_fraction: self.subsample_fraction,
            with_replacement: self.with_replacement,
            master_seed: self.seed,
        }
    }

    fn holdout(&self) -> HoldoutSplit {
        HoldoutSplit {
            train_end_year: self.train_end_year,
            test_first_year: self.test_first_year,
            test_last_year: self.test_last_year,
            split_by: self.split_by,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.data.as_os_str().is_empty() {
            return Err(Error::InvalidParameter("no data file given (--data)".into()));
        }
        if !self.data.is_file() {
            return Err(Error::InvalidParameter(format!(
                "data file {} does not exist",
                self.data.display()
            )));
        }
        if self.leaf_caps.is_empty() || self.tree_counts.is_empty() {
            return Err(Error::InvalidParameter(
                "leaf_caps and tree_counts must be nonempty".into(),
            ));
        }
        for p in &self.periods {
            parse_period(p)?;
        }
        if self.grid_points == 0 || self.kde_points < 2 || self.render_depth == 0 {
            return Err(Error::InvalidParameter(
                "grid_points, kde_points and render_depth must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("cannot serialize config: {e}")))
    }
}

/// Parses `"1988-2019"` (or a single year) into an inclusive range.
pub fn parse_period(text: &str) -> Result<(i32, i32)> {
    let bad = || Error::InvalidParameter(format!("bad period {text:?}, expected e.g. 1988-2019"));
    let (a, b) = match text.split_once('-') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (text.trim(), text.trim()),
    };
    let first: i32 = a.parse().map_err(|_| bad())?;
    let last: i32 = b.parse().map_err(|_| bad())?;
    if first > last {
        return Err(bad());
    }
    Ok((first, last))
}

#[derive(Debug, Parser)]
#[command(
    name = "forestcast",
    version,
    about = "Random-forest house-price forecasting experiments"
)]
pub struct Cli {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Long-format panel CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Append one indicator per country to the features.
    #[arg(long)]
    pub dummies: bool,
}

#[derive(Debug, Args, Default)]
pub struct ForestArgs {
    /// A node with at most this many rows becomes a leaf.
    #[arg(long)]
    pub leaf_cap: Option<usize>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub with_replacement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Insample,
    Holdout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitByArg {
    Predictor,
    Target,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics and a kernel density of the target.
    Stats {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kde_points: Option<usize>,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// RMSE/MAE grid over leaf caps and tree counts.
    Grid {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_delimiter = ',')]
        leaf_caps: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        tree_counts: Option<Vec<usize>>,
        #[arg(long)]
        mtry: Option<usize>,
        #[arg(long)]
        train_end: Option<i32>,
        /// Test years, e.g. 2015-2019.
        #[arg(long)]
        test_years: Option<String>,
        #[arg(long, value_enum)]
        split_by: Option<SplitByArg>,
        #[arg(long)]
        robust_se: Option<String>,
        /// Also write the prefix-ensemble MSE curve of the (leaf cap 10) forest.
        #[arg(long)]
        mse_curve: bool,
    },
    /// Shapley importances overall and by period.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        forest: ForestArgs,
        /// Comma-separated periods, e.g. 1988-2019,2011-2019.
        #[arg(long, value_delimiter = ',')]
        periods: Option<Vec<String>>,
        /// Report raw mean |phi| instead of shares.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        background: Option<usize>,
        /// Also write the per-row attribution table.
        #[arg(long)]
        rows: bool,
    },
    /// Partial-effect curves and surfaces.
    Effects {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, value_delimiter = ',')]
        curve: Option<Vec<String>>,
        /// Two features, e.g. price_rent,i_short.
        #[arg(long, value_delimiter = ',')]
        surface: Option<Vec<String>>,
        /// Draw the curves at this feature's quartiles as well.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Final-year cross-country predictions and R^2.
    Scatter {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        train_end: Option<i32>,
        #[arg(long)]
        target_year: Option<i32>,
    },
    /// Render one tree of a fitted forest as text and JSON.
    TreeDump {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        tree: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// Also save the whole forest as JSON.
        #[arg(long)]
        save_model: bool,
    },
}

fn apply_common(cfg: &mut RunConfig, c: &CommonArgs) {
    if let Some(d) = &c.data {
        cfg.data = d.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.dummies {
        cfg.dummy_mode = true;
    }
}

fn apply_forest(cfg: &mut RunConfig, f: &ForestArgs) {
    if let Some(v) = f.leaf_cap {
        cfg.leaf_cap = v;
    }
    if let Some(v) = f.trees {
        cfg.n_trees = v;
    }
    if f.mtry.is_some() {
        cfg.mtry = f.mtry;
    }
    if let Some(v) = f.subsample {
        cfg.subsample_fraction = v;
    }
    if f.with_replacement {
        cfg.with_replacement = true;
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    match &cli.command {
        Command::Stats {
            common,
            kde_points,
            bandwidth,
        } => {
            cfg.command = "stats".into();
            apply_common(&mut cfg, common);
            if let Some(v) = kde_points {
                cfg.kde_points = *v;
            }
            if bandwidth.is_some() {
                cfg.bandwidth = *bandwidth;
            }
        }
        Command::Grid {
            common,
            mode,
            leaf_caps,
            tree_counts,
            mtry,
            train_end,
            test_years,
            split_by,
            robust_se,
            mse_curve,
        } => {
            cfg.command = "grid".into();
            apply_common(&mut cfg, common);
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Insample => GridMode::InSample,
                    ModeArg::Holdout => GridMode::Holdout,
                };
            }
            if let Some(v) = leaf_caps {
                cfg.leaf_caps = v.clone();
            }
            if let Some(v) = tree_counts {
                cfg.tree_counts = v.clone();
            }
            if mtry.is_some() {
                cfg.mtry = *mtry;
            }
            if let Some(v) = train_end {
                cfg.train_end_year = *v;
            }
            if let Some(t) = test_years {
                let (a, b) = parse_period(t)?;
                cfg.test_first_year = a;
                cfg.test_last_year = b;
            }
            if let Some(s) = split_by {
                cfg.split_by = match s {
                    SplitByArg::Predictor => SplitBy::PredictorYear,
                    SplitByArg::Target => SplitBy::TargetYear,
                };
            }
            if let Some(s) = robust_se {
                cfg.robust_se = s.parse()?;
            }
            if *mse_curve {
                cfg.mse_curve = true;
            }
        }
        Command::Explain {
            common,
            forest,
            periods,
            raw,
            background,
            rows,
        } => {
            cfg.command = "explain".into();
            apply_common(&mut cfg, common);
            apply_forest(&mut cfg, forest);
            if let Some(p) = periods {
                cfg.periods = p.clone();
            }
            if *raw {
                cfg.normalize = false;
            }
            if background.is_some() {
                cfg.background_size = *background;
            }
            if *rows {
                cfg.row_attributions = true;
            }
        }
        Command::Effects {
            common,
            forest,
            curve,
            surface,
            family,
            points,
        } => {
            cfg.command = "effects".into();
            apply_common(&mut cfg, common);
            apply_forest(&mut cfg, forest);
            if let Some(c) = curve {
                cfg.curve_features = c.clone();
            }
            if let Some(s) = surface {
                cfg.surface_features = s.clone();
            }
            if family.is_some() {
                cfg.family_feature = family.clone();
            }
            if let Some(p) = points {
                cfg.grid_points = *p;
            }
        }
        Command::Scatter {
            common,
            forest,
            train_end,
            target_year,
        } => {
            cfg.command = "scatter".into();
            apply_common(&mut cfg, common);
            apply_forest(&mut cfg, forest);
            if let Some(v) = train_end {
                cfg.scatter_train_end = *v;
            }
            if let Some(v) = target_year {
                cfg.scatter_target_year = *v;
            }
        }
        Command::TreeDump {
            common,
            forest,
            tree,
            depth,
            ..
        } => {
            cfg.command = "tree-dump".into();
            apply_common(&mut cfg, common);
            apply_forest(&mut cfg, forest);
            if let Some(v) = tree {
                cfg.tree_index = *v;
            }
            if let Some(v) = depth {
                cfg.render_depth = *v;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let save_model = matches!(cli.command, Command::TreeDump { save_model: true, .. });
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cfg, save_model) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_CONFIG
            }
        }
    }
}

/// Runs a resolved configuration, returning the files written.
pub fn execute(cfg: &RunConfig, save_model: bool) -> Result<Vec<PathBuf>> {
    let panel = load_panel_path(&cfg.data, &Schema::default())?;
    let design = build_design(&panel, cfg.dummy_mode)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut out = Output::new(cfg);
    match cfg.command.as_str() {
        "stats" => cmd_stats(cfg, &panel, &design, &mut out)?,
        "grid" => cmd_grid(cfg, &design, &mut out)?,
        "explain" => cmd_explain(cfg, &design, &mut out)?,
        "effects" => cmd_effects(cfg, &design, &mut out)?,
        "scatter" => cmd_scatter(cfg, &design, &mut out)?,
        "tree-dump" => cmd_tree_dump(cfg, &design, save_model, &mut out)?,
        other => return Err(Error::InvalidParameter(format!("unknown command {other:?}"))),
    }
    let resolved = cfg.to_toml()?;
    out.write("resolved_config.toml", |w| {
        w.write_all(resolved.as_bytes())
            .map_err(|e| Error::io("resolved_config.toml", e))
    })?;
    Ok(out.files)
}

struct Output<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Output { cfg, files: Vec::new() }
    }

    fn ext(&self) -> &'static str {
        match self.cfg.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.cfg.out_dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    /// CSV via `csv_body` or pretty JSON of `value`, depending on the format.
    fn table<T: Serialize>(
        &mut self,
        stem: &str,
        value: &T,
        csv_body: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<()> {
        let name = format!("{stem}.{}", self.ext());
        match self.cfg.format {
            OutputFormat::Csv => self.write(&name, csv_body),
            OutputFormat::Json => self.write(&name, |w| {
                serde_json::to_writer_pretty(&mut *w, value)?;
                Ok(())
            }),
        }
    }
}

fn feature(design: &DesignMatrix, name: &str) -> Result<usize> {
    design
        .feature_index(name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown feature {name:?}")))
}

fn cmd_stats(
    cfg: &RunConfig,
    panel: &crate::panel::PanelDataset,
    design: &DesignMatrix,
    out: &mut Output,
) -> Result<()> {
    let stats = summary_stats(design, panel)?;
    out.table("stats", &stats, |w| stats.write_csv(w))?;
    let targets = design.targets();
    let h = match cfg.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&targets)?,
    };
    let lo = targets.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let grid = linspace(lo, hi, cfg.kde_points);
    let density = kernel_density(&targets, h, &grid)?;
    #[derive(Serialize)]
    struct Kde<'a> {
        bandwidth: f64,
        x: &'a [f64],
        density: &'a [f64],
    }
    let kde = Kde {
        bandwidth: h,
        x: &grid,
        density: &density,
    };
    out.table("kde", &kde, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["x", "density"])?;
        for (x, d) in grid.iter().zip(&density) {
            c.write_record([format!("{x:.6}"), format!("{d:.9}")])?;
        }
        c.flush().map_err(|e| Error::io("kde", e))?;
        Ok(())
    })
}

fn cmd_grid(cfg: &RunConfig, design: &DesignMatrix, out: &mut Output) -> Result<()> {
    let spec = cfg.grid_spec();
    let (report, train) = match cfg.mode {
        GridMode::InSample => (insample_grid(design, &spec)?, design.clone()),
        GridMode::Holdout => {
            let split = cfg.holdout();
            (holdout_grid(design, &split, &spec)?, split.apply(design)?.0)
        }
    };
    let stem = match cfg.mode {
        GridMode::InSample => "grid_insample",
        GridMode::Holdout => "grid_holdout",
    };
    match cfg.format {
        OutputFormat::Csv => out.write(&format!("{stem}.csv"), |w| report.write_csv(w))?,
        OutputFormat::Json => out.write(&format!("{stem}.json"), |w| {
            w.write_all(report.to_json()?.as_bytes())
                .map_err(|e| Error::io(stem, e))
        })?,
    }

    let ar1 = fit_ar1_with(&train, cfg.robust_se)?;
    let ols = fit_ols_with(&train, &ols_subset(&train), cfg.robust_se)?;
    let models = [("AR(1)", &ar1), ("OLS", &ols)];
    out.table("benchmarks", &[&ar1, &ols], |w| write_table_csv(&models, w))?;
    out.write("benchmarks.txt", |w| {
        w.write_all(render_table(&models).as_bytes())
            .map_err(|e| Error::io("benchmarks.txt", e))
    })?;

    if cfg.mse_curve {
        let max_trees = *cfg.tree_counts.iter().max().expect("validated nonempty");
        let fc = spec.cell_config(10, max_trees);
        let model = fit_forest(&train, &fc)?;
        let counts: Vec<usize> = (1..=max_trees).collect();
        let curve = model.mse_curve(&train, &counts)?;
        out.table("mse_curve", &curve, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["n_trees", "mse"])?;
            for (m, mse) in &curve {
                c.write_record([m.to_string(), format!("{mse:.9}")])?;
            }
            c.flush().map_err(|e| Error::io("mse_curve", e))?;
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_explain(cfg: &RunConfig, design: &DesignMatrix, out: &mut Output) -> Result<()> {
    let model = fit_forest(design, &cfg.forest_config())?;
    let background = match cfg.background_size {
        // Own seed so the draw is independent of tree 0's stream.
        Some(n) => background_subsample(design, n, crate::rng::derive_seed(cfg.seed, &[u64::MAX])),
        None => design.clone(),
    };
    let explainer = ForestExplainer::new(&model, &background)?;
    // Attribute every row once; periods are subsets of the same vectors.
    let vectors = explainer.explain_rows(design)?;
    let names = design.feature_names();
    let overall = ImportanceReport::from_vectors(names, design, &vectors, cfg.normalize)?;
    out.table("importance", &overall, |w| overall.write_csv(w))?;

    let mut reports = Vec::new();
    for p in &cfg.periods {
        let (first, last) = parse_period(p)?;
        let picked: Vec<ShapleyVector> = design
            .rows()
            .iter()
            .zip(&vectors)
            .filter(|(r, _)| (first..=last).contains(&r.year))
            .map(|(_, v)| v.clone())
            .collect();
        let subset = design.years(first, last);
        if subset.is_empty() {
            return Err(Error::EmptyPartition(format!("no rows in period {p}")));
        }
        let mut report = ImportanceReport::from_vectors(names, &subset, &picked, cfg.normalize)?;
        report.period = Some((first, last));
        out.table(&format!("importance_{first}_{last}"), &report, |w| report.write_csv(w))?;
        reports.push(report);
    }
    if !reports.is_empty() {
        out.table("importance_by_period", &reports, |w| write_period_table(&reports, w))?;
    }
    if cfg.row_attributions {
        out.table("shapley_rows", &vectors, |w| write_shapley_csv(design, &vectors, w))?;
    }
    Ok(())
}

fn cmd_effects(cfg: &RunConfig, design: &DesignMatrix, out: &mut Output) -> Result<()> {
    let model = fit_forest(design, &cfg.forest_config())?;
    let emit = |out: &mut Output, stem: String, grid: &EffectGrid| out.table(&stem, grid, |w| grid.write_csv(w));
    for name in &cfg.curve_features {
        let k = feature(design, name)?;
        let grid = default_grid(&model, k, cfg.grid_points)?;
        emit(out, format!("curve_{name}"), &partial_curve(&model, k, &grid, &[])?)?;
        if let Some(fam) = &cfg.family_feature {
            let j = feature(design, fam)?;
            if j != k {
                let levels = quartiles(design, j)?;
                let curves = curve_family(&model, k, &grid, j, &levels)?;
                for (q, curve) in ["q25", "q50", "q75"].iter().zip(&curves) {
                    emit(out, format!("curve_{name}_{fam}_{q}"), curve)?;
                }
            }
        }
    }
    match cfg.surface_features.as_slice() {
        [] => {}
        [a, b] => {
            let (i, j) = (feature(design, a)?, feature(design, b)?);
            let gi = default_grid(&model, i, cfg.grid_points)?;
            let gj = default_grid(&model, j, cfg.grid_points)?;
            emit(
                out,
                format!("surface_{a}_{b}"),
                &partial_surface(&model, i, j, &gi, &gj)?,
            )?;
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "surface needs exactly two features, got {}",
                other.len()
            )))
        }
    }
    Ok(())
}

fn cmd_scatter(cfg: &RunConfig, design: &DesignMatrix, out: &mut Output) -> Result<()> {
    let report = final_year_scatter(
        design,
        cfg.scatter_train_end,
        cfg.scatter_target_year,
        &cfg.forest_config(),
        cfg.robust_se,
    )?;
    out.table("scatter", &report, |w| report.write_csv(w))?;
    out.write("scatter_r2.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["model", "r_squared"])?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        c.write_record(["rf".to_string(), opt(report.rf_r2)])?;
        c.write_record(["ols".to_string(), opt(report.ols_r2)])?;
        c.flush().map_err(|e| Error::io("scatter_r2.csv", e))?;
        Ok(())
    })
}

fn cmd_tree_dump(cfg: &RunConfig, design: &DesignMatrix, save_model: bool, out: &mut Output) -> Result<()> {
    let model = fit_forest(design, &cfg.forest_config())?;
    let tree = model.trees.get(cfg.tree_index).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "tree {} requested, forest has {}",
            cfg.tree_index,
            model.n_trees()
        ))
    })?;
    let b = cfg.tree_index;
    out.write(&format!("tree_{b}.txt"), |w| {
        w.write_all(tree.render(cfg.render_depth).as_bytes())
            .map_err(|e| Error::io("tree", e))
    })?;
    out.write(&format!("tree_{b}.json"), |w| {
        w.write_all(tree.to_json()?.as_bytes())
            .map_err(|e| Error::io("tree", e))
    })?;
    if save_model {
        out.write("forest.json", |w| {
            w.write_all(model.to_json()?.as_bytes())
                .map_err(|e| Error::io("forest.json", e))
        })?;
    }
    Ok(())
}
