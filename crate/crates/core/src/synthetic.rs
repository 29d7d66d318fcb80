//! Seeded synthetic panels with the default schema.
//!
//! Predictors follow persistent country-level AR(1) processes (stock returns
//! and the volatility index are common across countries). Next-year growth is
//! a nonlinear function of current values: momentum, valuation thresholds, an
//! inflation sweet spot, and a rate × credit interaction, plus Gaussian noise.
//! See [`SyntheticPanel::signal`] for the exact function.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::panel::{CountrySeries, PanelDataset, Schema, DEFAULT_COUNTRIES};
use crate::{rng, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticPanel {
    pub countries: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticPanel {
    /// 13 countries, 1988–2019: 31 supervised rows per country.
    fn default() -> Self {
        SyntheticPanel {
            countries: 13,
            first_year: 1988,
            last_year: 2019,
            noise_sd: 1.5,
            seed: 2024,
        }
    }
}

/// Indices into the design feature vector of the default schema.
mod idx {
    pub const MOMENTUM: usize = 0;
    pub const CPI: usize = 1;
    pub const I_SHORT: usize = 3;
    pub const CREDIT: usize = 6;
    pub const PRICE_RENT: usize = 8;
}

impl SyntheticPanel {
    /// Noise-free next-year growth given a design feature vector.
    pub fn signal(features: &[f64]) -> f64 {
        let momentum = features[idx::MOMENTUM];
        let cpi = features[idx::CPI];
        let i_short = features[idx::I_SHORT];
        let credit = features[idx::CREDIT];
        let price_rent = features[idx::PRICE_RENT];
        let mut y = 1.0 + 0.45 * momentum;
        if price_rent < 80.0 {
            y += 5.0;
        } else if price_rent > 110.0 {
            y -= 5.0;
        }
        if (0.0..=3.0).contains(&cpi) {
            y += 3.0;
        }
        if i_short > 5.0 && credit > 6.0 {
            y -= 6.0;
        }
        y
    }

    fn code(i: usize) -> String {
        DEFAULT_COUNTRIES
            .get(i)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("C{i:02}"))
    }

    pub fn generate(&self) -> Result<PanelDataset> {
        let schema = Schema::default();
        let vars = schema.variables();
        let years: Vec<i32> = (self.first_year..=self.last_year).collect();
        let normal = |r: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(r) };

        let mut common = rng::stream(self.seed, u64::MAX);
        let globals: Vec<(f64, f64)> = years
            .iter()
            .scan(20.0, |vxo: &mut f64, _| {
                *vxo = (20.0 + 0.5 * (*vxo - 20.0) + 6.0 * normal(&mut common)).clamp(9.0, 45.0);
                Some((7.0 + 15.0 * normal(&mut common), *vxo))
            })
            .collect();

        let mut series = Vec::with_capacity(self.countries);
        for c in 0..self.countries {
            let mut r = rng::stream(self.seed, c as u64);
            let pr_level = 75.0 + 35.0 * r.gen::<f64>();
            let cpi_level = 1.0 + 2.5 * r.gen::<f64>();
            let rate_level = 2.0 + 4.0 * r.gen::<f64>();
            let mut cpi = cpi_level;
            let mut gdp = 2.4;
            let mut i_short = rate_level;
            let mut credit = 6.0;
            let mut pop = 0.6;
            let mut price_rent = pr_level;
            let mut hp = 4.0 + 3.0 * normal(&mut r);

            let mut obs = Vec::with_capacity(years.len());
            for (t, &year) in years.iter().enumerate() {
                let (stock, vxo) = globals[t];
                let i_long = i_short + 1.0 + 0.5 * normal(&mut r);
                let row = [hp, cpi, gdp, i_short, i_long, stock, credit, pop, price_rent, vxo];
                obs.push((year, row.iter().map(|&v| Some(v)).collect::<Vec<_>>()));

                let next_hp = Self::signal(&row) + self.noise_sd * normal(&mut r);
                cpi = cpi_level + 0.6 * (cpi - cpi_level) + 1.3 * normal(&mut r);
                gdp = 2.4 + 0.3 * (gdp - 2.4) + 1.8 * normal(&mut r);
                i_short = (rate_level + 0.8 * (i_short - rate_level) + 1.2 * normal(&mut r)).max(-0.8);
                credit = 6.0 + 0.6 * (credit - 6.0) + 0.15 * hp + 2.5 * normal(&mut r);
                pop = 0.6 + 0.7 * (pop - 0.6) + 0.2 * normal(&mut r);
                price_rent = (pr_level + 0.8 * (price_rent - pr_level) + 0.6 * (next_hp - 3.0) + 6.0 * normal(&mut r))
                    .clamp(30.0, 190.0);
                hp = next_hp;
            }
            series.push(CountrySeries::new(Self::code(c), &vars, obs)?);
        }
        PanelDataset::new(schema, series)
    }
}
