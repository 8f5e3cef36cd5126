//! Run configuration, read from a JSON document.
//!
//! ```json
//! {
//!   "V": [0, 0, 0.5],
//!   "N": 20,
//!   "n_values": [19, 20],
//!   "T": 1.0,
//!   "grid": {"min": -3, "max": 3, "count": 121},
//!   "precision_digits": 40,
//!   "edge_exclusion_delta": 0.1,
//!   "cuts_hint": 1,
//!   "seed": 0
//! }
//! ```
//!
//! Only `V`, `N` and `grid` are required. `grid` may also be an explicit list
//! of abscissae. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// The document exactly as written; serializing it reproduces every value bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_digits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_exclusion_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts_hint: Option<usize>,
    /// Filling fractions for a multi-cut solve; defaults to the minimizer of the free energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fillings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range { min: f64, max: f64, count: usize },
    Points(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

/// Sampler settings with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    /// Number of particles.
    pub n: usize,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub bins: usize,
    pub chains: usize,
    /// Histogram range; `None` means the equilibrium support padded by 10%.
    pub range: Option<(f64, f64)>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: Potential,
    pub n: usize,
    pub n_values: Vec<usize>,
    pub t: f64,
    pub grid: Vec<f64>,
    pub precision_digits: u32,
    /// Explicit edge band; when absent it is derived from the cut width.
    pub edge_exclusion_delta: Option<f64>,
    pub cuts_hint: Option<usize>,
    pub fillings: Option<Vec<f64>>,
    pub seed: u64,
    pub sampler: SamplerSettings,
    source: ConfigFile,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let potential =
            Potential::new(file.v.clone()).map_err(|e| Error::config("V", e.to_string()))?;
        let n = file.n;
        if n < 1 {
            return Err(Error::config("N", "must be >= 1"));
        }
        let n_values = file.n_values.clone().unwrap_or_else(|| vec![n - 1, n]);
        if n_values.is_empty() {
            return Err(Error::config("n_values", "must not be empty"));
        }
        let t = file.t.unwrap_or(1.0);
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::config("T", "must be a positive number"));
        }
        let grid = match &file.grid {
            GridSpec::Range { min, max, count } => {
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::config("grid", "need finite min <= max"));
                }
                match count {
                    0 => Vec::new(),
                    1 => vec![*min],
                    c => (0..*c)
                        .map(|i| min + (max - min) * i as f64 / (*c - 1) as f64)
                        .collect(),
                }
            }
            GridSpec::Points(p) => {
                if let Some(i) = p.iter().position(|x| !x.is_finite()) {
                    return Err(Error::config(format!("grid[{i}]"), "not finite"));
                }
                p.clone()
            }
        };
        if grid.is_empty() {
            return Err(Error::config("grid", "empty grid"));
        }
        let precision_digits = file.precision_digits.unwrap_or((2 * n as u32).max(30));
        if precision_digits < 15 {
            return Err(Error::config("precision_digits", "must be >= 15"));
        }
        if let Some(d) = file.edge_exclusion_delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::config("edge_exclusion_delta", "must be positive"));
            }
        }
        if file.cuts_hint == Some(0) {
            return Err(Error::config("cuts_hint", "must be >= 1"));
        }
        if let Some(eps) = &file.fillings {
            if let Some(i) = eps.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
                return Err(Error::config(format!("fillings[{i}]"), "must be positive"));
            }
            let total: f64 = eps.iter().sum();
            if (total - t).abs() > 1e-9 * t {
                return Err(Error::config(
                    "fillings",
                    format!("sum {total} differs from T = {t}"),
                ));
            }
            if let Some(s) = file.cuts_hint {
                if s != eps.len() {
                    return Err(Error::config(
                        "fillings",
                        format!("expected {s} entries to match cuts_hint"),
                    ));
                }
            }
        }
        let sf = file.sampler.clone().unwrap_or_default();
        let sampler = SamplerSettings {
            n: sf.n.unwrap_or(n),
            sweeps: sf.sweeps.unwrap_or(1_000_000),
            burn_in: sf.burn_in.unwrap_or(100_000),
            thin: sf.thin.unwrap_or(10),
            bins: sf.bins.unwrap_or(40),
            chains: sf.chains.unwrap_or(2),
            range: sf.range.map(|[lo, hi]| (lo, hi)),
        };
        if sampler.n < 2 {
            return Err(Error::config("sampler.n", "need at least 2 particles"));
        }
        if sampler.thin == 0 || sampler.bins == 0 || sampler.chains == 0 {
            return Err(Error::config(
                "sampler",
                "thin, bins and chains must be >= 1",
            ));
        }
        if let Some((lo, hi)) = sampler.range {
            if !(lo < hi) {
                return Err(Error::config("sampler.range", "need lo < hi"));
            }
        }
        Ok(RunConfig {
            potential,
            n,
            n_values,
            t,
            grid,
            precision_digits,
            edge_exclusion_delta: file.edge_exclusion_delta,
            cuts_hint: file.cuts_hint,
            fillings: file.fillings.clone(),
            seed: file.seed.unwrap_or(0),
            sampler,
            source: file,
        })
    }

    /// The document as parsed, before defaults were applied.
    pub fn source(&self) -> &ConfigFile {
        &self.source
    }

    /// Canonical JSON text of the source document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.source).expect("config serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.source.seed = Some(seed);
        self
    }

    pub fn with_precision(mut self, digits: u32) -> Result<Self> {
        if digits < 15 {
            return Err(Error::config("precision_digits", "must be >= 15"));
        }
        self.precision_digits = digits;
        self.source.precision_digits = Some(digits);
        Ok(self)
    }

    /// Edge band: the configured value, else the default for the widest cut of `meas`.
    pub fn edge_delta(&self, meas: &EquilibriumMeasure) -> f64 {
        self.edge_exclusion_delta
            .unwrap_or_else(|| crate::compare::default_edge_delta(meas, self.n))
    }
}

/// `2 N^{-2/3} w` for a cut of width `w`: a few Airy-scale widths around each branch point.
pub fn default_edge_delta(n: usize, width: f64) -> f64 {
    2.0 * (n as f64).powf(-2.0 / 3.0) * width
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_gaussian_with_defaults() {
        let c = RunConfig::parse(r#"{"V": [0,0,0.5], "N": 20, "grid": [2.5]}"#).unwrap();
        assert_eq!(c.potential, Potential::gaussian());
        assert_eq!(c.n, 20);
        assert_eq!(c.n_values, vec![19, 20]);
        assert_eq!(c.t, 1.0);
        assert_eq!(c.precision_digits, 40);
        assert_eq!(c.seed, 0);
        assert_eq!(c.sampler.n, 20);
    }

    #[test]
    fn implicit_degree_two() {
        let c = RunConfig::parse(
            r#"{"V": [0,0,1], "N": 3, "grid": {"min": -1, "max": 1, "count": 3}}"#,
        )
        .unwrap();
        assert_eq!(c.potential.degree(), 2);
        assert_eq!(c.grid, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = RunConfig::parse(r#"{"V": [0,0,0,1], "N": 3, "grid": [0]}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-integrable weight"), "{msg}");
        assert!(msg.contains("`V`"), "{msg}");
        assert_eq!(err.exit_code(), 3);

        let err = RunConfig::parse(r#"{"V": [0,0,1], "N": 3, "grid": []}"#).unwrap_err();
        assert!(err.to_string().contains("empty grid"));

        let err = RunConfig::parse(r#"{"V": [0,0,1], "N": "x", "grid": [0]}"#).unwrap_err();
        assert!(err.to_string().contains("`N`"), "{err}");

        let err =
            RunConfig::parse(r#"{"V": [0,0,1], "N": 3, "grid": [0], "sampler": {"bogus": 1}}"#)
                .unwrap_err();
        assert!(err.to_string().contains("sampler"), "{err}");

        let err = RunConfig::parse(r#"{"V": [0,0,-1], "N": 3, "grid": [0]}"#).unwrap_err();
        assert!(err.to_string().contains("leading coefficient"));
    }

    #[test]
    fn fillings_must_sum_to_t() {
        let err = RunConfig::parse(
            r#"{"V": [0,0,-2,0,0.25], "N": 3, "grid": [0], "fillings": [0.3, 0.3]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("fillings"));
    }

    #[test]
    fn overrides_update_the_source() {
        let c = RunConfig::parse(r#"{"V": [0,0,0.5], "N": 4, "grid": [0]}"#)
            .unwrap()
            .with_seed(7)
            .with_precision(50)
            .unwrap();
        let again = RunConfig::parse(&c.to_json()).unwrap();
        assert_eq!(again.seed, 7);
        assert_eq!(again.precision_digits, 50);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6f64..1e6,
            (-300i32..300, 1u32..100000).prop_map(|(e, m)| m as f64 * 10f64.powi(e)),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            g2 in finite(),
            g4 in 1e-6f64..1e6,
            t in 1e-3f64..1e3,
            pts in proptest::collection::vec(finite(), 1..8),
            delta in proptest::option::of(1e-9f64..1.0),
        ) {
            let file = ConfigFile {
                v: vec![0.0, 0.0, g2, 0.0, g4],
                n: 10,
                n_values: Some(vec![9, 10]),
                t: Some(t),
                grid: GridSpec::Points(pts),
                precision_digits: None,
                edge_exclusion_delta: delta,
                cuts_hint: None,
                fillings: None,
                seed: Some(3),
                sampler: None,
            };
            let c = RunConfig::from_file(file.clone()).unwrap();
            let text = c.to_json();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(back.source(), &file);
            for (a, b) in back.source().v.iter().zip(&file.v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
