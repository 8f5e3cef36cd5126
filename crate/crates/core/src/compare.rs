//! Grid comparisons of exact wave functions against the asymptotic
//! predictions, shared by the one-cut and multi-cut paths.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::equilibrium::{EquilibriumMeasure, RegimeTag};
use crate::error::{Error, Result};
use crate::exact::ExactEngine;
use crate::genus0::{AsymptoticPrediction, Genus0Asymptotics};
use crate::riemann::{MultiCutAsymptotics, SurfacePoint};

/// Relative errors are reported only where `|ψ_exact|` exceeds this fraction of the envelope.
pub const REL_ERR_FLOOR: f64 = 1e-3;

/// Genus-0 or multi-cut asymptotics behind one interface.
#[derive(Debug, Clone)]
pub enum Predictor {
    Genus0(Genus0Asymptotics),
    MultiCut(Box<MultiCutAsymptotics>),
}

impl Predictor {
    /// Picks the formula from the number of cuts; `zeta` is ignored for one cut.
    pub fn new(meas: EquilibriumMeasure, zeta: &[f64], n_weight: usize) -> Result<Self> {
        if meas.s() == 1 {
            Ok(Predictor::Genus0(Genus0Asymptotics::new(meas, n_weight)?))
        } else {
            Ok(Predictor::MultiCut(Box::new(MultiCutAsymptotics::new(
                meas, zeta, n_weight,
            )?)))
        }
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        match self {
            Predictor::Genus0(g) => g.measure(),
            Predictor::MultiCut(m) => m.measure(),
        }
    }

    /// Per-`n` normalization; trivial for genus 0, where it is closed form.
    pub fn scale(&self, n: usize) -> Result<f64> {
        match self {
            Predictor::Genus0(_) => Ok(1.0),
            Predictor::MultiCut(m) => m.scale(n),
        }
    }

    pub fn predict_scaled(
        &self,
        n: usize,
        xi: f64,
        delta: f64,
        scale: f64,
    ) -> Result<AsymptoticPrediction> {
        match self {
            Predictor::Genus0(g) => g.predict(n, xi, delta),
            Predictor::MultiCut(m) => m.predict_scaled(n, xi, delta, scale),
        }
    }

    pub fn predict(&self, n: usize, xi: f64, delta: f64) -> Result<AsymptoticPrediction> {
        self.predict_scaled(n, xi, delta, self.scale(n)?)
    }

    /// `Λ(p_ξ)` on the physical sheet.
    pub fn lambda(&self, xi: f64) -> Result<Complex64> {
        let x = Complex64::new(xi, 0.0);
        match self {
            Predictor::Genus0(g) => Ok(g.map().lambda_h(g.map().map_to_p(x)?)?.0),
            Predictor::MultiCut(m) => m.lambda(SurfacePoint::physical(x)),
        }
    }
}

/// Edge band `2 N^{-2/3} w`, with `w` the widest cut.
pub fn default_edge_delta(meas: &EquilibriumMeasure, n_weight: usize) -> f64 {
    let w = meas
        .cuts()
        .cuts()
        .iter()
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);
    crate::config::default_edge_delta(n_weight, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrKind {
    Relative,
    Envelope,
}

impl ErrKind {
    pub fn label(self) -> &'static str {
        match self {
            ErrKind::Relative => "rel",
            ErrKind::Envelope => "envelope",
        }
    }
}

/// One grid point at one `n`. Prediction fields are `None` inside the edge bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub xi: f64,
    pub n: usize,
    pub n_weight: usize,
    pub regime: RegimeTag,
    pub psi_exact: f64,
    pub psi_pred: Option<f64>,
    pub envelope: Option<f64>,
    pub phase: Option<f64>,
    pub abs_err: Option<f64>,
    pub err: Option<f64>,
    pub err_kind: Option<ErrKind>,
    /// `ψ_n / ψ_{n-1}`, when `n - 1` is also on the list.
    pub ratio_exact: Option<f64>,
    pub ratio_pred: Option<f64>,
}

/// Exact and predicted `ψ_n` on `grid` for every `n` in `n_values`.
pub fn compare_grid(
    engine: &ExactEngine,
    predictor: &Predictor,
    n_values: &[usize],
    grid: &[f64],
    delta: f64,
) -> Result<Vec<ComparisonRow>> {
    let meas = predictor.measure();
    if grid
        .iter()
        .all(|&x| meas.classify_regime(x, delta) == RegimeTag::ExcludedEdge)
    {
        return Err(Error::config(
            "grid",
            "every grid point lies inside an edge-exclusion band",
        ));
    }
    let scales: Vec<f64> = n_values
        .iter()
        .map(|&n| predictor.scale(n))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64)> = n_values
        .iter()
        .enumerate()
        .flat_map(|(k, _)| grid.iter().map(move |&x| (k, x)))
        .collect();
    let raw: Vec<(f64, Option<AsymptoticPrediction>)> = cells
        .par_iter()
        .map(|&(k, xi)| {
            let n = n_values[k];
            let exact = engine.eval_wave(n, xi)?.psi;
            let pred = match meas.classify_regime(xi, delta) {
                RegimeTag::ExcludedEdge => None,
                _ => Some(predictor.predict_scaled(n, xi, delta, scales[k])?),
            };
            Ok((exact, pred))
        })
        .collect::<Result<_>>()?;
    let index = |n: usize, g: usize| {
        n_values
            .iter()
            .position(|&m| m == n)
            .map(|k| &raw[k * grid.len() + g])
    };
    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(k, xi)) in cells.iter().enumerate() {
        let n = n_values[k];
        let g = c % grid.len();
        let (exact, pred) = &raw[c];
        let prev = n.checked_sub(1).and_then(|m| index(m, g));
        let ratio_exact = prev.map(|(e, _)| exact / e);
        let ratio_pred = prev.and_then(|(_, p)| match (pred, p) {
            (Some(a), Some(b)) => Some(a.psi_pred / b.psi_pred),
            _ => None,
        });
        let (abs_err, err, err_kind) = match pred {
            Some(p) => {
                let d = (exact - p.psi_pred).abs();
                if exact.abs() > REL_ERR_FLOOR * p.envelope {
                    (Some(d), Some(d / exact.abs()), Some(ErrKind::Relative))
                } else {
                    (Some(d), Some(d / p.envelope), Some(ErrKind::Envelope))
                }
            }
            None => (None, None, None),
        };
        rows.push(ComparisonRow {
            xi,
            n,
            n_weight: engine.n_weight(),
            regime: meas.classify_regime(xi, delta),
            psi_exact: *exact,
            psi_pred: pred.as_ref().map(|p| p.psi_pred),
            envelope: pred.as_ref().map(|p| p.envelope),
            phase: pred.as_ref().and_then(|p| p.phase),
            abs_err,
            err,
            err_kind,
            ratio_exact,
            ratio_pred,
        });
    }
    Ok(rows)
}

/// Zeros of the predicted `ψ_n` on `[lo, hi]`: sign changes on `samples`
/// equal steps, refined by bisection.
pub fn predicted_zeros(
    predictor: &Predictor,
    n: usize,
    lo: f64,
    hi: f64,
    delta: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    let scale = predictor.scale(n)?;
    let f = |x: f64| {
        predictor
            .predict_scaled(n, x, delta, scale)
            .map(|p| p.psi_pred)
    };
    let xs: Vec<f64> = (0..=samples)
        .map(|k| lo + (hi - lo) * k as f64 / samples as f64)
        .collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut zeros = Vec::new();
    for k in 0..samples {
        let (mut a, mut b) = (xs[k], xs[k + 1]);
        let (mut fa, fb) = (vals[k], vals[k + 1]);
        if fa == 0.0 {
            zeros.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        zeros.push(0.5 * (a + b));
    }
    Ok(zeros)
}

/// Zeros of `ψ_n` inside one cut, outside its edge bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    pub cut: usize,
    pub lo: f64,
    pub hi: f64,
    pub exact: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl ZeroCount {
    pub fn delta(&self) -> usize {
        self.exact.len().abs_diff(self.predicted.len())
    }

    /// Largest distance from an exact zero to the nearest predicted one, in
    /// units of the local spacing of exact zeros.
    pub fn max_offset(&self, all_exact: &[f64]) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for &z in &self.exact {
            let k = all_exact.partition_point(|&v| v < z);
            let left = k.checked_sub(1).map(|j| z - all_exact[j]);
            let right = all_exact.get(k + 1).map(|v| v - z);
            let spacing = match (left, right) {
                (Some(l), Some(r)) => 0.5 * (l + r),
                (Some(s), None) | (None, Some(s)) => s,
                (None, None) => continue,
            };
            let near = self
                .predicted
                .iter()
                .map(|p| (p - z).abs())
                .fold(f64::INFINITY, f64::min);
            let off = near / spacing;
            worst = Some(worst.map_or(off, |w| w.max(off)));
        }
        worst
    }
}

/// Exact and predicted zeros of `ψ_n` on each cut, away from the edges.
pub fn zero_counts(
    engine: &ExactEngine,
    predictor: &Predictor,
    n: usize,
    delta: f64,
) -> Result<Vec<ZeroCount>> {
    let exact = engine.table().zeros(n);
    predictor
        .measure()
        .cuts()
        .cuts()
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let (lo, hi) = (a + delta, b - delta);
            if lo >= hi {
                return Err(Error::Regime(format!(
                    "cut {i} lies entirely inside its edge bands"
                )));
            }
            let samples = 40 * n.max(10);
            Ok(ZeroCount {
                cut: i,
                lo,
                hi,
                exact: exact
                    .iter()
                    .copied()
                    .filter(|&z| z > lo && z < hi)
                    .collect(),
                // Shrink the band a hair so the interval ends classify as bulk.
                predicted: predicted_zeros(predictor, n, lo, hi, delta * (1.0 - 1e-9), samples)?,
            })
        })
        .collect()
}

/// Headline numbers of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Largest `|ψ_exact - ψ_pred| / envelope` over predicted rows.
    pub max_envelope_err: f64,
    /// Zero counts of `ψ_N`.
    pub zero_counts: Vec<ZeroCount>,
    /// Largest `|ratio_pred / ratio_exact - 1|` at outside points where `ψ_n` and
    /// `ψ_{n-1}` are both compared in relative terms, if any.
    pub max_ratio_err: Option<f64>,
}

pub fn summarize(
    rows: &[ComparisonRow],
    engine: &ExactEngine,
    predictor: &Predictor,
    delta: f64,
) -> Result<Summary> {
    let max_envelope_err = rows
        .iter()
        .filter_map(|r| Some(r.abs_err? / r.envelope?))
        .fold(0.0, f64::max);
    // A ratio is meaningful only where neither ψ_n nor ψ_{n-1} sits at a zero.
    let relative = |xi: f64, n: usize| {
        rows.iter()
            .any(|r| r.n == n && r.xi == xi && r.err_kind == Some(ErrKind::Relative))
    };
    let max_ratio_err = rows
        .iter()
        .filter(|r| r.regime == RegimeTag::Outside && r.n > 0)
        .filter(|r| relative(r.xi, r.n) && relative(r.xi, r.n - 1))
        .filter_map(|r| Some((r.ratio_pred? / r.ratio_exact? - 1.0).abs()))
        .reduce(f64::max);
    Ok(Summary {
        max_envelope_err,
        zero_counts: zero_counts(engine, predictor, engine.n_weight(), delta)?,
        max_ratio_err,
    })
}
