//! Multiprecision trapezoid rule for `x^k e^{-N V(x)}` on a truncated line.
//!
//! The weight is entire and decays faster than any exponential, so the
//! trapezoid rule on a truncated interval converges super-geometrically in the
//! node spacing. The rule is refined by halving the spacing until the moments
//! up to the requested degree stop changing.

use rug::Float;

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Largest node count tried before giving up.
const NODE_BUDGET: usize = 1 << 16;

/// Bits of binary precision for a number of decimal digits, with guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 24
}

/// Equally spaced nodes with positive weights `Δx·e^{-N(V(x) - V_min)}`.
///
/// The true weight is `e^{-N V_min}` times the stored one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub(crate) nodes: Vec<Float>,
    pub(crate) weights: Vec<Float>,
    domain: (f64, f64),
    target_error: f64,
    v_min: f64,
    n_weight: f64,
    prec: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn target_error(&self) -> f64 {
        self.target_error
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Nodes rounded to `f64`, strictly increasing.
    pub fn nodes_f64(&self) -> Vec<f64> {
        self.nodes.iter().map(Float::to_f64).collect()
    }

    /// Logarithms of the true weights `Δx·e^{-N V(x)}`.
    pub fn log_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.clone().ln().to_f64() - self.n_weight * self.v_min)
            .collect()
    }

    /// `e^{-N V_min}` at working precision: the factor dropped from the weights.
    pub(crate) fn scale(&self) -> Float {
        Float::with_val(self.prec, -self.n_weight * self.v_min).exp()
    }

    /// `∫ f(x) e^{-N V(x)} dx` for a polynomial-sized integrand evaluated at the nodes.
    pub fn integrate(&self, mut f: impl FnMut(&Float) -> Float) -> Float {
        let mut acc = Float::with_val(self.prec, 0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(x) * w;
        }
        acc * self.scale()
    }

    /// The same domain with half the spacing.
    pub fn refined(&self, pot: &Potential) -> QuadratureRule {
        let (lo, hi) = self.domain;
        assemble(
            pot,
            self.n_weight,
            lo,
            hi,
            2 * (self.len() - 1) + 1,
            self.prec,
            self.v_min,
            self.target_error,
        )
    }
}

/// Builds a rule exact (to `10^{-(digits-5)}` relative) for `x^k e^{-N V}`, `k <= deg_needed`.
pub fn build_weight_quadrature(
    pot: &Potential,
    n_weight: f64,
    deg_needed: usize,
    digits: u32,
) -> Result<QuadratureRule> {
    if !(n_weight.is_finite() && n_weight > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight parameter N = {n_weight}"
        )));
    }
    let prec = bits_for_digits(digits);
    let (x_min, v_min) = pot.minimum();
    let target = 10f64.powi(-(digits as i32 - 5));
    // Cut where the weight times x^deg is below the working precision. The
    // degree term keeps high moments from being clipped.
    let threshold = (digits as f64 + 10.0) * std::f64::consts::LN_10;
    let negligible = |x: f64| {
        n_weight * (pot.eval(x) - v_min) - deg_needed as f64 * x.abs().max(1.0).ln() > threshold
    };
    let lo = edge(x_min, -1.0, &negligible);
    let hi = edge(x_min, 1.0, &negligible);

    let mut nodes = 129;
    let mut rule = assemble(pot, n_weight, lo, hi, nodes, prec, v_min, target);
    let mut moments = rule_moments(&rule, deg_needed);
    loop {
        nodes = 2 * (nodes - 1) + 1;
        if nodes > NODE_BUDGET {
            return Err(Error::Quadrature(format!(
                "{digits} digits not reached with {NODE_BUDGET} nodes on [{lo:.3}, {hi:.3}]"
            )));
        }
        let finer = assemble(pot, n_weight, lo, hi, nodes, prec, v_min, target);
        let next = rule_moments(&finer, deg_needed);
        let worst = moments
            .iter()
            .zip(&next)
            .map(|((m0, s0), (m1, _))| {
                let d = Float::with_val(prec, m0 - m1);
                (d / s0).abs().to_f64()
            })
            .fold(0.0, f64::max);
        rule = finer;
        moments = next;
        // The error of the coarser rule bounds that of the finer one by a wide margin.
        if worst < target {
            return Ok(rule);
        }
    }
}

/// Scans from `start` in direction `dir` and returns the first abscissa beyond
/// which the weight stays negligible.
fn edge(start: f64, dir: f64, negligible: &impl Fn(f64) -> bool) -> f64 {
    let mut reach = 1.0;
    while !(negligible(start + dir * reach) && negligible(start + dir * 2.0 * reach)) {
        reach *= 2.0;
        if reach > 1e8 {
            break;
        }
    }
    // Walk outward on a fine grid and keep the last point that still matters.
    let far = 2.0 * reach;
    let steps = 4096;
    let mut last_needed = 0.0;
    for i in 0..=steps {
        let d = far * i as f64 / steps as f64;
        if !negligible(start + dir * d) {
            last_needed = d;
        }
    }
    start + dir * (last_needed + far / steps as f64)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    pot: &Potential,
    n_weight: f64,
    lo: f64,
    hi: f64,
    count: usize,
    prec: u32,
    v_min: f64,
    target_error: f64,
) -> QuadratureRule {
    let lo_mp = Float::with_val(prec, lo);
    let width = Float::with_val(prec, hi - lo);
    let step = Float::with_val(prec, &width / (count - 1) as u32);
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for i in 0..count {
        let x = Float::with_val(prec, &step * i as u32) + &lo_mp;
        let expo = (pot.eval_mp(&x) - v_min) * (-n_weight);
        let mut w = Float::with_val(prec, expo.exp() * &step);
        if i == 0 || i == count - 1 {
            w /= 2;
        }
        nodes.push(x);
        weights.push(w);
    }
    QuadratureRule {
        nodes,
        weights,
        domain: (lo, hi),
        target_error,
        v_min,
        n_weight,
        prec,
    }
}

/// Moments `Σ w x^k` with their absolute counterparts `Σ w |x|^k`.
fn rule_moments(rule: &QuadratureRule, deg: usize) -> Vec<(Float, Float)> {
    let prec = rule.prec;
    let mut out = vec![(Float::with_val(prec, 0), Float::with_val(prec, 0)); deg + 1];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let mut p = w.clone();
        let ax = Float::with_val(prec, x.abs_ref());
        let mut q = w.clone();
        for slot in out.iter_mut() {
            slot.0 += &p;
            slot.1 += &q;
            p *= x;
            q *= &ax;
        }
    }
    out
}
