//! Free-energy minimization over filling fractions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::solve::{initial_endpoints, solve_multi_cut};
use super::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::gauss_legendre;
use crate::riemann::PeriodData;

/// Result of [`optimize_fillings`].
#[derive(Debug, Clone)]
pub struct FillingOptimum {
    /// `ε*`, all `s` entries.
    pub fillings: Vec<f64>,
    /// `ζ_i = -(1/2πi) ∂F/∂ε_i` at `ε*`, `i < s`; real part.
    pub zeta: Vec<f64>,
    /// Imaginary parts of `ζ` (zero up to round-off at the optimum).
    pub zeta_imag: Vec<f64>,
    pub measure: EquilibriumMeasure,
    pub iterations: usize,
}

impl EquilibriumMeasure {
    /// `∂F/∂ε_i = -∮_{B_i} ω dx = Σ_{k≥i} (Φ(b_k) - Φ(a_{k+1}))` for `i < s`,
    /// with `B_i` the sum of the gap cycles `i..s-1`.
    pub fn free_energy_gradient(&self) -> Vec<Complex64> {
        let e = self.endpoints();
        let s = self.s();
        let gaps: Vec<Complex64> = (0..s - 1)
            .map(|k| {
                self.phi(Complex64::new(e[2 * k + 1], 0.0))
                    - self.phi(Complex64::new(e[2 * k + 2], 0.0))
            })
            .collect();
        (0..s - 1).map(|i| gaps[i..].iter().sum()).collect()
    }
}

fn full_fillings(t: f64, head: &[f64]) -> Vec<f64> {
    let mut f = head.to_vec();
    f.push(t - head.iter().sum::<f64>());
    f
}

/// Minimizes `Re F` over fillings by Newton on `Re ∂F/∂ε` with Hessian
/// `Re(-2πi τ) = 2π Im τ`.
pub fn optimize_fillings(pot: &Potential, t: f64, s: usize) -> Result<FillingOptimum> {
    if s < 2 {
        return Err(Error::InvalidArgument(
            "filling optimization needs s >= 2".into(),
        ));
    }
    let g = s - 1;
    let e0 = initial_endpoints(pot, t, s)?;
    // Start from the masses the initial guess carries under the one-cut density, or equal shares.
    let mut eps: Vec<f64> = if pot.is_even() && s == 2 {
        vec![0.5 * t]
    } else {
        vec![t / s as f64; g]
    };
    let mut meas = solve_multi_cut(pot, t, s, &full_fillings(t, &eps), Some(&e0))
        .or_else(|_| solve_multi_cut(pot, t, s, &full_fillings(t, &eps), None))?;
    for iter in 0..60 {
        let grad = meas.free_energy_gradient();
        let re: Vec<f64> = grad.iter().map(|z| z.re).collect();
        let norm = re.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm < 1e-11 {
            let zeta_c: Vec<Complex64> = grad
                .iter()
                .map(|z| Complex64::i() * z / (2.0 * PI))
                .collect();
            return Ok(FillingOptimum {
                fillings: full_fillings(t, &eps),
                zeta: zeta_c.iter().map(|z| z.re).collect(),
                zeta_imag: zeta_c.iter().map(|z| z.im).collect(),
                measure: meas,
                iterations: iter,
            });
        }
        let periods = PeriodData::new(meas.endpoints())?;
        let tau = periods.tau();
        let hess = DMatrix::from_fn(g, g, |i, j| 2.0 * PI * tau[(i, j)].im);
        let Some(step) = hess.lu().solve(&(-DVector::from_vec(re.clone()))) else {
            return Err(Error::Numerical("Hessian 2π Im τ is singular".into()));
        };
        // Keep every filling positive.
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = eps
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + lambda * d)
                .collect();
            let full = full_fillings(t, &trial);
            if full.iter().all(|&f| f > 0.0) {
                if let Ok(m) = solve_multi_cut(pot, t, s, &full, Some(meas.endpoints())) {
                    eps = trial;
                    meas = m;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-3 {
                return Err(Error::Newton {
                    iters: iter,
                    residual: norm,
                    residuals: re,
                });
            }
        }
    }
    Err(Error::Numerical(
        "filling optimization did not converge".into(),
    ))
}

/// `Re F(to) - Re F(from)` by integrating `Re ∂F/∂ε` along the straight
/// segment between two filling vectors (first `s - 1` entries).
pub fn free_energy_difference(
    pot: &Potential,
    t: f64,
    s: usize,
    from: &[f64],
    to: &[f64],
    init: &[f64],
) -> Result<f64> {
    let mut err = None;
    let mut e = init.to_vec();
    let v = gauss_legendre(0.0, 1.0, 6, |u| {
        let eps: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + u * (b - a)).collect();
        match solve_multi_cut(pot, t, s, &full_fillings(t, &eps), Some(&e)) {
            Ok(m) => {
                e = m.endpoints().to_vec();
                let grad = m.free_energy_gradient();
                grad.iter()
                    .zip(from.iter().zip(to))
                    .map(|(g, (a, b))| g.re * (b - a))
                    .sum()
            }
            Err(x) => {
                err = Some(x);
                0.0
            }
        }
    });
    match err {
        Some(x) => Err(x),
        None => Ok(v),
    }
}
